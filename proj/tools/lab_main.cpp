#include "dwlab/labcli.hpp"

int main(int argc, char** argv) { return dwlab::lab::main(argc, argv); }
