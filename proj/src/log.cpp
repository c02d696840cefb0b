#include "dwlab/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace dwlab::log {

Level threshold() {
    static const Level lvl = [] {
        const char* env = std::getenv("LAB_LOG");
        const std::string v = env ? env : "";
        if (v == "error") return Level::error;
        if (v == "info") return Level::info;
        if (v == "debug") return Level::debug;
        return Level::warn;
    }();
    return lvl;
}

void write(Level lvl, std::string_view msg) {
    if (static_cast<int>(lvl) > static_cast<int>(threshold())) return;
    static std::mutex mu;
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    std::lock_guard lock(mu);
    std::cerr << "[lab " << names[static_cast<int>(lvl)] << "] " << msg << '\n';
}

}  // namespace dwlab::log
