#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dwlab/datagen.hpp"

namespace dwlab {

/// Hard-margin direction through the origin of a linearly separable binary set.
/// dual holds the optimal dual coefficients normalized to sum 1; the support
/// set lists the samples with a positive coefficient.
struct MaxMarginSolution {
    std::vector<double> direction;
    double gamma_star = 0.0;
    std::vector<double> dual;
    std::vector<std::size_t> support_set;
};

/// Iterative solver: coordinate ascent on the dual of
///   min |theta|^2  s.t.  y_i theta.x_i >= 1,
/// followed by an exact re-solve on the detected active set.
MaxMarginSolution solve_max_margin(const Dataset& ds);

/// Exhaustive oracle for tiny instances: tries every candidate support subset
/// of size <= d+1 and keeps the feasible one of largest margin.
MaxMarginSolution brute_force_max_margin(const Dataset& ds);

std::string solution_to_json(const MaxMarginSolution& s);
MaxMarginSolution solution_from_json(const std::string& text);

}  // namespace dwlab
