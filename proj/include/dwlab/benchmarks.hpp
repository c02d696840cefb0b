#pragma once

#include <cstdint>
#include <string>

#include "dwlab/datagen.hpp"

namespace dwlab {

/// Synthetic problems used by the property checks and the acceptance suite.
/// Each one is a pure function of its seed.

/// Two overlapping unit-variance Gaussians in 2-D, per_class samples each.
DatasetSpec standard_spec(std::uint64_t seed, std::size_t per_class = 100);

/// Same geometry with 100 samples in the large class and 10 in the small one.
/// The class means are not mirror images through the origin, so a bias-free
/// model cannot treat both classes alike.
DatasetSpec imbalanced_spec(std::uint64_t seed, std::size_t large = 100, std::size_t small = 10);

/// n points in 2-D that are linearly separable through the origin. Candidate
/// draws that are not separable are replaced by redrawing with the next
/// derived seed, so the result is still a pure function of seed.
Dataset separable_benchmark(std::uint64_t seed, std::size_t n = 100);

/// Held-out draw from the same distribution as a spec, with a distinct seed.
Dataset test_split(const DatasetSpec& spec, std::size_t per_class_scale = 1);

}  // namespace dwlab
