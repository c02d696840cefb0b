#include "dwlab/benchmarks.hpp"

#include "dwlab/errors.hpp"
#include "dwlab/maxmargin.hpp"
#include "dwlab/rng.hpp"

namespace dwlab {

DatasetSpec standard_spec(std::uint64_t seed, std::size_t per_class) {
    DatasetSpec s;
    s.class_means = {{-1.0, -0.5}, {1.0, 0.5}};
    s.class_variances = {{1.0}, {1.0}};
    s.class_counts = {per_class, per_class};
    s.seed = seed;
    return s;
}

DatasetSpec imbalanced_spec(std::uint64_t seed, std::size_t large, std::size_t small) {
    DatasetSpec s;
    s.class_means = {{1.5, -0.5}, {-0.5, 1.5}};
    s.class_variances = {{1.0}, {1.0}};
    s.class_counts = {large, small};
    s.seed = seed;
    return s;
}

Dataset separable_benchmark(std::uint64_t seed, std::size_t n) {
    DatasetSpec s;
    s.class_means = {{-1.0, -1.0}, {1.0, 1.0}};
    s.class_variances = {{0.3, 0.05}, {0.05, 0.3}};
    s.class_counts = {n / 2, n - n / 2};
    for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
        s.seed = derive_seed(seed, {attempt});
        Dataset ds = gen_gaussian_mixture(s);
        try {
            solve_max_margin(ds);
            return ds;
        } catch (const NotSeparableError&) {
        }
    }
    throw NumericError("could not draw a separable benchmark");
}

Dataset test_split(const DatasetSpec& spec, std::size_t per_class_scale) {
    DatasetSpec t = spec;
    t.seed = derive_seed(spec.seed, {0x7e57});
    for (auto& c : t.class_counts) c *= per_class_scale;
    return gen_gaussian_mixture(t);
}

}  // namespace dwlab
