#pragma once

// Independent reference computations used by the unit and acceptance suites.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dwlab/datagen.hpp"
#include "dwlab/models.hpp"
#include "dwlab/rng.hpp"

namespace dwlab::oracle {

/// Central finite differences of objective() in every coordinate of theta.
inline std::vector<double> finite_difference_grad(const ModelParams& p, const Dataset& batch, const LossSpec& loss,
                                                  const std::vector<double>& w, double step = 1e-5) {
    std::vector<double> g(p.theta.size());
    ModelParams probe = p;
    for (std::size_t k = 0; k < p.theta.size(); ++k) {
        probe.theta[k] = p.theta[k] + step;
        const double up = objective(probe, batch, loss, w);
        probe.theta[k] = p.theta[k] - step;
        const double down = objective(probe, batch, loss, w);
        probe.theta[k] = p.theta[k];
        g[k] = (up - down) / (2.0 * step);
    }
    return g;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        diff += (a[k] - b[k]) * (a[k] - b[k]);
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    const double denom = std::sqrt(na) + std::sqrt(nb);
    return denom < 1e-12 ? std::sqrt(diff) : std::sqrt(diff) / denom;
}

/// A random (model, loss, batch, weights) instance for gradient checks.
struct GradInstance {
    ModelParams params;
    Dataset batch;
    LossSpec loss;
    std::vector<double> weights;
};

inline GradInstance random_grad_instance(std::uint64_t seed) {
    Engine eng(derive_seed(seed, {77}));
    const int combo = static_cast<int>(seed % 8);
    const ModelKind kind = combo % 2 == 0 ? ModelKind::linear : ModelKind::mlp2;
    const LossKind lk = std::array{LossKind::exponential, LossKind::logistic, LossKind::squared,
                                   LossKind::cross_entropy}[static_cast<std::size_t>(combo / 2)];
    const bool multi = lk == LossKind::cross_entropy;
    const std::size_t d = 2 + static_cast<std::size_t>(seed % 3);
    const std::size_t C = multi ? 3 : 1;
    GradInstance g;
    g.params = init_params(kind, {d, 4, C}, derive_seed(seed, {1}));
    for (double& v : g.params.theta) v *= 0.5;
    g.loss.kind = lk;
    g.loss.lambda = (seed % 3 == 0) ? 0.05 : 0.0;
    g.loss.r = (seed % 5 == 0) ? 3.0 : 2.0;
    g.batch.n = 6;
    g.batch.d = d;
    g.batch.num_classes = multi ? 3 : 2;
    for (std::size_t i = 0; i < g.batch.n; ++i) {
        for (std::size_t j = 0; j < d; ++j) g.batch.features.push_back(standard_normal(eng));
        const int cls = static_cast<int>(std::uniform_int_distribution<int>(0, g.batch.num_classes - 1)(eng));
        g.batch.class_of.push_back(cls);
        g.batch.labels.push_back(label_of_class(cls, g.batch.num_classes));
        g.batch.noise_flag.push_back(0);
        g.weights.push_back(0.1 + 2.0 * uniform01(eng));
    }
    return g;
}

}  // namespace dwlab::oracle
