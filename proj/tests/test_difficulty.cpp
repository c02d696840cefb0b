#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dwlab/difficulty.hpp"
#include "dwlab/errors.hpp"
#include "dwlab/rng.hpp"

using namespace dwlab;

namespace {

Dataset two_blobs(std::uint64_t seed, std::size_t per_class, double sep = 2.0) {
    DatasetSpec spec;
    spec.class_means = {{-sep, 0.5}, {sep, -0.5}};
    spec.class_variances = {{1.0}, {1.0}};
    spec.class_counts = {per_class, per_class};
    spec.seed = seed;
    return gen_gaussian_mixture(spec);
}

ErrorEstimatorConfig small_config(LossKind loss, std::size_t repeats = 10) {
    ErrorEstimatorConfig cfg;
    cfg.folds = 5;
    cfg.repeats = repeats;
    cfg.family.kind = ModelKind::linear;
    cfg.family.loss.kind = loss;
    cfg.family.hyper = {0.1, 40, 11};
    cfg.master_seed = 21;
    return cfg;
}

}  // namespace

TEST_CASE("closed-form error law") {
    CHECK(closed_form_error(0.0, 0.0).value == doctest::Approx(1.0));
    CHECK(closed_form_error(1.0, 2.0).value == doctest::Approx(1.0));
    CHECK(closed_form_error(2.0, 0.0).value == doctest::Approx(0.135335).epsilon(1e-6));
    CHECK(closed_form_error(-1000.0, 0.0).overflow);
    CHECK_THROWS_AS(closed_form_error(0.0, -1.0), SpecificationError);
    // strictly decreasing in mu, increasing in sigma2
    for (double mu = -2.0; mu < 3.0; mu += 0.25) {
        for (double s2 = 0.0; s2 < 3.0; s2 += 0.25) {
            CHECK(closed_form_error(mu + 0.1, s2).value < closed_form_error(mu, s2).value);
            CHECK(closed_form_error(mu, s2 + 0.1).value > closed_form_error(mu, s2).value);
        }
    }
}

TEST_CASE("epistemic uncertainty arithmetic") {
    const std::vector<double> same{3.0, 3.0, 3.0};
    CHECK(epistemic_uncertainty(same, 3, 1, 0.0)[0] == doctest::Approx(0.0));
    const std::vector<double> two{0.0, 2.0};
    CHECK(epistemic_uncertainty(two, 2, 1, 0.0)[0] == doctest::Approx(1.0));
    CHECK(epistemic_uncertainty(two, 2, 1, 0.5)[0] == doctest::Approx(1.5));
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(epistemic_uncertainty(one, 1, 1, 0.0), SpecificationError);
    // vector outputs: squared norms
    const std::vector<double> vec{0.0, 0.0, 2.0, 2.0};
    CHECK(epistemic_uncertainty(vec, 2, 1, 0.0, 2)[0] == doctest::Approx(2.0));
}

TEST_CASE("gaussianity z-scores") {
    std::vector<double> sym;
    for (int k = 0; k < 3; ++k) sym.insert(sym.end(), {-1.0, 0.0, 1.0});
    CHECK(gaussianity_z(sym).z_skew == doctest::Approx(0.0));
    CHECK_THROWS_AS(gaussianity_z(std::vector<double>(9, 1.0)), DegenerateSampleError);
    CHECK_THROWS_AS(gaussianity_z(std::vector<double>{1, 2, 3}), SpecificationError);

    int inside = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Engine eng(seed);
        std::vector<double> x(1000);
        for (double& v : x) v = standard_normal(eng);
        if (std::abs(gaussianity_z(x).z_skew) <= 1.96) ++inside;
    }
    CHECK(inside >= 180);
    CHECK(inside <= 198);

    Engine eng(1);
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> skewed(1000);
    for (double& v : skewed) v = ex(eng);
    CHECK(gaussianity_z(skewed).z_skew > 1.96);
}

TEST_CASE("log-normal law on synthetic Gaussian margins") {
    std::vector<double> flat(20, 0.7);
    CHECK(lognormal_law_gaps({flat})[0] == doctest::Approx(0.0));

    auto gaps_for = [](std::size_t R) {
        Engine eng(99);
        std::vector<std::vector<double>> samples;
        for (int i = 0; i < 200; ++i) {
            const double mu = 3.0 * uniform01(eng);
            const double sd = 0.1 + 0.7 * uniform01(eng);
            std::vector<double> m(R);
            for (double& v : m) v = mu + sd * standard_normal(eng);
            samples.push_back(std::move(m));
        }
        return stats::median(lognormal_law_gaps(samples));
    };
    const double g500 = gaps_for(500);
    const double g10 = gaps_for(10);
    CHECK(g500 <= 0.05);
    MESSAGE("median gap R=500: " << g500 << ", R=10: " << g10);
    CHECK_THROWS_AS(lognormal_law_gaps({{}}), SpecificationError);
}

TEST_CASE("estimator: squared-loss decomposition and reproducibility") {
    const auto ds = two_blobs(3, 20);
    auto cfg = small_config(LossKind::squared);
    const auto p = estimate_error_profile(ds, cfg);
    CHECK(p.decomposition == Decomposition::exact_squared);
    REQUIRE(p.size() == ds.n);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p.err[i] >= 0.0);
        CHECK(std::abs(p.bias[i] + p.variance[i] - p.err[i]) <= 1e-12);
        CHECK(p.margin_samples[i].size() == cfg.repeats);
    }
    cfg.jobs = 3;
    const auto q = estimate_error_profile(ds, cfg);
    CHECK(q.err == p.err);
    CHECK(q.mu_hat == p.mu_hat);
    CHECK(q.uncertainty == p.uncertainty);
    CHECK(q.margin_input_grad == p.margin_input_grad);
}

TEST_CASE("estimator: perturb mode uncertainty equals the variance term") {
    const auto ds = two_blobs(4, 15);
    auto cfg = small_config(LossKind::squared, 8);
    cfg.mode = EstimatorMode::perturb;
    const auto p = estimate_error_profile(ds, cfg);
    CHECK(p.delta_used > 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p.uncertainty[i] - p.variance[i]) <= 1e-9);
}

TEST_CASE("estimator: a planted mislabeled point is harder than the clean ones") {
    auto ds = two_blobs(5, 25, 3.0);
    ds.labels[0] = -ds.labels[0];
    ds.noise_flag[0] = 1;
    const auto p = estimate_error_profile(ds, small_config(LossKind::logistic));
    double clean = 0.0;
    for (std::size_t i = 1; i < p.size(); ++i) clean += p.err[i];
    clean /= static_cast<double>(p.size() - 1);
    CHECK(p.err[0] > clean);
    CHECK(p.mu_hat[0] < 0.0);
}

TEST_CASE("estimator: mirror pair has matching error") {
    // x -> -x with the opposite label is a symmetry of a bias-free linear model
    Dataset ds = two_blobs(6, 20);
    Dataset mirrored = ds;
    for (double& v : mirrored.features) v = -v;
    for (auto& y : mirrored.labels) y = -y;
    for (auto& c : mirrored.class_of) c = 1 - c;
    Dataset both = ds;
    both.n *= 2;
    both.features.insert(both.features.end(), mirrored.features.begin(), mirrored.features.end());
    both.labels.insert(both.labels.end(), mirrored.labels.begin(), mirrored.labels.end());
    both.class_of.insert(both.class_of.end(), mirrored.class_of.begin(), mirrored.class_of.end());
    both.noise_flag.insert(both.noise_flag.end(), mirrored.noise_flag.begin(), mirrored.noise_flag.end());
    const auto p = estimate_error_profile(both, small_config(LossKind::logistic, 40));
    std::size_t within = 0;
    for (std::size_t i = 0; i < ds.n; ++i) {
        const std::size_t j = i + ds.n;
        std::vector<double> li, lj;
        for (double m : p.margin_samples[i]) li.push_back(logistic_loss(m));
        for (double m : p.margin_samples[j]) lj.push_back(logistic_loss(m));
        const double se = std::sqrt((stats::variance(li) + stats::variance(lj)) / 40.0);
        if (std::abs(p.err[i] - p.err[j]) <= 2.0 * se + 1e-12) ++within;
    }
    CHECK(within >= ds.n * 9 / 10);
}

TEST_CASE("estimator: adversarial feature noise raises error") {
    const auto ds = two_blobs(7, 25, 1.5);
    const auto cfg = small_config(LossKind::exponential);
    const auto base = estimate_error_profile(ds, cfg);
    NoiseSpec ns;
    ns.kind = NoiseKind::feature;
    ns.epsilon = 0.5;
    const auto noisy = apply_feature_noise(ds, ns, base.margin_input_grad);
    CHECK(noisy.skipped == 0);
    const auto after = estimate_error_profile(noisy.dataset, cfg);
    CHECK(stats::mean(after.err) > stats::mean(base.err));
}

TEST_CASE("estimator: configuration errors") {
    const auto ds = two_blobs(8, 3);
    auto cfg = small_config(LossKind::exponential);
    cfg.folds = 10;
    CHECK_THROWS_AS(estimate_error_profile(ds, cfg), SpecificationError);
    cfg.folds = 1;
    CHECK_THROWS_AS(estimate_error_profile(ds, cfg), SpecificationError);
}

TEST_CASE("estimator: diverging runs are discarded and too many fail the estimate") {
    const auto ds = two_blobs(9, 10);
    auto cfg = small_config(LossKind::exponential, 4);
    cfg.family.hyper.learning_rate = 1e6;
    cfg.family.hyper.epochs = 60;
    CHECK_THROWS_AS(estimate_error_profile(ds, cfg), EstimationFailure);
}

TEST_CASE("profile CSV header") {
    const auto ds = two_blobs(10, 10);
    const auto p = estimate_error_profile(ds, small_config(LossKind::exponential, 2));
    std::stringstream ss;
    save_profile_csv(p, ss);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "idx,err,bias,variance,mu_hat,sigma2_hat,uncertainty,z_skew,z_kurt,noise_flag,class");
    CHECK_THROWS_AS(verify_lognormal_law(estimate_error_profile(ds, small_config(LossKind::logistic, 2))),
                    SpecificationError);
}
