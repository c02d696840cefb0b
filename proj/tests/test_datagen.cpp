#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "dwlab/datagen.hpp"
#include "dwlab/errors.hpp"
#include "dwlab/rng.hpp"

using namespace dwlab;

namespace {

DatasetSpec two_class_1d(std::size_t a, std::size_t b, std::uint64_t seed) {
    return {{{-2.0}, {2.0}}, {{1.0}, {1.0}}, {a, b}, seed};
}

DatasetSpec three_class_2d(std::uint64_t seed) {
    return {{{0.0, 0.0}, {3.0, 0.0}, {0.0, 3.0}}, {{1.0}, {0.5, 2.0}, {1.0}}, {20, 30, 25}, seed};
}

}  // namespace

TEST_CASE("gaussian mixture construction contract") {
    const auto ds = gen_gaussian_mixture(two_class_1d(50, 50, 7));
    CHECK(ds.n == 100);
    CHECK(ds.d == 1);
    CHECK(ds.binary());
    const auto counts = ds.class_counts();
    CHECK(counts[0] == 50);
    CHECK(counts[1] == 50);
    CHECK(std::all_of(ds.noise_flag.begin(), ds.noise_flag.end(), [](auto f) { return f == 0; }));
    for (std::size_t i = 0; i < ds.n; ++i) CHECK(ds.labels[i] == (ds.class_of[i] == 0 ? -1 : 1));
}

TEST_CASE("gaussian mixture rejects bad specs") {
    CHECK_THROWS_AS(gen_gaussian_mixture(two_class_1d(0, 10, 1)), SpecificationError);
    DatasetSpec mismatch{{{0.0}, {1.0, 2.0}}, {{1.0}, {1.0}}, {5, 5}, 1};
    CHECK_THROWS_AS(gen_gaussian_mixture(mismatch), SpecificationError);
}

TEST_CASE("imbalance ratio") {
    CHECK(two_class_1d(100, 10, 1).imbalance_ratio() == doctest::Approx(10.0));
}

TEST_CASE("generation is deterministic in the seed") {
    const auto a = gen_gaussian_mixture(three_class_2d(11));
    const auto b = gen_gaussian_mixture(three_class_2d(11));
    const auto c = gen_gaussian_mixture(three_class_2d(12));
    CHECK(a.features == b.features);
    CHECK(a.features != c.features);
    CHECK(a.labels == std::vector<int>(a.labels));
    CHECK(a.labels.front() == 1);
    CHECK(a.labels.back() == 3);
}

TEST_CASE("label noise: zero and full rates") {
    const auto ds = gen_gaussian_mixture(two_class_1d(40, 40, 3));
    const auto same = apply_label_noise(ds, {0.0, NoiseKind::uniform_label, 0.0, FeatureDirection::adversarial, 9});
    CHECK(same.labels == ds.labels);
    CHECK(same.noise_flag == ds.noise_flag);

    const auto all = apply_label_noise(ds, {1.0, NoiseKind::uniform_label, 0.0, FeatureDirection::adversarial, 9});
    for (std::size_t i = 0; i < ds.n; ++i) {
        CHECK(all.labels[i] == -ds.labels[i]);
        CHECK(all.noise_flag[i] == 1);
    }
}

TEST_CASE("label noise matches an independent replay of the Bernoulli stream") {
    DatasetSpec spec{{{0.0}, {1.0}}, {{1.0}, {1.0}}, {500, 500}, 5};
    const auto ds = gen_gaussian_mixture(spec);
    const auto noisy = apply_label_noise(ds, {0.1, NoiseKind::uniform_label, 0.0, FeatureDirection::adversarial, 3});
    Engine replay(derive_seed(3, {0}));
    std::size_t expected = 0;
    for (std::size_t i = 0; i < ds.n; ++i) expected += std::uniform_real_distribution<double>(0.0, 1.0)(replay) < 0.1;
    const auto flipped = static_cast<std::size_t>(std::count(noisy.noise_flag.begin(), noisy.noise_flag.end(), 1));
    CHECK(flipped == expected);
}

TEST_CASE("flip noise is the cyclic class shift; uniform noise never keeps the label") {
    const auto ds = gen_gaussian_mixture(three_class_2d(4));
    const auto flip = apply_label_noise(ds, {1.0, NoiseKind::flip_label, 0.0, FeatureDirection::adversarial, 2});
    for (std::size_t i = 0; i < ds.n; ++i) CHECK(flip.labels[i] == ds.labels[i] % 3 + 1);
    const auto uni = apply_label_noise(ds, {1.0, NoiseKind::uniform_label, 0.0, FeatureDirection::adversarial, 2});
    std::set<int> seen;
    for (std::size_t i = 0; i < ds.n; ++i) {
        CHECK(uni.labels[i] != ds.labels[i]);
        seen.insert(uni.labels[i]);
    }
    CHECK(seen.size() == 3);
    CHECK(uni.class_of == ds.class_of);
}

TEST_CASE("label noise with a feature spec is the wrong operation") {
    const auto ds = gen_gaussian_mixture(two_class_1d(5, 5, 1));
    CHECK_THROWS_AS(apply_label_noise(ds, {0.5, NoiseKind::feature, 0.1, FeatureDirection::adversarial, 1}),
                    WrongOperationError);
    CHECK_THROWS_AS(apply_label_noise(ds, {1.5, NoiseKind::uniform_label, 0.0, FeatureDirection::adversarial, 1}),
                    SpecificationError);
}

TEST_CASE("label-noise marginal stays within three standard errors of the binomial rate") {
    DatasetSpec spec{{{0.0}, {1.0}}, {{1.0}, {1.0}}, {500, 500}, 1};
    const auto ds = gen_gaussian_mixture(spec);
    const double pi = 0.1;
    const std::size_t seeds = 200;
    double flipped = 0.0;
    for (std::uint64_t s = 0; s < seeds; ++s) {
        const auto noisy = apply_label_noise(ds, {pi, NoiseKind::uniform_label, 0.0, FeatureDirection::adversarial, s});
        flipped += static_cast<double>(std::count(noisy.noise_flag.begin(), noisy.noise_flag.end(), 1));
    }
    const double trials = static_cast<double>(ds.n * seeds);
    const double se = std::sqrt(pi * (1.0 - pi) / trials);
    CHECK(std::abs(flipped / trials - pi) <= 3.0 * se);
}

TEST_CASE("feature noise geometry") {
    Dataset ds;
    ds.n = 3;
    ds.d = 2;
    ds.features = {0.0, 0.0, 1.0, 1.0, 2.0, -1.0};
    ds.labels = {1, -1, 1};
    ds.class_of = {1, 0, 1};
    ds.noise_flag = {0, 0, 0};
    const std::vector<double> grad = {1.0, 0.0, 0.0, 0.0, 3.0, 4.0};

    const auto adv = apply_feature_noise(ds, {0.0, NoiseKind::feature, 0.5, FeatureDirection::adversarial, 0}, grad);
    CHECK(adv.dataset.features[0] == doctest::Approx(-0.5));
    CHECK(adv.dataset.features[1] == doctest::Approx(0.0));
    CHECK(adv.skipped == 1);
    CHECK(adv.dataset.noise_flag == std::vector<std::uint8_t>{1, 0, 1});
    for (std::size_t i : {0u, 2u}) {
        double dot = 0.0, len2 = 0.0;
        for (std::size_t j = 0; j < 2; ++j) {
            const double dx = adv.dataset.features[i * 2 + j] - ds.features[i * 2 + j];
            dot += dx * grad[i * 2 + j];
            len2 += dx * dx;
        }
        CHECK(dot < 0.0);
        CHECK(std::sqrt(len2) == doctest::Approx(0.5));
    }
    const auto pro = apply_feature_noise(ds, {0.0, NoiseKind::feature, 0.5, FeatureDirection::promoted, 0}, grad);
    CHECK(pro.dataset.features[4] == doctest::Approx(2.0 + 0.3));
    CHECK(pro.dataset.features[5] == doctest::Approx(-1.0 + 0.4));

    const auto none = apply_feature_noise(ds, {0.0, NoiseKind::feature, 0.0, FeatureDirection::adversarial, 0}, grad);
    CHECK(none.dataset.features == ds.features);
}

TEST_CASE("fold plans") {
    auto sizes = [](const FoldPlan& p) {
        std::vector<int> s(static_cast<std::size_t>(p.K), 0);
        for (int f : p.fold_of) ++s[static_cast<std::size_t>(f)];
        return s;
    };
    CHECK(sizes(make_fold_plan(10, 5, 1)) == std::vector<int>{2, 2, 2, 2, 2});
    auto s11 = sizes(make_fold_plan(11, 5, 1));
    std::sort(s11.begin(), s11.end());
    CHECK(s11 == std::vector<int>{2, 2, 2, 2, 3});
    CHECK(make_fold_plan(37, 5, 9).fold_of == make_fold_plan(37, 5, 9).fold_of);
    CHECK_THROWS_AS(make_fold_plan(4, 5, 1), SpecificationError);
    CHECK_THROWS_AS(make_fold_plan(4, 1, 1), SpecificationError);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto plan = make_fold_plan(23 + seed, 4, seed);
        const auto s = sizes(plan);
        CHECK(std::accumulate(s.begin(), s.end(), 0) == static_cast<int>(23 + seed));
        CHECK(*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()) <= 1);
        std::size_t covered = 0;
        for (int k = 0; k < plan.K; ++k) covered += plan.members(k).size();
        CHECK(covered == 23 + seed);
    }
}

TEST_CASE("dataset CSV round-trips bit-exactly") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto ds = gen_gaussian_mixture(three_class_2d(seed));
        ds = apply_label_noise(ds, {0.3, NoiseKind::uniform_label, 0.0, FeatureDirection::adversarial, seed});
        std::stringstream ss;
        save_dataset_csv(ds, ss);
        const auto back = load_dataset_csv(ss);
        CHECK(back.features == ds.features);
        CHECK(back.labels == ds.labels);
        CHECK(back.noise_flag == ds.noise_flag);
        CHECK(back.class_of == ds.class_of);
        CHECK(back.num_classes == 3);
    }
    std::stringstream header_only;
    save_dataset_csv(gen_gaussian_mixture(two_class_1d(1, 1, 0)), header_only);
    CHECK(header_only.str().rfind("f0,label,noise_flag,class\n", 0) == 0);
}
