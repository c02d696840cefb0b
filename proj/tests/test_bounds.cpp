#include <doctest.h>

#include <cmath>

#include "dwlab/bounds.hpp"
#include "dwlab/errors.hpp"

using namespace dwlab;

namespace {

DiscreteDensityPair two_cell(double a, double b) {
    // p_s uniform, weights chosen so that p~_s = (a, b)
    return make_density_pair({0, 1}, {0.5, 0.5}, {0.5, 0.5}, {a, b});
}

Dataset line_set(std::vector<double> xs, std::vector<int> ys) {
    Dataset ds;
    ds.d = 1;
    ds.n = ys.size();
    ds.features = std::move(xs);
    ds.labels = ys;
    for (int y : ys) ds.class_of.push_back(y > 0 ? 1 : 0);
    ds.noise_flag.assign(ds.n, 0);
    return ds;
}

ModelParams unit_linear(double w) { return ModelParams{ModelKind::linear, {1, 0, 1}, {w}}; }

}  // namespace

TEST_CASE("chi-square divergence conventions") {
    const auto same = two_cell(1.0, 1.0);
    CHECK(chi2_divergence(same, Chi2Convention::paper) == doctest::Approx(0.0));
    CHECK(chi2_divergence(same, Chi2Convention::standard) == doctest::Approx(0.0));
    const auto skew = two_cell(0.8, 0.2);
    CHECK(skew.p_tilde_s[0] == doctest::Approx(0.8));
    CHECK(chi2_divergence(skew, Chi2Convention::paper) == doctest::Approx(1.08));
    CHECK(chi2_divergence(skew, Chi2Convention::standard) == doctest::Approx(0.5625));
}

TEST_CASE("chi-square divergence support rules") {
    const auto gap = make_density_pair({0, 1}, {1.0, 0.0}, {0.5, 0.5}, {1.0, 1.0});
    CHECK_THROWS_AS(chi2_divergence(gap, Chi2Convention::paper), SupportMismatchError);
    const auto hole = make_density_pair({0, 1}, {0.5, 0.5}, {1.0, 0.0}, {1.0, 1.0});
    CHECK_THROWS_AS(chi2_divergence(hole, Chi2Convention::standard), SupportMismatchError);
    CHECK_THROWS_AS(make_density_pair({0, 1}, {0.6, 0.6}, {0.5, 0.5}, {1.0, 1.0}), SpecificationError);
    CHECK_THROWS_AS(make_density_pair({0, 1}, {0.5, 0.5}, {0.5, 0.5}, {1.0, 0.0}), SpecificationError);
}

TEST_CASE("epsilon term") {
    BoundInputs in{0.5, 0.1, 2, 1.0, 100};
    CHECK(epsilon_term(in) == doctest::Approx(0.25656).epsilon(1e-5 / 0.25656));
    const double direct = std::sqrt(std::log(3.0)) / 10.0 + std::sqrt(std::log(10.0)) / 10.0;
    CHECK(std::abs(epsilon_term(in) - direct) <= 1e-15);
    in.n = 100000000;
    CHECK(epsilon_term(in) < 1e-3);
    in.delta = 1.0;
    CHECK_THROWS_AS(epsilon_term(in), DomainError);
    BoundInputs flat{2.0, 0.1, 2, 1.0, 100};
    CHECK_THROWS_AS(epsilon_term(flat), DomainError);
}

TEST_CASE("term II") {
    const auto same = two_cell(1.0, 1.0);
    BoundInputs in{1.0, 0.1, 2, 1.0, 100};
    CHECK(term_II(same, in, Chi2Convention::paper) == doctest::Approx(0.070711).epsilon(1e-5));
    BoundInputs deep{0.5, 0.1, 3, 2.0, 400};
    CHECK(term_II(same, deep, Chi2Convention::standard) == doctest::Approx(2.0 / (0.5 * 3.0 * 20.0)));
    double last = 0.0;
    for (double a = 0.5; a < 0.99; a += 0.05) {
        const auto pair = two_cell(a, 1.0 - a);
        const double v = term_II(pair, in, Chi2Convention::standard);
        CHECK(v >= last);
        last = v;
    }
}

TEST_CASE("term I") {
    const auto ds = line_set({1.0, 2.0, -3.0}, {1, 1, -1});
    const std::vector<double> ratios{0.5, 1.0, 2.0};
    const std::vector<ModelParams> one{unit_linear(1.0)};
    CHECK(term_I(one, ds, ratios, 0.5) == doctest::Approx(0.0));
    CHECK(term_I(one, ds, ratios, 10.0) == doctest::Approx(3.5 / 3.0));
    // parameter scale does not matter
    const std::vector<ModelParams> big{unit_linear(50.0)};
    CHECK(term_I(big, ds, ratios, 1.5) == doctest::Approx(term_I(one, ds, ratios, 1.5)));
    // sample 0 (margin 1) violates gamma 1.5 under both models, sample 1 (margin 2) under neither,
    // sample 2 violates only under the flipped model
    const std::vector<ModelParams> two{unit_linear(1.0), ModelParams{ModelKind::linear, {1, 0, 1}, {-1.0}}};
    const double expected = (0.5 * 1.0 + 1.0 * 0.5 + 2.0 * 0.5) / 3.0;
    CHECK(term_I(two, ds, ratios, 1.5) == doctest::Approx(expected));
}

TEST_CASE("test error") {
    const auto ds = line_set({1.0, 2.0, -3.0, 0.0}, {1, 1, -1, 1});
    CHECK(test_error(unit_linear(1.0), ds) == doctest::Approx(0.25));
    CHECK(test_error(unit_linear(-1.0), ds) == doctest::Approx(1.0));
    const auto clean = line_set({1.0, -1.0}, {1, -1});
    CHECK(test_error(unit_linear(1.0), clean) == 0.0);
    CHECK_THROWS_AS(test_error(unit_linear(1.0), line_set({}, {})), SpecificationError);
}

TEST_CASE("class cell densities") {
    Dataset ds = line_set({1, 2, 3, 4, -1}, {1, 1, 1, 1, -1});
    const std::vector<double> equal(5, 1.0);
    const auto same = class_cell_densities(ds, equal);
    CHECK(chi2_divergence(same.pair, Chi2Convention::paper) == doctest::Approx(0.0));
    for (double r : same.ratios) CHECK(r == doctest::Approx(1.0));

    // weighting the small class up drifts away from the empirical target
    const std::vector<double> up{0.5, 0.5, 0.5, 0.5, 3.0};
    const auto moved = class_cell_densities(ds, up);
    CHECK(chi2_divergence(moved.pair, Chi2Convention::paper) > 0.0);
    CHECK(moved.ratios[4] < 1.0);
    CHECK(moved.ratios[0] > 1.0);

    // balanced target priors
    const std::vector<double> priors{0.5, 0.5};
    const auto bal = class_cell_densities(ds, equal, priors);
    CHECK(bal.pair.p_t[0] == doctest::Approx(0.5));
    CHECK(bal.ratios[4] == doctest::Approx(0.5 / 0.2));

    ds.noise_flag[0] = 1;
    const auto clean = class_cell_densities(ds, equal, {}, true);
    CHECK(clean.ratios[0] == 0.0);
    CHECK_THROWS_AS(chi2_divergence(clean.pair, Chi2Convention::paper), SupportMismatchError);
    CHECK(chi2_divergence(clean.pair, Chi2Convention::standard) >= 0.0);
}

TEST_CASE("bound evaluation reduces to the unweighted case when P_t = P_s") {
    const auto train = line_set({1, 2, 3, -1, -2, -3}, {1, 1, 1, -1, -1, -1});
    const auto test = line_set({0.5, -0.5}, {1, -1});
    const std::vector<double> equal(6, 1.0);
    const auto cd = class_cell_densities(train, equal);
    const std::vector<ModelParams> models{unit_linear(2.0)};
    BoundInputs in{0.5, 0.05, 2, sup_norm(train), train.n};
    CHECK(in.L == doctest::Approx(3.0));
    const auto r = evaluate_bound(models, train, cd.ratios, test, cd.pair, in, Chi2Convention::paper);
    CHECK(r.D == doctest::Approx(0.0));
    CHECK(r.I == doctest::Approx(0.0));
    CHECK(r.total == doctest::Approx(r.I + r.II + r.III));
    CHECK(r.empirical == 0.0);
    CHECK(r.total >= r.empirical);
    CHECK(r.to_json().find("\"convention\":\"paper\"") != std::string::npos);
}
