#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <span>

#include "dwlab/errors.hpp"
#include "dwlab/maxmargin.hpp"
#include "dwlab/rng.hpp"

using namespace dwlab;

namespace {

Dataset make_set(std::vector<double> xs, std::vector<int> ys, std::size_t d) {
    Dataset ds;
    ds.d = d;
    ds.n = ys.size();
    ds.features = std::move(xs);
    ds.labels = ys;
    for (int y : ys) ds.class_of.push_back(y > 0 ? 1 : 0);
    ds.noise_flag.assign(ds.n, 0);
    return ds;
}

// Points on either side of a random hyperplane through the origin, with a gap.
Dataset random_separable(std::uint64_t seed, std::size_t n, std::size_t d) {
    Engine eng(seed);
    std::vector<double> u(d);
    double norm = 0.0;
    for (double& v : u) {
        v = standard_normal(eng);
        norm += v * v;
    }
    for (double& v : u) v /= std::sqrt(norm);
    std::vector<double> xs;
    std::vector<int> ys;
    while (ys.size() < n) {
        std::vector<double> x(d);
        double proj = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            x[j] = 2.0 * standard_normal(eng);
            proj += x[j] * u[j];
        }
        if (std::abs(proj) < 0.2) continue;
        xs.insert(xs.end(), x.begin(), x.end());
        ys.push_back(proj > 0 ? 1 : -1);
    }
    return make_set(xs, ys, d);
}

double dot(const std::vector<double>& a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
}

void check_invariants(const MaxMarginSolution& s, const Dataset& ds) {
    double norm = 0.0;
    for (double v : s.direction) norm += v * v;
    CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < ds.n; ++i) {
        CHECK(ds.labels[i] * dot(s.direction, ds.row(i)) >= s.gamma_star - 1e-9);
    }
    // sum_i p_i y_i x_i is parallel to the direction
    std::vector<double> comb(ds.d, 0.0);
    for (std::size_t i = 0; i < ds.n; ++i) {
        CHECK(s.dual[i] >= 0.0);
        for (std::size_t j = 0; j < ds.d; ++j) comb[j] += s.dual[i] * ds.labels[i] * ds.row(i)[j];
    }
    double cn = 0.0;
    for (double v : comb) cn += v * v;
    cn = std::sqrt(cn);
    REQUIRE(cn > 0.0);
    double cos = 0.0;
    for (std::size_t j = 0; j < ds.d; ++j) cos += comb[j] / cn * s.direction[j];
    CHECK(cos >= 1.0 - 1e-9);
    for (std::size_t i = 0; i < ds.n; ++i) {
        const bool in_support = std::find(s.support_set.begin(), s.support_set.end(), i) != s.support_set.end();
        if (!in_support) CHECK(s.dual[i] == 0.0);
    }
}

}  // namespace

TEST_CASE("max margin: symmetric pair") {
    const auto ds = make_set({1, 1, -1, -1}, {1, -1}, 2);
    for (const auto& s : {solve_max_margin(ds), brute_force_max_margin(ds)}) {
        CHECK(s.direction[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
        CHECK(s.direction[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
        CHECK(s.gamma_star == doctest::Approx(std::sqrt(2.0)));
        check_invariants(s, ds);
    }
}

TEST_CASE("max margin: interior point leaves the solution unchanged") {
    const auto base = make_set({1, 1, -1, -1}, {1, -1}, 2);
    const auto more = make_set({1, 1, -1, -1, 5, 4}, {1, -1, 1}, 2);
    const auto a = brute_force_max_margin(base);
    const auto b = brute_force_max_margin(more);
    CHECK(b.gamma_star == doctest::Approx(a.gamma_star));
    CHECK(b.direction[0] == doctest::Approx(a.direction[0]));
    const auto c = solve_max_margin(more);
    CHECK(c.gamma_star == doctest::Approx(a.gamma_star));
    CHECK(c.dual[2] == 0.0);
}

TEST_CASE("max margin: iterative solver matches the subset oracle") {
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        const std::size_t d = 2 + seed % 2;
        const std::size_t n = 4 + seed % 9;
        const auto ds = random_separable(seed, n, d);
        const auto fast = solve_max_margin(ds);
        const auto slow = brute_force_max_margin(ds);
        double cos = 0.0;
        for (std::size_t j = 0; j < d; ++j) cos += fast.direction[j] * slow.direction[j];
        CHECK(cos >= 0.999);
        CHECK(std::abs(fast.gamma_star - slow.gamma_star) <= 1e-6 * slow.gamma_star);
        check_invariants(fast, ds);
        ++checked;
    }
    CHECK(checked == 60);
}

TEST_CASE("max margin: inseparable sets are rejected") {
    const auto xor_set = make_set({1, 1, -1, -1, 1, -1, -1, 1}, {1, 1, -1, -1}, 2);
    CHECK_THROWS_AS(solve_max_margin(xor_set), NotSeparableError);
    CHECK_THROWS_AS(brute_force_max_margin(xor_set), NotSeparableError);
    const auto same_point = make_set({1, 0, 1, 0}, {1, -1}, 2);
    CHECK_THROWS_AS(solve_max_margin(same_point), NotSeparableError);
}

TEST_CASE("max margin: JSON round trip") {
    const auto ds = random_separable(4, 10, 3);
    const auto s = solve_max_margin(ds);
    const auto back = solution_from_json(solution_to_json(s));
    CHECK(back.direction == s.direction);
    CHECK(back.gamma_star == s.gamma_star);
    CHECK(back.dual == s.dual);
    CHECK(back.support_set == s.support_set);
}
