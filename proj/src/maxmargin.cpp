#include "dwlab/maxmargin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include <Eigen/Dense>
#include <json.hpp>

#include "dwlab/errors.hpp"
#include "dwlab/io.hpp"

namespace dwlab {

namespace {

constexpr std::size_t kMaxSweeps = 50000;
constexpr double kFeasTol = 1e-9;

void require_binary(const Dataset& ds) {
    ds.validate();
    if (!ds.binary()) throw SpecificationError("max-margin solver needs a binary dataset");
    if (ds.n == 0) throw SpecificationError("max-margin solver needs at least one sample");
}

double signed_dot(const Dataset& ds, std::size_t i, const Eigen::VectorXd& theta) {
    const auto x = ds.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < ds.d; ++j) s += x[j] * theta[static_cast<Eigen::Index>(j)];
    return static_cast<double>(ds.labels[i]) * s;
}

/// Minimum-norm theta with y_i theta.x_i = 1 on the subset; p are the matching
/// (unnormalized) dual coefficients. Empty when the subset's Gram matrix is
/// singular.
struct SubsetSolve {
    Eigen::VectorXd theta;
    Eigen::VectorXd p;
};

std::optional<SubsetSolve> solve_on_subset(const Dataset& ds, const std::vector<std::size_t>& S) {
    const auto k = static_cast<Eigen::Index>(S.size());
    const auto d = static_cast<Eigen::Index>(ds.d);
    Eigen::MatrixXd Z(k, d);  // rows y_i x_i
    for (Eigen::Index a = 0; a < k; ++a) {
        const auto x = ds.row(S[static_cast<std::size_t>(a)]);
        const double y = ds.labels[S[static_cast<std::size_t>(a)]];
        for (Eigen::Index j = 0; j < d; ++j) Z(a, j) = y * x[static_cast<std::size_t>(j)];
    }
    const Eigen::MatrixXd G = Z * Z.transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
    lu.setThreshold(1e-12);
    if (lu.rank() < k) return std::nullopt;
    SubsetSolve out;
    out.p = lu.solve(Eigen::VectorXd::Ones(k));
    out.theta = Z.transpose() * out.p;
    return out;
}

bool feasible(const Dataset& ds, const Eigen::VectorXd& theta, double tol) {
    for (std::size_t i = 0; i < ds.n; ++i) {
        if (signed_dot(ds, i, theta) < 1.0 - tol) return false;
    }
    return true;
}

MaxMarginSolution finish(const Dataset& ds, const Eigen::VectorXd& theta, std::vector<double> dual) {
    const double nrm = theta.norm();
    MaxMarginSolution s;
    s.direction.resize(ds.d);
    for (std::size_t j = 0; j < ds.d; ++j) s.direction[j] = theta[static_cast<Eigen::Index>(j)] / nrm;
    s.gamma_star = 1.0 / nrm;
    const double total = std::accumulate(dual.begin(), dual.end(), 0.0);
    for (double& v : dual) v = total > 0.0 ? std::max(v, 0.0) / total : 0.0;
    for (std::size_t i = 0; i < dual.size(); ++i) {
        if (dual[i] > 0.0) s.support_set.push_back(i);
    }
    s.dual = std::move(dual);
    return s;
}

}  // namespace

MaxMarginSolution solve_max_margin(const Dataset& ds) {
    require_binary(ds);
    const std::size_t n = ds.n;
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double v : ds.row(i)) s += v * v;
        if (!(s > 0.0)) throw NotSeparableError("a sample at the origin cannot be separated through the origin");
        sq[i] = s;
    }

    std::vector<double> alpha(n, 0.0);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ds.d));
    bool converged = false;
    for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double violation = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = 1.0 - signed_dot(ds, i, theta);
            const double next = std::max(0.0, alpha[i] + g / sq[i]);
            const double step = next - alpha[i];
            if (step != 0.0) {
                const auto x = ds.row(i);
                const double y = ds.labels[i];
                for (std::size_t j = 0; j < ds.d; ++j) theta[static_cast<Eigen::Index>(j)] += step * y * x[j];
                alpha[i] = next;
            }
            violation = std::max(violation, alpha[i] > 0.0 ? std::abs(g) : std::max(g, 0.0));
        }
        const double total = std::accumulate(alpha.begin(), alpha.end(), 0.0);
        if (!std::isfinite(total) || total > 1e14) break;
        if (violation < 1e-12) {
            converged = true;
            break;
        }
    }

    // Active-set polish: re-solve the equality system on the detected support
    // and accept it when primal and dual feasibility both hold.
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0 && signed_dot(ds, i, theta) < 1.0 + 1e-6) active.push_back(i);
    }
    if (!active.empty()) {
        if (auto sol = solve_on_subset(ds, active)) {
            const bool dual_ok = (sol->p.array() >= -1e-10).all();
            if (dual_ok && feasible(ds, sol->theta, kFeasTol)) {
                std::vector<double> dual(n, 0.0);
                for (std::size_t a = 0; a < active.size(); ++a) dual[active[a]] = sol->p[static_cast<Eigen::Index>(a)];
                return finish(ds, sol->theta, std::move(dual));
            }
        }
    }
    if (!converged || theta.norm() == 0.0 || !feasible(ds, theta, 1e-6)) {
        throw NotSeparableError("no separating direction found within the iteration budget");
    }
    return finish(ds, theta, alpha);
}

MaxMarginSolution brute_force_max_margin(const Dataset& ds) {
    require_binary(ds);
    const std::size_t n = ds.n;
    const std::size_t max_size = std::min(n, ds.d + 1);

    std::optional<SubsetSolve> best;
    std::vector<std::size_t> best_set;
    double best_norm = INFINITY;

    std::vector<std::size_t> idx;
    // Enumerate subsets in lexicographic order for each size.
    for (std::size_t k = 1; k <= max_size; ++k) {
        idx.resize(k);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        while (true) {
            if (auto sol = solve_on_subset(ds, idx)) {
                const double nrm = sol->theta.norm();
                if (nrm > 0.0 && nrm < best_norm - 1e-15 && feasible(ds, sol->theta, kFeasTol)) {
                    best_norm = nrm;
                    best = std::move(sol);
                    best_set = idx;
                }
            }
            std::size_t pos = k;
            while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
            if (pos == 0) break;
            ++idx[pos - 1];
            for (std::size_t q = pos; q < k; ++q) idx[q] = idx[q - 1] + 1;
        }
    }
    if (!best) throw NotSeparableError("no feasible support subset: data is not separable through the origin");
    std::vector<double> dual(n, 0.0);
    for (std::size_t a = 0; a < best_set.size(); ++a) dual[best_set[a]] = best->p[static_cast<Eigen::Index>(a)];
    return finish(ds, best->theta, std::move(dual));
}

std::string solution_to_json(const MaxMarginSolution& s) {
    auto reals = [](const std::vector<double>& v) {
        std::string out = "[";
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (k) out += ',';
            out += io::format_real(v[k]);
        }
        return out + "]";
    };
    std::string out = "{\"direction\":" + reals(s.direction) + ",\"gamma_star\":" + io::format_real(s.gamma_star) +
                      ",\"support_set\":[";
    for (std::size_t k = 0; k < s.support_set.size(); ++k) {
        if (k) out += ',';
        out += std::to_string(s.support_set[k]);
    }
    return out + "],\"p\":" + reals(s.dual) + "}";
}

MaxMarginSolution solution_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    MaxMarginSolution s;
    s.direction = j.at("direction").get<std::vector<double>>();
    s.gamma_star = j.at("gamma_star").get<double>();
    s.support_set = j.at("support_set").get<std::vector<std::size_t>>();
    s.dual = j.at("p").get<std::vector<double>>();
    return s;
}

}  // namespace dwlab
