#include "dwlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "dwlab/errors.hpp"
#include "dwlab/io.hpp"

namespace dwlab {

namespace {

void check_distribution(std::span<const double> p, const char* what) {
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw SpecificationError(std::string(what) + " has a negative entry");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw SpecificationError(std::string(what) + " does not sum to 1");
}

}  // namespace

void DiscreteDensityPair::validate() const {
    const std::size_t k = cells.size();
    if (k == 0 || p_t.size() != k || p_s.size() != k || w.size() != k || p_tilde_s.size() != k) {
        throw SpecificationError("density pair arrays must share one nonempty support");
    }
    check_distribution(p_t, "p_t");
    check_distribution(p_s, "p_s");
    check_distribution(p_tilde_s, "p_tilde_s");
    for (double v : w) {
        if (!(v > 0.0) || !std::isfinite(v)) throw SpecificationError("cell weights must be > 0");
    }
}

DiscreteDensityPair make_density_pair(std::vector<int> cells, std::vector<double> p_t, std::vector<double> p_s,
                                      std::vector<double> w) {
    DiscreteDensityPair pair{std::move(cells), std::move(p_t), std::move(p_s), std::move(w), {}};
    if (pair.w.size() != pair.p_s.size()) throw SpecificationError("w and p_s must have equal length");
    pair.p_tilde_s.resize(pair.p_s.size());
    double z = 0.0;
    for (std::size_t k = 0; k < pair.p_s.size(); ++k) z += pair.w[k] * pair.p_s[k];
    if (!(z > 0.0)) throw SpecificationError("weighted source has zero mass");
    for (std::size_t k = 0; k < pair.p_s.size(); ++k) pair.p_tilde_s[k] = pair.w[k] * pair.p_s[k] / z;
    pair.validate();
    return pair;
}

const char* to_string(Chi2Convention c) { return c == Chi2Convention::paper ? "paper" : "standard"; }

Chi2Convention chi2_convention_from_string(const std::string& s) {
    if (s == "paper") return Chi2Convention::paper;
    if (s == "standard") return Chi2Convention::standard;
    throw SpecificationError("unknown chi2 convention: " + s);
}

double chi2_divergence(const DiscreteDensityPair& pair, Chi2Convention convention) {
    pair.validate();
    double d = 0.0;
    for (std::size_t k = 0; k < pair.cells.size(); ++k) {
        const double pt = pair.p_t[k];
        const double ps = pair.p_tilde_s[k];
        if (convention == Chi2Convention::paper) {
            if (ps == 0.0) continue;
            if (pt == 0.0) throw SupportMismatchError("target density vanishes on a cell of the weighted source");
            const double ratio = ps / pt;
            d += ps * (ratio * ratio - 1.0);
        } else {
            if (pt == 0.0) continue;
            if (ps == 0.0) throw SupportMismatchError("weighted source vanishes on a cell of the target");
            d += pt * pt / ps;
        }
    }
    return convention == Chi2Convention::standard ? d - 1.0 : d;
}

void BoundInputs::validate() const {
    if (!(gamma > 0.0)) throw DomainError("gamma must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    if (q < 2) throw DomainError("depth q must be >= 2");
    if (!(L > 0.0)) throw DomainError("L must be > 0");
    if (n < 1) throw DomainError("n must be >= 1");
    if (!(4.0 * L / gamma > 2.0)) throw DomainError("4L/gamma must exceed 2 for the iterated logarithm");
}

double epsilon_term(const BoundInputs& in) {
    in.validate();
    const double n = static_cast<double>(in.n);
    return std::sqrt(std::log(std::log2(4.0 * in.L / in.gamma)) / n) + std::sqrt(std::log(1.0 / in.delta) / n);
}

double term_I(std::span<const ModelParams> models, const Dataset& ds, std::span<const double> ratios, double gamma) {
    if (models.empty()) throw SpecificationError("term I needs at least one model");
    if (ratios.size() != ds.n) throw SpecificationError("ratios length must equal n");
    if (!(gamma > 0.0)) throw DomainError("gamma must be > 0");
    for (double r : ratios) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw SpecificationError("ratios must be finite and >= 0");
    }
    std::vector<double> violation(ds.n, 0.0);
    for (const auto& m : models) {
        const double nrm = m.norm();
        if (!(nrm > 0.0)) throw UndefinedError("term I needs nonzero parameters");
        const double scale = std::pow(nrm, m.kind == ModelKind::linear ? 1 : 2);
        for (std::size_t i = 0; i < ds.n; ++i) {
            if (margin(m, ds.row(i), ds.labels[i]) / scale < gamma) violation[i] += 1.0;
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < ds.n; ++i) {
        total += ratios[i] * violation[i] / static_cast<double>(models.size());
    }
    return total / static_cast<double>(ds.n);
}

double term_II(const DiscreteDensityPair& pair, const BoundInputs& in, Chi2Convention convention) {
    in.validate();
    const double D = chi2_divergence(pair, convention);
    if (D + 1.0 < 0.0) throw DomainError("divergence below -1; sqrt(D + 1) undefined");
    const double q = in.q;
    return in.L * std::sqrt(D + 1.0) / (in.gamma * std::pow(q, 0.5 * (q - 1.0)) * std::sqrt(static_cast<double>(in.n)));
}

double test_error(const ModelParams& model, const Dataset& test) {
    if (test.n == 0) throw SpecificationError("test error of an empty set");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < test.n; ++i) {
        if (margin(model, test.row(i), test.labels[i]) <= 0.0) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(test.n);
}

CellDensities class_cell_densities(const Dataset& ds, std::span<const double> weights,
                                   std::span<const double> target_priors, bool clean_target) {
    if (weights.size() != ds.n) throw SpecificationError("weights length must equal n");
    const auto C = static_cast<std::size_t>(ds.num_classes);
    if (!target_priors.empty()) {
        if (target_priors.size() != C) throw SpecificationError("target priors need one entry per class");
        check_distribution(target_priors, "target priors");
    }
    auto cell_of = [&](std::size_t i) {
        return clean_target ? 2 * ds.class_of[i] + (ds.noise_flag[i] ? 1 : 0) : ds.class_of[i];
    };
    std::map<int, std::pair<double, double>> acc;  // cell -> (count, weight sum)
    std::vector<double> class_clean(C, 0.0);
    for (std::size_t i = 0; i < ds.n; ++i) {
        auto& a = acc[cell_of(i)];
        a.first += 1.0;
        a.second += weights[i];
        if (!ds.noise_flag[i] || !clean_target) class_clean[static_cast<std::size_t>(ds.class_of[i])] += 1.0;
    }
    const double clean_total = std::accumulate(class_clean.begin(), class_clean.end(), 0.0);

    std::vector<int> cells;
    std::vector<double> pt, ps, w;
    for (const auto& [cell, a] : acc) {
        cells.push_back(cell);
        ps.push_back(a.first / static_cast<double>(ds.n));
        w.push_back(a.second / a.first);
        const auto cls = static_cast<std::size_t>(clean_target ? cell / 2 : cell);
        const bool noisy_cell = clean_target && (cell % 2 == 1);
        const double prior = target_priors.empty() ? class_clean[cls] / clean_total : target_priors[cls];
        pt.push_back(noisy_cell ? 0.0 : prior);
    }
    // Classes absent from the training set cannot carry target mass.
    const double pt_sum = std::accumulate(pt.begin(), pt.end(), 0.0);
    for (double& v : pt) v /= pt_sum;
    // Normalize the source exactly.
    const double ps_sum = std::accumulate(ps.begin(), ps.end(), 0.0);
    for (double& v : ps) v /= ps_sum;

    CellDensities out;
    out.pair = make_density_pair(cells, pt, ps, w);
    std::map<int, double> ratio_of;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        ratio_of[cells[k]] = out.pair.p_tilde_s[k] > 0.0 ? out.pair.p_t[k] / out.pair.p_tilde_s[k] : 0.0;
    }
    out.ratios.resize(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) out.ratios[i] = ratio_of[cell_of(i)];
    return out;
}

double sup_norm(const Dataset& ds) {
    double best = 0.0;
    for (std::size_t i = 0; i < ds.n; ++i) {
        double s = 0.0;
        for (double v : ds.row(i)) s += v * v;
        best = std::max(best, std::sqrt(s));
    }
    return best;
}

std::string BoundReport::to_json() const {
    using io::format_real;
    return "{\"gamma\":" + format_real(gamma) + ",\"delta\":" + format_real(delta) + ",\"q\":" + std::to_string(q) +
           ",\"L\":" + format_real(L) + ",\"n\":" + std::to_string(n) + ",\"convention\":\"" + to_string(convention) +
           "\",\"D\":" + format_real(D) + ",\"I\":" + format_real(I) + ",\"II\":" + format_real(II) +
           ",\"III\":" + format_real(III) + ",\"total\":" + format_real(total) + ",\"empirical\":" +
           format_real(empirical) + ",\"log_convention\":\"ln∘log2\",\"density_model\":\"class_cell\"}";
}

BoundReport evaluate_bound(std::span<const ModelParams> models, const Dataset& train_set,
                           std::span<const double> ratios, const Dataset& test_set, const DiscreteDensityPair& pair,
                           const BoundInputs& in, Chi2Convention convention) {
    in.validate();
    BoundReport r;
    r.gamma = in.gamma;
    r.delta = in.delta;
    r.q = in.q;
    r.L = in.L;
    r.n = in.n;
    r.convention = convention;
    r.D = chi2_divergence(pair, convention);
    r.I = term_I(models, train_set, ratios, in.gamma);
    r.II = term_II(pair, in, convention);
    r.III = epsilon_term(in);
    r.total = r.I + r.II + r.III;
    double emp = 0.0;
    for (const auto& m : models) emp += test_error(m, test_set);
    r.empirical = emp / static_cast<double>(models.size());
    return r;
}

}  // namespace dwlab
