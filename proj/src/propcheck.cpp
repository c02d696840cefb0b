#include "dwlab/propcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "dwlab/benchmarks.hpp"
#include "dwlab/errors.hpp"
#include "dwlab/io.hpp"
#include "dwlab/log.hpp"
#include "dwlab/maxmargin.hpp"
#include "dwlab/rng.hpp"
#include "dwlab/stats.hpp"

namespace dwlab {

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::passed: return "passed";
        case Outcome::failed: return "failed";
        case Outcome::inconclusive: return "inconclusive";
    }
    return "?";
}

void CheckVerdict::add(const std::string& name, double value) { statistics.emplace_back(name, value); }

double CheckVerdict::stat(const std::string& name) const {
    for (const auto& [k, v] : statistics) {
        if (k == name) return v;
    }
    throw SpecificationError("verdict " + check_id + " has no statistic " + name);
}

double CheckVerdict::headline_value() const {
    return headline.empty() ? std::numeric_limits<double>::quiet_NaN() : stat(headline);
}

json CheckVerdict::to_json() const {
    // Non-finite statistics become null so every line stays valid JSON.
    json stats = json::object();
    for (const auto& [k, v] : statistics) stats[k] = std::isfinite(v) ? json(v) : json(nullptr);
    return json{{"check_id", check_id}, {"outcome", dwlab::to_string(outcome)}, {"passed", passed()},
                {"statistics", stats},   {"headline", headline},                {"config_digest", config_digest},
                {"seed", seed},          {"notes", notes},                      {"schema_version", 1}};
}

void write_verdicts_jsonl(const std::vector<CheckVerdict>& verdicts, std::ostream& out) {
    for (const auto& v : verdicts) out << v.to_json().dump() << '\n';
}

void write_verdict_summary_csv(const std::vector<CheckVerdict>& verdicts, std::ostream& out) {
    out << "check_id,passed,headline_statistic\n";
    for (const auto& v : verdicts) {
        out << v.check_id << ',' << (v.passed() ? "true" : "false") << ',' << io::format_real(v.headline_value())
            << '\n';
    }
}

namespace {

double sigmoid(double u) { return ground_truth_probability(u); }

Dataset with_rows(const Dataset& ds, std::span<const std::size_t> idx) { return ds.subset(idx); }

std::size_t largest_class(const std::vector<std::size_t>& counts) {
    return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::size_t smallest_class(const std::vector<std::size_t>& counts) {
    return static_cast<std::size_t>(std::min_element(counts.begin(), counts.end()) - counts.begin());
}

TrainResult fit_family(const ModelFamily& family, const Dataset& ds, std::uint64_t init_seed,
                       const WeightScheme& scheme) {
    const std::size_t width = ds.binary() ? 1 : static_cast<std::size_t>(ds.num_classes);
    const auto init = init_params(family.kind, {ds.d, family.hidden, width}, init_seed);
    return train(init, ds, scheme, family.loss, family.hyper);
}

std::string lambda_tag(double lambda) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", lambda);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------- label noise

void to_json(json& j, const LabelNoiseCheckConfig& c) {
    j = json{{"rate", c.rate},           {"kind", to_string(c.kind)},   {"noise_seed", c.noise_seed},
             {"estimator", c.estimator}, {"level", c.level},            {"resamples", c.resamples},
             {"enum_size", c.enum_size}, {"risk_draws", c.risk_draws}};
}

void from_json(const json& j, LabelNoiseCheckConfig& c) {
    if (j.contains("rate")) j.at("rate").get_to(c.rate);
    if (j.contains("kind")) c.kind = noise_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("noise_seed")) j.at("noise_seed").get_to(c.noise_seed);
    if (j.contains("estimator")) j.at("estimator").get_to(c.estimator);
    if (j.contains("level")) j.at("level").get_to(c.level);
    if (j.contains("resamples")) j.at("resamples").get_to(c.resamples);
    if (j.contains("enum_size")) j.at("enum_size").get_to(c.enum_size);
    if (j.contains("risk_draws")) j.at("risk_draws").get_to(c.risk_draws);
}

double enumerated_noisy_risk(const LossSpec& loss, std::span<const double> margins, double pi) {
    const std::size_t n = margins.size();
    if (n == 0 || n > 20) throw SpecificationError("flip-pattern enumeration needs 1..20 samples");
    if (!(pi >= 0.0 && pi <= 1.0)) throw SpecificationError("noise rate must lie in [0,1]");
    double expected = 0.0;
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        double prob = 1.0;
        double risk = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool flipped = (mask >> i) & 1ULL;
            prob *= flipped ? pi : 1.0 - pi;
            // flipping the label negates the binary margin
            const double m = flipped ? -margins[i] : margins[i];
            risk += loss_value(loss, std::vector<double>{m}, 1);
        }
        if (prob > 0.0) expected += prob * risk / static_cast<double>(n);
    }
    return expected;
}

double mixture_noisy_risk(const LossSpec& loss, std::span<const double> margins, double pi) {
    if (margins.empty()) throw SpecificationError("empty margin set");
    double clean = 0.0, flipped = 0.0;
    for (double m : margins) {
        clean += loss_value(loss, std::vector<double>{m}, 1);
        flipped += loss_value(loss, std::vector<double>{-m}, 1);
    }
    const double n = static_cast<double>(margins.size());
    return (1.0 - pi) * clean / n + pi * flipped / n;
}

CheckVerdict check_label_noise(const Dataset& base, const LabelNoiseCheckConfig& cfg) {
    CheckVerdict v;
    v.check_id = "label_noise";
    v.config_digest = config_digest(json(cfg));
    v.seed = cfg.estimator.master_seed;
    v.headline = "err_gap";
    if (!base.binary()) throw SpecificationError("label-noise check expects a binary dataset");

    // Learnability gate on the clean data.
    const auto clean = estimate_error_profile(base, cfg.estimator);
    double p_correct = 0.0;
    for (const auto& ms : clean.margin_samples) {
        const auto hits = std::count_if(ms.begin(), ms.end(), [](double m) { return m > 0.0; });
        p_correct += static_cast<double>(hits) / static_cast<double>(ms.size());
    }
    p_correct /= static_cast<double>(base.n);
    v.add("noise_rate", cfg.rate);
    v.add("p_correct_clean", p_correct);

    NoiseSpec ns;
    ns.rate = cfg.rate;
    ns.kind = cfg.kind;
    ns.seed = cfg.noise_seed;
    const Dataset noisy = apply_label_noise(base, ns);
    const auto prof = estimate_error_profile(noisy, cfg.estimator);
    std::vector<double> err_noisy, err_clean;
    for (std::size_t i = 0; i < noisy.n; ++i) (noisy.noise_flag[i] ? err_noisy : err_clean).push_back(prof.err[i]);
    v.add("n_noisy", static_cast<double>(err_noisy.size()));
    v.add("mean_err_noisy", err_noisy.empty() ? NAN : stats::mean(err_noisy));
    v.add("mean_err_clean", err_clean.empty() ? NAN : stats::mean(err_clean));
    bool interval_ok = false;
    if (!err_noisy.empty() && !err_clean.empty()) {
        const auto ci = stats::bootstrap_mean_diff(err_noisy, err_clean, cfg.level, cfg.resamples,
                                                   derive_seed(cfg.noise_seed, {0xb007}));
        v.add("err_gap", stats::mean(err_noisy) - stats::mean(err_clean));
        v.add("ci_lo", ci.lo);
        v.add("ci_hi", ci.hi);
        interval_ok = ci.lo > 0.0;
    } else {
        v.add("err_gap", NAN);
        v.add("ci_lo", NAN);
        v.add("ci_hi", NAN);
    }

    // Risk identity under label noise for a model fit on the clean data.
    const LossSpec risk_loss{cfg.estimator.family.loss.kind == LossKind::cross_entropy ? LossKind::logistic
                                                                                       : cfg.estimator.family.loss.kind};
    const auto fitted = fit_family(cfg.estimator.family, base, derive_seed(cfg.estimator.master_seed, {0xf17}),
                                   cfg.estimator.family.scheme);
    const std::size_t m = std::min<std::size_t>({cfg.enum_size, base.n, 10});
    std::vector<std::size_t> head(m);
    std::iota(head.begin(), head.end(), 0);
    const Dataset small = with_rows(base, head);
    const auto margins = dwlab::margins(fitted.params, small);
    const double enumerated = enumerated_noisy_risk(risk_loss, margins, cfg.rate);
    const double mixture = mixture_noisy_risk(risk_loss, margins, cfg.rate);
    double sampled = 0.0;
    for (std::size_t draw = 0; draw < cfg.risk_draws; ++draw) {
        NoiseSpec s{cfg.rate, NoiseKind::flip_label, 0.0, FeatureDirection::adversarial,
                    derive_seed(cfg.noise_seed, {0x5eed, draw})};
        const Dataset c = apply_label_noise(small, s);
        for (std::size_t i = 0; i < c.n; ++i) {
            sampled += loss_value(risk_loss, std::vector<double>{margin(fitted.params, c.row(i), c.labels[i])}, 1) /
                       static_cast<double>(c.n);
        }
    }
    sampled /= static_cast<double>(std::max<std::size_t>(cfg.risk_draws, 1));
    const double identity_gap = std::abs(enumerated - mixture) / std::max(std::abs(enumerated), 1e-300);
    const double sampled_gap = std::abs(sampled - enumerated) / std::max(std::abs(enumerated), 1e-300);
    const double gap0 = std::abs(enumerated_noisy_risk(risk_loss, margins, 0.0) - mixture_noisy_risk(risk_loss, margins, 0.0));
    std::vector<double> flipped(margins.size());
    std::transform(margins.begin(), margins.end(), flipped.begin(), [](double x) { return -x; });
    const double gap1 =
        std::abs(enumerated_noisy_risk(risk_loss, margins, 1.0) - mixture_noisy_risk(risk_loss, flipped, 0.0));
    v.add("risk_enumerated", enumerated);
    v.add("risk_mixture", mixture);
    v.add("risk_sampled", sampled);
    v.add("risk_identity_rel_gap", identity_gap);
    v.add("risk_sampled_rel_gap", sampled_gap);
    v.add("risk_gap_pi0", gap0);
    v.add("risk_gap_pi1", gap1);
    const bool identity_ok = identity_gap <= 1e-12 && sampled_gap <= 0.02 && gap0 == 0.0 && gap1 == 0.0;

    if (!(p_correct > 0.5)) {
        v.outcome = Outcome::inconclusive;
        v.notes.push_back("clean data not learnable (p <= 0.5)");
    } else {
        v.outcome = interval_ok && identity_ok ? Outcome::passed : Outcome::failed;
    }
    return v;
}

// ------------------------------------------------------------------ imbalance

void to_json(json& j, const ImbalanceCheckConfig& c) { j = json{{"estimator", c.estimator}}; }

void from_json(const json& j, ImbalanceCheckConfig& c) {
    if (j.contains("estimator")) j.at("estimator").get_to(c.estimator);
}

CheckVerdict check_imbalance(const DatasetSpec& spec, const ImbalanceCheckConfig& cfg) {
    CheckVerdict v;
    v.check_id = "imbalance";
    v.config_digest = config_digest(json{{"spec", spec}, {"check", cfg}});
    v.seed = spec.seed;
    v.headline = "err_gap";
    const double cr = spec.imbalance_ratio();
    v.add("imbalance_ratio", cr);
    if (!(cr > std::exp(1.0))) {
        v.outcome = Outcome::inconclusive;
        v.add("err_gap", NAN);
        v.notes.push_back("imbalance ratio does not exceed e");
        return v;
    }
    const Dataset ds = gen_gaussian_mixture(spec);
    const auto prof = estimate_error_profile(ds, cfg.estimator);
    const auto counts = ds.class_counts();
    const auto big = largest_class(counts);
    const auto small = smallest_class(counts);
    double err_big = 0.0, err_small = 0.0, p_big = 0.0, p_small = 0.0;
    for (std::size_t i = 0; i < ds.n; ++i) {
        double p = 0.0;
        for (double m : prof.margin_samples[i]) p += sigmoid(m);
        p /= static_cast<double>(prof.margin_samples[i].size());
        const auto c = static_cast<std::size_t>(ds.class_of[i]);
        if (c == big) {
            err_big += prof.err[i];
            p_big += p;
        } else if (c == small) {
            err_small += prof.err[i];
            p_small += p;
        }
    }
    err_big /= static_cast<double>(counts[big]);
    p_big /= static_cast<double>(counts[big]);
    err_small /= static_cast<double>(counts[small]);
    p_small /= static_cast<double>(counts[small]);
    v.add("mean_err_large", err_big);
    v.add("mean_err_small", err_small);
    v.add("err_gap", err_small - err_big);
    v.add("truth_prob_large", p_big);
    v.add("truth_prob_small", p_small);
    v.outcome = (p_big > p_small && err_small > err_big) ? Outcome::passed : Outcome::failed;
    return v;
}

void to_json(json& j, const RecallComparisonConfig& c) {
    j = json{{"family", c.family}, {"seeds", c.seeds}, {"test_scale", c.test_scale}, {"required", c.required}};
}

void from_json(const json& j, RecallComparisonConfig& c) {
    if (j.contains("family")) j.at("family").get_to(c.family);
    if (j.contains("seeds")) j.at("seeds").get_to(c.seeds);
    if (j.contains("test_scale")) j.at("test_scale").get_to(c.test_scale);
    if (j.contains("required")) j.at("required").get_to(c.required);
}

CheckVerdict compare_small_class_recall(const DatasetSpec& spec, const RecallComparisonConfig& cfg) {
    CheckVerdict v;
    v.check_id = "class_balanced_recall";
    v.config_digest = config_digest(json{{"spec", spec}, {"check", cfg}});
    v.seed = spec.seed;
    v.headline = "seeds_improved";
    if (cfg.seeds.empty()) throw SpecificationError("recall comparison needs at least one seed");
    std::size_t improved = 0;
    double sum_eq = 0.0, sum_bal = 0.0;
    for (std::uint64_t seed : cfg.seeds) {
        DatasetSpec s = spec;
        s.seed = seed;
        const Dataset ds = gen_gaussian_mixture(s);
        const Dataset test = test_split(s, cfg.test_scale);
        const auto small = static_cast<int>(smallest_class(ds.class_counts()));
        const auto init_seed = derive_seed(seed, {0x1ec});
        WeightScheme balanced;
        balanced.kind = SchemeKind::class_balanced;
        const auto eq = fit_family(cfg.family, ds, init_seed, WeightScheme{});
        const auto bal = fit_family(cfg.family, ds, init_seed, balanced);
        auto recall = [&](const ModelParams& p) {
            std::size_t hit = 0, total = 0;
            for (std::size_t i = 0; i < test.n; ++i) {
                if (test.class_of[i] != small) continue;
                ++total;
                if (margin(p, test.row(i), test.labels[i]) > 0.0) ++hit;
            }
            return static_cast<double>(hit) / static_cast<double>(total);
        };
        const double r_eq = recall(eq.params);
        const double r_bal = recall(bal.params);
        v.add("recall_equal_seed" + std::to_string(seed), r_eq);
        v.add("recall_balanced_seed" + std::to_string(seed), r_bal);
        sum_eq += r_eq;
        sum_bal += r_bal;
        if (r_bal > r_eq) ++improved;
    }
    v.add("seeds_improved", static_cast<double>(improved));
    v.add("seeds_total", static_cast<double>(cfg.seeds.size()));
    v.add("mean_recall_equal", sum_eq / static_cast<double>(cfg.seeds.size()));
    v.add("mean_recall_balanced", sum_bal / static_cast<double>(cfg.seeds.size()));
    v.outcome = improved >= cfg.required ? Outcome::passed : Outcome::failed;
    return v;
}

// -------------------------------------------------------------- margin / error

void to_json(json& j, const MarginErrorCheckConfig& c) {
    j = json{{"match_fraction", c.match_fraction},
             {"agreement_required", c.agreement_required},
             {"gaussian_fraction_required", c.gaussian_fraction_required},
             {"z_limit", c.z_limit}};
}

void from_json(const json& j, MarginErrorCheckConfig& c) {
    if (j.contains("match_fraction")) j.at("match_fraction").get_to(c.match_fraction);
    if (j.contains("agreement_required")) j.at("agreement_required").get_to(c.agreement_required);
    if (j.contains("gaussian_fraction_required")) j.at("gaussian_fraction_required").get_to(c.gaussian_fraction_required);
    if (j.contains("z_limit")) j.at("z_limit").get_to(c.z_limit);
}

CheckVerdict check_margin_error(const DifficultyProfile& profile, const MarginErrorCheckConfig& cfg) {
    CheckVerdict v;
    v.check_id = "margin_error";
    v.config_digest = config_digest(json(cfg));
    v.headline = "pair_agreement";
    const std::size_t n = profile.size();
    if (n < 2) throw SpecificationError("margin/error check needs at least two samples");

    // (a) the closed form on a grid
    bool grid_ok = true;
    const double mus[] = {0.0, 1.0, 2.0};
    const double s2s[] = {0.0, 1.0};
    for (double s2 : s2s) {
        for (int k = 0; k + 1 < 3; ++k) {
            grid_ok = grid_ok && closed_form_error(mus[k + 1], s2).value < closed_form_error(mus[k], s2).value;
        }
    }
    for (double mu : mus) grid_ok = grid_ok && closed_form_error(mu, 1.0).value > closed_form_error(mu, 0.0).value;
    v.add("grid_monotone", grid_ok ? 1.0 : 0.0);

    // (b) variance-matched pairs
    const double tol = cfg.match_fraction * stats::median(profile.sigma2_hat);
    std::size_t matched = 0, undecidable = 0, decidable = 0, agree = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!(std::abs(profile.sigma2_hat[i] - profile.sigma2_hat[j]) < tol)) continue;
            if (profile.mu_hat[i] == profile.mu_hat[j]) continue;
            ++matched;
            const bool i_low = profile.mu_hat[i] < profile.mu_hat[j];
            const std::size_t lo = i_low ? i : j;
            const std::size_t hi = i_low ? j : i;
            if (profile.sigma2_hat[lo] < profile.sigma2_hat[hi]) {
                ++undecidable;
                continue;
            }
            ++decidable;
            if (profile.err[lo] >= profile.err[hi]) ++agree;
        }
    }
    const double agreement = decidable ? static_cast<double>(agree) / static_cast<double>(decidable) : NAN;
    v.add("match_tolerance", tol);
    v.add("pairs_matched", static_cast<double>(matched));
    v.add("pairs_undecidable", static_cast<double>(undecidable));
    v.add("pairs_decidable", static_cast<double>(decidable));
    v.add("pair_agreement", agreement);

    // (c) Gaussianity of the margin samples
    std::size_t gaussian = 0, tested = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(profile.z_skew[i]) || std::isnan(profile.z_kurt[i])) continue;
        ++tested;
        if (std::abs(profile.z_skew[i]) <= cfg.z_limit && std::abs(profile.z_kurt[i]) <= cfg.z_limit) ++gaussian;
    }
    const double gauss_frac = static_cast<double>(gaussian) / static_cast<double>(n);
    v.add("z_tested", static_cast<double>(tested));
    v.add("gaussian_fraction", gauss_frac);

    const double rho = stats::spearman(profile.mu_hat, profile.err);
    v.add("spearman_mu_err", rho);
    bool have_u = true;
    for (double u : profile.uncertainty) have_u = have_u && std::isfinite(u);
    v.add("spearman_uncertainty_err", have_u ? stats::spearman(profile.uncertainty, profile.err) : NAN);

    if (decidable == 0) {
        v.outcome = Outcome::inconclusive;
        v.notes.push_back("no decidable variance-matched pairs");
        return v;
    }
    const bool ok = grid_ok && agreement >= cfg.agreement_required && gauss_frac >= cfg.gaussian_fraction_required &&
                    rho < 0.0;
    v.outcome = ok ? Outcome::passed : Outcome::failed;
    return v;
}

// --------------------------------------------------------------- dual weights

CheckVerdict check_dual_weights(const std::vector<double>& margins_i, const std::vector<double>& margins_j,
                                DualModel model, const DualCoefficients& coef) {
    if (margins_i.empty() || margins_j.empty()) throw SpecificationError("dual-weight check needs margin samples");
    if (model == DualModel::linear_p && !(coef.a < 0.0)) throw SpecificationError("linear dual model needs a < 0");
    if (model == DualModel::exponential_p && !(coef.c > 0.0)) {
        throw SpecificationError("exponential dual model needs c > 0");
    }
    CheckVerdict v;
    v.check_id = model == DualModel::linear_p ? "dual_weights_linear" : "dual_weights_exponential";
    v.config_digest = config_digest(json{{"model", v.check_id}, {"a", coef.a}, {"b", coef.b}, {"c", coef.c}});
    v.headline = "expected_p_gap";

    auto err_of = [](const std::vector<double>& ms) {
        double s = 0.0;
        for (double m : ms) s += std::exp(-m);
        return s / static_cast<double>(ms.size());
    };
    auto expected_p = [&](const std::vector<double>& ms) {
        double s = 0.0;
        for (double m : ms) s += model == DualModel::linear_p ? coef.a * m + coef.b : coef.c * std::exp(-m);
        return s / static_cast<double>(ms.size());
    };
    // Order the pair so that i is the harder sample.
    const bool swap = err_of(margins_i) < err_of(margins_j);
    const auto& mi = swap ? margins_j : margins_i;
    const auto& mj = swap ? margins_i : margins_j;
    const double err_i = err_of(mi), err_j = err_of(mj);
    const double mu_i = stats::mean(mi), mu_j = stats::mean(mj);
    const double p_i = expected_p(mi), p_j = expected_p(mj);
    v.add("swapped", swap ? 1.0 : 0.0);
    v.add("err_i", err_i);
    v.add("err_j", err_j);
    v.add("mu_i", mu_i);
    v.add("mu_j", mu_j);
    v.add("expected_p_i", p_i);
    v.add("expected_p_j", p_j);
    v.add("expected_p_gap", p_i - p_j);
    bool ok = false;
    if (model == DualModel::linear_p) {
        ok = (p_i >= p_j) == (mu_i <= mu_j);
    } else {
        ok = p_i >= p_j && std::abs(p_i - coef.c * err_i) <= 1e-12 * std::max(1.0, std::abs(p_i));
        const bool still_holds = mu_i > mu_j && p_i > p_j;
        v.add("larger_mean_still_heavier", still_holds ? 1.0 : 0.0);
    }
    v.outcome = ok ? Outcome::passed : Outcome::failed;
    return v;
}

// ---------------------------------------------------------- margin convergence

void to_json(json& j, const MarginConvergenceConfig& c) {
    j = json{{"lambdas", c.lambdas},
             {"schemes", c.schemes},
             {"loss", c.loss},
             {"hyper", c.hyper},
             {"init_seed", c.init_seed},
             {"monotone_tolerance", c.monotone_tolerance},
             {"oracle_tolerance", c.oracle_tolerance},
             {"acceleration_epochs", c.acceleration_epochs},
             {"cosine_threshold", c.cosine_threshold}};
}

void from_json(const json& j, MarginConvergenceConfig& c) {
    if (j.contains("lambdas")) j.at("lambdas").get_to(c.lambdas);
    if (j.contains("schemes")) j.at("schemes").get_to(c.schemes);
    if (j.contains("loss")) j.at("loss").get_to(c.loss);
    if (j.contains("hyper")) j.at("hyper").get_to(c.hyper);
    if (j.contains("init_seed")) j.at("init_seed").get_to(c.init_seed);
    if (j.contains("monotone_tolerance")) j.at("monotone_tolerance").get_to(c.monotone_tolerance);
    if (j.contains("oracle_tolerance")) j.at("oracle_tolerance").get_to(c.oracle_tolerance);
    if (j.contains("acceleration_epochs")) j.at("acceleration_epochs").get_to(c.acceleration_epochs);
    if (j.contains("cosine_threshold")) j.at("cosine_threshold").get_to(c.cosine_threshold);
}

std::vector<std::optional<std::size_t>> epochs_to_oracle(const Dataset& ds, const std::vector<WeightScheme>& schemes,
                                                         const LossSpec& loss, const Hyper& hyper,
                                                         std::uint64_t init_seed, double threshold) {
    if (!ds.binary()) throw SpecificationError("oracle comparison needs a binary dataset");
    const auto mm = solve_max_margin(ds);
    const auto init = init_params(ModelKind::linear, {ds.d, 0, 1}, init_seed);
    std::vector<std::optional<std::size_t>> out;
    for (const auto& s : schemes) {
        const auto res = train(init, ds, s, loss, hyper, std::span<const double>(mm.direction));
        out.push_back(epochs_to_cosine(res.trace, threshold));
    }
    return out;
}

CheckVerdict check_margin_convergence(const Dataset& ds, const MarginConvergenceConfig& cfg) {
    if (cfg.lambdas.empty()) throw SpecificationError("lambda list is empty");
    for (std::size_t k = 0; k < cfg.lambdas.size(); ++k) {
        if (!(cfg.lambdas[k] > 0.0)) throw SpecificationError("lambda must be > 0 (the margin limit is lambda -> 0)");
        if (k > 0 && !(cfg.lambdas[k] < cfg.lambdas[k - 1])) {
            throw SpecificationError("lambda list must be strictly decreasing");
        }
    }
    if (cfg.schemes.empty()) throw SpecificationError("margin convergence needs at least one weight scheme");
    for (const auto& s : cfg.schemes) {
        if (!(s.lower > 0.0)) throw SpecificationError("weight schemes must be bounded below by b > 0");
    }
    CheckVerdict v;
    v.check_id = "margin_convergence";
    v.config_digest = config_digest(json(cfg));
    v.seed = cfg.init_seed;
    v.headline = "oracle_gap_max";

    const auto mm = solve_max_margin(ds);
    v.add("gamma_star", mm.gamma_star);
    const auto init = init_params(ModelKind::linear, {ds.d, 0, 1}, cfg.init_seed);
    bool monotone = true;
    std::vector<double> final_gamma;
    for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
        const std::string tag = "s" + std::to_string(s) + "_" + to_string(cfg.schemes[s].kind);
        double prev = -std::numeric_limits<double>::infinity();
        double last = NAN;
        for (double lambda : cfg.lambdas) {
            LossSpec loss = cfg.loss;
            loss.lambda = lambda;
            try {
                const auto res = train(init, ds, cfg.schemes[s], loss, cfg.hyper);
                const double g = normalized_margin(res.params, ds);
                v.add("gamma_" + tag + "_lambda" + lambda_tag(lambda), g);
                v.add("epochs_" + tag + "_lambda" + lambda_tag(lambda),
                      static_cast<double>(res.trace.records.size() - 1));
                if (g < prev - cfg.monotone_tolerance) monotone = false;
                prev = g;
                last = g;
            } catch (const DivergenceError& e) {
                log::warn("lambda " + lambda_tag(lambda) + " dropped: " + e.what());
                v.notes.push_back("lambda " + lambda_tag(lambda) + " diverged for " + tag);
            }
        }
        final_gamma.push_back(last);
    }
    double gap_max = 0.0;
    double spread = 0.0;
    for (double g : final_gamma) {
        gap_max = std::max(gap_max, std::abs(g - mm.gamma_star) / mm.gamma_star);
        for (double h : final_gamma) spread = std::max(spread, std::abs(g - h) / mm.gamma_star);
    }
    v.add("monotone", monotone ? 1.0 : 0.0);
    v.add("oracle_gap_max", gap_max);
    v.add("scheme_spread", spread);

    bool accel_ok = true;
    if (cfg.schemes.size() >= 2) {
        LossSpec loss = cfg.loss;
        loss.lambda = 0.0;
        Hyper h = cfg.hyper;
        h.epochs = cfg.acceleration_epochs;
        h.stop_grad_norm = 0.0;
        const auto ep = epochs_to_oracle(ds, {cfg.schemes[0], cfg.schemes[1]}, loss, h, cfg.init_seed,
                                         cfg.cosine_threshold);
        const double inf = std::numeric_limits<double>::infinity();
        const double e0 = ep[0] ? static_cast<double>(*ep[0]) : inf;
        const double e1 = ep[1] ? static_cast<double>(*ep[1]) : inf;
        v.add("epochs_to_cosine_s0", e0);
        v.add("epochs_to_cosine_s1", e1);
        accel_ok = ep[1].has_value() && e1 <= e0;
    }
    const bool ok = std::none_of(final_gamma.begin(), final_gamma.end(), [](double g) { return std::isnan(g); }) &&
                    monotone && gap_max <= cfg.oracle_tolerance && spread <= cfg.oracle_tolerance && accel_ok;
    v.outcome = ok ? Outcome::passed : Outcome::failed;
    return v;
}

// -------------------------------------------------------------- feature noise

void to_json(json& j, const FeatureNoiseCheckConfig& c) {
    j = json{{"epsilon", c.epsilon}, {"fraction", c.fraction}, {"noise_seed", c.noise_seed},
             {"estimator", c.estimator}};
}

void from_json(const json& j, FeatureNoiseCheckConfig& c) {
    if (j.contains("epsilon")) j.at("epsilon").get_to(c.epsilon);
    if (j.contains("fraction")) j.at("fraction").get_to(c.fraction);
    if (j.contains("noise_seed")) j.at("noise_seed").get_to(c.noise_seed);
    if (j.contains("estimator")) j.at("estimator").get_to(c.estimator);
}

CheckVerdict check_feature_noise(const Dataset& base, const FeatureNoiseCheckConfig& cfg) {
    if (!(cfg.fraction > 0.0 && cfg.fraction <= 1.0)) throw SpecificationError("fraction must lie in (0,1]");
    CheckVerdict v;
    v.check_id = "feature_noise";
    v.config_digest = config_digest(json(cfg));
    v.seed = cfg.noise_seed;
    v.headline = "err_rise_adversarial";

    const auto clean = estimate_error_profile(base, cfg.estimator);
    std::vector<std::size_t> order(base.n);
    std::iota(order.begin(), order.end(), 0);
    Engine eng(derive_seed(cfg.noise_seed, {0xfea7}));
    std::shuffle(order.begin(), order.end(), eng);
    const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.fraction * static_cast<double>(base.n)));
    std::vector<std::size_t> picked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(picked.begin(), picked.end());

    // Only the picked rows get a nonzero reference gradient.
    std::vector<double> ref(base.n * base.d, 0.0);
    for (std::size_t i : picked) {
        for (std::size_t j = 0; j < base.d; ++j) ref[i * base.d + j] = clean.margin_input_grad[i * base.d + j];
    }
    const double eps = cfg.epsilon < 0.0 ? default_feature_epsilon(base) : cfg.epsilon;
    v.add("epsilon", eps);
    v.add("perturbed", static_cast<double>(k));

    auto mean_on = [&](const std::vector<double>& err) {
        double s = 0.0;
        for (std::size_t i : picked) s += err[i];
        return s / static_cast<double>(picked.size());
    };
    const double base_err = mean_on(clean.err);
    v.add("mean_err_baseline", base_err);
    double rise_adv = NAN, rise_pro = NAN;
    for (auto dir : {FeatureDirection::adversarial, FeatureDirection::promoted}) {
        NoiseSpec ns;
        ns.kind = NoiseKind::feature;
        ns.epsilon = eps;
        ns.direction = dir;
        ns.seed = cfg.noise_seed;
        const auto moved = apply_feature_noise(base, ns, ref);
        // dot product of the displacement with the reference gradient
        double dot = 0.0;
        for (std::size_t i : picked) {
            for (std::size_t j = 0; j < base.d; ++j) {
                dot += (moved.dataset.row(i)[j] - base.row(i)[j]) * ref[i * base.d + j];
            }
        }
        const auto prof = estimate_error_profile(moved.dataset, cfg.estimator);
        const double after = mean_on(prof.err);
        const std::string tag = dir == FeatureDirection::adversarial ? "adversarial" : "promoted";
        v.add("dot_" + tag, dot);
        v.add("mean_err_" + tag, after);
        v.add("err_rise_" + tag, after - base_err);
        (dir == FeatureDirection::adversarial ? rise_adv : rise_pro) = after - base_err;
        if (moved.skipped > base.n - k) v.notes.push_back(std::to_string(moved.skipped - (base.n - k)) +
                                                          " picked rows had a zero reference gradient");
    }
    v.outcome = (rise_adv > 0.0 && rise_pro < 0.0 && v.stat("dot_adversarial") < 0.0 && v.stat("dot_promoted") > 0.0)
                    ? Outcome::passed
                    : Outcome::failed;
    return v;
}

// ------------------------------------------------------------ bound tradeoff

void to_json(json& j, const BoundSweepConfig& c) {
    j = json{{"levels", c.levels},
             {"estimator", c.estimator},
             {"family", c.family},
             {"model_seeds", c.model_seeds},
             {"refit", c.refit},
             {"gamma_fraction", c.gamma_fraction},
             {"delta", c.delta},
             {"convention", to_string(c.convention)},
             {"lower", c.lower},
             {"upper", c.upper},
             {"test_scale", c.test_scale}};
}

void from_json(const json& j, BoundSweepConfig& c) {
    if (j.contains("levels")) j.at("levels").get_to(c.levels);
    if (j.contains("estimator")) j.at("estimator").get_to(c.estimator);
    if (j.contains("family")) j.at("family").get_to(c.family);
    if (j.contains("model_seeds")) j.at("model_seeds").get_to(c.model_seeds);
    if (j.contains("refit")) j.at("refit").get_to(c.refit);
    if (j.contains("gamma_fraction")) j.at("gamma_fraction").get_to(c.gamma_fraction);
    if (j.contains("delta")) j.at("delta").get_to(c.delta);
    if (j.contains("convention")) c.convention = chi2_convention_from_string(j.at("convention").get<std::string>());
    if (j.contains("lower")) j.at("lower").get_to(c.lower);
    if (j.contains("upper")) j.at("upper").get_to(c.upper);
    if (j.contains("test_scale")) j.at("test_scale").get_to(c.test_scale);
}

std::vector<BoundSweepPoint> bound_weight_sweep(const DatasetSpec& spec, const BoundSweepConfig& cfg) {
    if (cfg.levels.empty()) throw SpecificationError("sweep needs at least one level");
    if (cfg.model_seeds < 1) throw SpecificationError("sweep needs at least one model seed");
    const Dataset ds = gen_gaussian_mixture(spec);
    const Dataset test = test_split(spec, cfg.test_scale);
    const auto prof = estimate_error_profile(ds, cfg.estimator);
    WeightScheme hard;
    hard.kind = SchemeKind::error_hard_first;
    hard.lower = cfg.lower;
    hard.upper = cfg.upper;
    hard.difficulty = prof.err;
    const auto w_hard = make_weights(hard, {}, ds.n);
    auto fit_models = [&](const WeightScheme& scheme) {
        std::vector<ModelParams> models;
        for (std::size_t s = 0; s < cfg.model_seeds; ++s) {
            models.push_back(fit_family(cfg.family, ds, derive_seed(spec.seed, {0xb0, s}), scheme).params);
        }
        return models;
    };
    std::vector<ModelParams> equal_models;
    if (!cfg.refit) equal_models = fit_models(WeightScheme{});

    BoundInputs in;
    in.L = std::max(sup_norm(ds), sup_norm(test));
    in.gamma = cfg.gamma_fraction * in.L;
    in.delta = cfg.delta;
    in.q = 2;
    in.n = ds.n;

    std::vector<BoundSweepPoint> out;
    for (double t : cfg.levels) {
        if (!(t >= 0.0 && t <= 1.0)) throw SpecificationError("sweep levels must lie in [0,1]");
        std::vector<double> w(ds.n);
        for (std::size_t i = 0; i < ds.n; ++i) w[i] = (1.0 - t) + t * w_hard[i];
        const auto cells = class_cell_densities(ds, w);
        WeightScheme fixed;
        fixed.kind = SchemeKind::custom_static;
        fixed.lower = cfg.lower;
        fixed.upper = cfg.upper;
        fixed.difficulty = w;
        const auto models = cfg.refit ? fit_models(fixed) : equal_models;
        out.push_back({t, evaluate_bound(models, ds, cells.ratios, test, cells.pair, in, cfg.convention)});
    }
    return out;
}

CheckVerdict check_bound_tradeoff(const DatasetSpec& spec, const BoundSweepConfig& cfg) {
    CheckVerdict v;
    v.check_id = "bound_tradeoff";
    v.config_digest = config_digest(json{{"spec", spec}, {"check", cfg}});
    v.seed = spec.seed;
    v.headline = "term_I_drop";
    const auto sweep = bound_weight_sweep(spec, cfg);
    bool i_ok = true, d_ok = true, valid = true;
    for (std::size_t k = 0; k < sweep.size(); ++k) {
        const auto& r = sweep[k].report;
        const std::string tag = "t" + lambda_tag(sweep[k].level);
        v.add("I_" + tag, r.I);
        v.add("D_" + tag, r.D);
        v.add("II_" + tag, r.II);
        v.add("total_" + tag, r.total);
        v.add("empirical_" + tag, r.empirical);
        if (k > 0) {
            i_ok = i_ok && r.I <= sweep[k - 1].report.I + 1e-12;
            d_ok = d_ok && r.D >= sweep[k - 1].report.D - 1e-12;
        }
        valid = valid && r.total >= r.empirical;
    }
    v.add("term_I_drop", sweep.front().report.I - sweep.back().report.I);
    v.add("I_non_increasing", i_ok ? 1.0 : 0.0);
    v.add("D_non_decreasing", d_ok ? 1.0 : 0.0);
    v.add("bound_dominates", valid ? 1.0 : 0.0);
    v.outcome = i_ok && d_ok && valid ? Outcome::passed : Outcome::failed;
    return v;
}

}  // namespace dwlab
