#include "dwlab/difficulty.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "dwlab/errors.hpp"
#include "dwlab/io.hpp"
#include "dwlab/log.hpp"
#include "dwlab/rng.hpp"

namespace dwlab {

const char* to_string(EstimatorMode m) { return m == EstimatorMode::kfold ? "kfold" : "perturb"; }

const char* to_string(Decomposition d) { return d == Decomposition::exact_squared ? "exact_squared" : "residual"; }

void ErrorEstimatorConfig::validate() const {
    if (folds < 2) throw SpecificationError("estimator needs K >= 2 folds");
    if (repeats < 1) throw SpecificationError("estimator needs R >= 1 repeats");
    if (mode == EstimatorMode::perturb && delta < 0.0 && delta != -1.0) {
        throw SpecificationError("delta must be >= 0");
    }
    family.loss.validate();
    family.hyper.validate();
    family.scheme.validate();
}

namespace {

double mean_feature_sd(const Dataset& ds) { return default_feature_epsilon(ds) / 0.05; }

struct RepeatResult {
    std::vector<double> outputs;  // n x width
    std::vector<double> input_grad;  // n x d
    bool failed = false;
};

void run_fold(const Dataset& ds, const ErrorEstimatorConfig& cfg, const FoldPlan& plan, int fold,
              std::size_t repeat, double delta, std::size_t width, RepeatResult& into) {
    const auto train_idx = plan.complement(fold);
    const auto test_idx = plan.members(fold);
    Dataset train_set = ds.subset(train_idx);
    if (cfg.mode == EstimatorMode::perturb && delta > 0.0) {
        Engine eng(derive_seed(cfg.master_seed, {repeat, static_cast<std::uint64_t>(fold), 1}));
        for (double& v : train_set.features) v += delta * standard_normal(eng);
    }
    ModelDims dims{ds.d, cfg.family.hidden, width};
    const auto init = init_params(cfg.family.kind, dims,
                                  derive_seed(cfg.master_seed, {repeat, static_cast<std::uint64_t>(fold), 0}));
    WeightScheme scheme = cfg.family.scheme;
    if (!scheme.difficulty.empty()) {
        std::vector<double> sub;
        for (std::size_t i : train_idx) sub.push_back(scheme.difficulty.at(i));
        scheme.difficulty = std::move(sub);
    }
    const auto res = train(init, train_set, scheme, cfg.family.loss, cfg.family.hyper);
    for (std::size_t i : test_idx) {
        const auto out = forward(res.params, ds.row(i));
        for (double v : out) {
            if (!std::isfinite(v)) throw DivergenceError(cfg.family.hyper.epochs, "held-out prediction is not finite");
        }
        std::copy(out.begin(), out.end(), into.outputs.begin() + static_cast<std::ptrdiff_t>(i * width));
        const auto g = margin_input_grad(res.params, ds.row(i), ds.labels[i]);
        std::copy(g.begin(), g.end(), into.input_grad.begin() + static_cast<std::ptrdiff_t>(i * ds.d));
    }
}

}  // namespace

DifficultyProfile estimate_error_profile(const Dataset& ds, const ErrorEstimatorConfig& cfg) {
    cfg.validate();
    ds.validate();
    const std::size_t n = ds.n;
    const std::size_t width = ds.binary() ? 1 : static_cast<std::size_t>(ds.num_classes);
    cfg.family.loss.check_head(width);
    if (static_cast<std::size_t>(cfg.folds) > n) throw SpecificationError("more folds than samples");
    const double delta = cfg.mode == EstimatorMode::perturb ? (cfg.delta < 0.0 ? 0.01 * mean_feature_sd(ds) : cfg.delta)
                                                            : 0.0;

    const std::size_t R = cfg.repeats;
    const auto K = static_cast<std::size_t>(cfg.folds);
    std::vector<FoldPlan> plans;
    plans.reserve(R);
    for (std::size_t r = 0; r < R; ++r) plans.push_back(make_fold_plan(n, cfg.folds, derive_seed(cfg.master_seed, {r})));
    std::vector<RepeatResult> results(R);
    for (auto& rr : results) {
        rr.outputs.assign(n * width, 0.0);
        rr.input_grad.assign(n * ds.d, 0.0);
    }

    std::atomic<std::size_t> next{0};
    std::mutex fail_mu;
    std::exception_ptr fatal;
    auto worker = [&] {
        while (true) {
            const std::size_t task = next.fetch_add(1);
            if (task >= R * K) return;
            const std::size_t r = task / K;
            const int k = static_cast<int>(task % K);
            try {
                run_fold(ds, cfg, plans[r], k, r, delta, width, results[r]);
            } catch (const DivergenceError& e) {
                std::lock_guard lock(fail_mu);
                results[r].failed = true;
                log::warn(std::string("repeat ") + std::to_string(r) + " discarded: " + e.what());
            } catch (...) {
                std::lock_guard lock(fail_mu);
                if (!fatal) fatal = std::current_exception();
                next.store(R * K);
            }
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, R * K));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    std::vector<std::size_t> used;
    for (std::size_t r = 0; r < R; ++r) {
        if (!results[r].failed) used.push_back(r);
    }
    const std::size_t discarded = R - used.size();
    if (used.empty() || 2 * discarded > R) {
        throw EstimationFailure("more than half of the estimator repeats diverged (" + std::to_string(discarded) +
                                " of " + std::to_string(R) + ")");
    }

    DifficultyProfile p;
    p.loss = cfg.family.loss.kind;
    p.decomposition = p.loss == LossKind::squared ? Decomposition::exact_squared : Decomposition::residual;
    p.outputs = width;
    p.repeats_used = used.size();
    p.repeats_discarded = discarded;
    p.delta_used = delta;
    p.noise_flag = ds.noise_flag;
    p.class_of = ds.class_of;
    for (auto* v : {&p.err, &p.bias, &p.variance, &p.mu_hat, &p.sigma2_hat, &p.uncertainty, &p.z_skew, &p.z_kurt}) {
        v->assign(n, 0.0);
    }
    p.margin_samples.assign(n, {});
    p.held_out_outputs.assign(n, {});

    const auto U = used.size();
    LossSpec plain = cfg.family.loss;
    plain.lambda = 0.0;
    std::vector<double> preds(U * n * width);
    for (std::size_t u = 0; u < U; ++u) {
        std::copy(results[used[u]].outputs.begin(), results[used[u]].outputs.end(),
                  preds.begin() + static_cast<std::ptrdiff_t>(u * n * width));
    }
    if (U >= 2) {
        p.uncertainty = epistemic_uncertainty(preds, U, n, cfg.tau_inv, width);
    } else {
        p.uncertainty.assign(n, std::numeric_limits<double>::quiet_NaN());
    }
    p.margin_input_grad.assign(n * ds.d, 0.0);
    for (std::size_t u = 0; u < U; ++u) {
        const auto& g = results[used[u]].input_grad;
        for (std::size_t j = 0; j < g.size(); ++j) p.margin_input_grad[j] += g[j] / static_cast<double>(U);
    }

    std::vector<double> fbar(width);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(fbar.begin(), fbar.end(), 0.0);
        double err = 0.0;
        auto& ms = p.margin_samples[i];
        auto& ho = p.held_out_outputs[i];
        ms.reserve(U);
        ho.reserve(U * width);
        for (std::size_t u = 0; u < U; ++u) {
            const std::span<const double> out(preds.data() + (u * n + i) * width, width);
            err += loss_value(plain, out, ds.labels[i]);
            ms.push_back(margin_from_outputs(out, ds.labels[i]));
            ho.insert(ho.end(), out.begin(), out.end());
            for (std::size_t c = 0; c < width; ++c) fbar[c] += out[c];
        }
        err /= static_cast<double>(U);
        for (double& v : fbar) v /= static_cast<double>(U);
        p.err[i] = err;
        p.bias[i] = loss_value(plain, fbar, ds.labels[i]);
        p.variance[i] = err - p.bias[i];
        p.mu_hat[i] = stats::mean(ms);
        p.sigma2_hat[i] = stats::variance(ms);
        p.z_skew[i] = p.z_kurt[i] = std::numeric_limits<double>::quiet_NaN();
        if (U >= 8 && p.sigma2_hat[i] > 0.0) {
            try {
                const auto z = stats::gaussianity_z(ms);
                p.z_skew[i] = z.z_skew;
                p.z_kurt[i] = z.z_kurt;
            } catch (const DegenerateSampleError&) {
            }
        }
    }
    return p;
}

ClosedFormError closed_form_error(double mu, double sigma2) {
    if (!(sigma2 >= 0.0)) throw SpecificationError("sigma2 must be >= 0");
    const double v = std::exp(-mu + 0.5 * sigma2);
    return {v, std::isinf(v)};
}

std::vector<double> epistemic_uncertainty(std::span<const double> predictions, std::size_t K, std::size_t n,
                                          double tau_inv, std::size_t width) {
    if (K < 2) throw SpecificationError("epistemic uncertainty needs K >= 2 predictions");
    if (predictions.size() != K * n * width) throw SpecificationError("prediction matrix must be K x (n*width)");
    if (!(tau_inv >= 0.0)) throw SpecificationError("tau_inv must be >= 0");
    std::vector<double> out(n, tau_inv);
    std::vector<double> first(width);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(first.begin(), first.end(), 0.0);
        double second = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double* f = predictions.data() + (k * n + i) * width;
            for (std::size_t c = 0; c < width; ++c) {
                second += f[c] * f[c];
                first[c] += f[c];
            }
        }
        double sq_first = 0.0;
        for (double v : first) {
            const double m = v / static_cast<double>(K);
            sq_first += m * m;
        }
        out[i] += second / static_cast<double>(K) - sq_first;
    }
    return out;
}

std::vector<double> lognormal_law_gaps(const std::vector<std::vector<double>>& margin_samples) {
    std::vector<double> gaps;
    gaps.reserve(margin_samples.size());
    for (const auto& ms : margin_samples) {
        if (ms.empty()) throw SpecificationError("empty margin sample set");
        double emp = 0.0;
        for (double m : ms) emp += std::exp(-m);
        emp /= static_cast<double>(ms.size());
        const auto law = closed_form_error(stats::mean(ms), stats::variance(ms));
        gaps.push_back(std::abs(law.value - emp) / emp);
    }
    return gaps;
}

std::vector<double> verify_lognormal_law(const DifficultyProfile& profile) {
    if (profile.loss != LossKind::exponential) {
        throw SpecificationError("the closed-form error law applies to profiles estimated with exponential loss");
    }
    return lognormal_law_gaps(profile.margin_samples);
}

void save_profile_csv(const DifficultyProfile& p, std::ostream& out) {
    out << "idx,err,bias,variance,mu_hat,sigma2_hat,uncertainty,z_skew,z_kurt,noise_flag,class\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
        out << i << ',' << io::format_real(p.err[i]) << ',' << io::format_real(p.bias[i]) << ','
            << io::format_real(p.variance[i]) << ',' << io::format_real(p.mu_hat[i]) << ','
            << io::format_real(p.sigma2_hat[i]) << ',' << io::format_real(p.uncertainty[i]) << ','
            << io::format_real(p.z_skew[i]) << ',' << io::format_real(p.z_kurt[i]) << ','
            << static_cast<int>(p.noise_flag[i]) << ',' << p.class_of[i] << '\n';
    }
}

}  // namespace dwlab
