#include "dwlab/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <ostream>

#include "dwlab/errors.hpp"
#include "dwlab/io.hpp"

namespace dwlab {

const char* to_string(SchemeKind k) {
    switch (k) {
        case SchemeKind::equal: return "equal";
        case SchemeKind::inverse_margin: return "inverse_margin";
        case SchemeKind::error_hard_first: return "error_hard_first";
        case SchemeKind::error_easy_first: return "error_easy_first";
        case SchemeKind::class_balanced: return "class_balanced";
        case SchemeKind::custom_static: return "custom_static";
    }
    return "?";
}

SchemeKind scheme_kind_from_string(const std::string& s) {
    for (auto k : {SchemeKind::equal, SchemeKind::inverse_margin, SchemeKind::error_hard_first,
                   SchemeKind::error_easy_first, SchemeKind::class_balanced, SchemeKind::custom_static}) {
        if (s == to_string(k)) return k;
    }
    throw SpecificationError("unknown weight scheme: " + s);
}

void WeightScheme::validate() const {
    if (!(lower > 0.0)) throw SpecificationError("weight lower bound must be > 0");
    if (!(upper >= lower) || !std::isfinite(upper)) throw SpecificationError("weight upper bound must be >= lower");
    if (lower > 1.0 || upper < 1.0) throw SpecificationError("bounds must bracket 1 so a mean-1 vector exists");
}

std::vector<double> clip_renormalize(std::span<const double> raw, double lower, double upper) {
    const std::size_t n = raw.size();
    std::vector<double> w(n, 1.0);
    if (n == 0) return w;
    for (double v : raw) {
        if (!std::isfinite(v) || v < 0.0) throw SpecificationError("raw weights must be finite and >= 0");
    }
    const double target = static_cast<double>(n);

    // F(s) = sum_i clip(s * raw_i, lower, upper) is nondecreasing and piecewise
    // linear in s; its kinks sit at lower/raw_i and upper/raw_i.
    std::vector<double> kinks;
    std::size_t positive = 0;
    for (double v : raw) {
        if (v > 0.0) {
            ++positive;
            kinks.push_back(lower / v);
            kinks.push_back(upper / v);
        }
    }
    const double zeros = static_cast<double>(n - positive);
    if (positive == 0) return w;
    if (static_cast<double>(positive) * upper + zeros * lower < target) {
        // Saturating every positive entry still leaves mass over; the zero
        // entries take it.
        const double fill = std::clamp((target - static_cast<double>(positive) * upper) / zeros, lower, upper);
        for (std::size_t i = 0; i < n; ++i) w[i] = raw[i] > 0.0 ? upper : fill;
        return w;
    }
    auto F = [&](double s) {
        double acc = 0.0;
        for (double v : raw) acc += std::clamp(s * v, lower, upper);
        return acc;
    };
    std::sort(kinks.begin(), kinks.end());
    double lo = 0.0;
    double hi = kinks.back();
    for (double k : kinks) {
        if (F(k) >= target) {
            hi = k;
            break;
        }
        lo = k;
    }
    // Linear between lo and hi: solve exactly.
    double slope = 0.0;
    double offset = 0.0;
    const double mid = 0.5 * (lo + hi);
    for (double v : raw) {
        const double x = mid * v;
        if (x <= lower) offset += lower;
        else if (x >= upper) offset += upper;
        else slope += v;
    }
    const double s = slope > 0.0 ? (target - offset) / slope : hi;
    for (std::size_t i = 0; i < n; ++i) w[i] = std::clamp(s * raw[i], lower, upper);

    // Absorb rounding residue on the unsaturated entries.
    double sum = std::accumulate(w.begin(), w.end(), 0.0);
    std::size_t nfree = 0;
    for (double v : w) nfree += (v > lower && v < upper);
    if (nfree > 0 && sum != target) {
        const double each = (target - sum) / static_cast<double>(nfree);
        for (double& v : w) {
            if (v > lower && v < upper) v = std::clamp(v + each, lower, upper);
        }
    }
    return w;
}

std::vector<double> make_weights(const WeightScheme& scheme, const WeightInputs& given, std::size_t n) {
    scheme.validate();
    // A static difficulty vector stands in for missing error or custom inputs.
    WeightInputs in = given;
    if (in.errors.empty() && !scheme.difficulty.empty()) in.errors = scheme.difficulty;
    if (in.custom.empty() && !scheme.difficulty.empty()) in.custom = scheme.difficulty;
    auto check_len = [n](std::span<const double> v, const char* what) {
        if (v.size() != n) throw SpecificationError(std::string(what) + " length must equal n");
        for (double x : v) {
            if (!std::isfinite(x)) throw SpecificationError(std::string("non-finite ") + what);
        }
    };
    std::vector<double> raw(n, 1.0);
    switch (scheme.kind) {
        case SchemeKind::equal:
            return raw;
        case SchemeKind::inverse_margin: {
            check_len(in.margins, "margins");
            double max_abs = 0.0;
            for (double m : in.margins) max_abs = std::max(max_abs, std::abs(m));
            const double floor = max_abs > 0.0 ? 1e-3 * max_abs : 1.0;
            for (std::size_t i = 0; i < n; ++i) raw[i] = 1.0 / std::max(in.margins[i], floor);
            break;
        }
        case SchemeKind::error_hard_first:
            check_len(in.errors, "errors");
            for (std::size_t i = 0; i < n; ++i) raw[i] = std::max(in.errors[i], 0.0);
            break;
        case SchemeKind::error_easy_first:
            check_len(in.errors, "errors");
            for (std::size_t i = 0; i < n; ++i) raw[i] = std::exp(-in.errors[i]);
            break;
        case SchemeKind::class_balanced: {
            if (in.class_of.size() != n) throw SpecificationError("class_of length must equal n");
            std::vector<double> counts;
            for (int c : in.class_of) {
                if (c < 0) throw SpecificationError("negative class id");
                if (static_cast<std::size_t>(c) >= counts.size()) counts.resize(static_cast<std::size_t>(c) + 1, 0.0);
                counts[static_cast<std::size_t>(c)] += 1.0;
            }
            for (std::size_t i = 0; i < n; ++i) raw[i] = 1.0 / counts[static_cast<std::size_t>(in.class_of[i])];
            break;
        }
        case SchemeKind::custom_static:
            check_len(in.custom, "custom weights");
            for (std::size_t i = 0; i < n; ++i) {
                if (in.custom[i] < 0.0) throw SpecificationError("custom weights must be >= 0");
                raw[i] = in.custom[i];
            }
            break;
    }
    return clip_renormalize(raw, scheme.lower, scheme.upper);
}

void Hyper::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw SpecificationError("learning rate must be > 0");
    if (!(stop_grad_norm >= 0.0)) throw SpecificationError("stop_grad_norm must be >= 0");
}

std::uint64_t hash_weights(std::span<const double> w) {
    // FNV-1a over the raw bytes
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : w) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

namespace {

std::vector<double> state_weights(const WeightScheme& scheme, const ModelParams& p, const Dataset& ds,
                                  const LossSpec& loss) {
    WeightInputs in;
    in.class_of = ds.class_of;
    std::vector<double> m;
    std::vector<double> e;
    const bool from_model = scheme.difficulty.empty();
    switch (scheme.kind) {
        case SchemeKind::inverse_margin:
            if (from_model) {
                m = margins(p, ds);
                in.margins = m;
            } else {
                in.margins = scheme.difficulty;
            }
            break;
        case SchemeKind::error_hard_first:
        case SchemeKind::error_easy_first:
            if (from_model) {
                e.resize(ds.n);
                for (std::size_t i = 0; i < ds.n; ++i) e[i] = loss_value(loss, forward(p, ds.row(i)), ds.labels[i]);
                in.errors = e;
            } else {
                in.errors = scheme.difficulty;
            }
            break;
        case SchemeKind::custom_static:
            in.custom = scheme.difficulty;
            break;
        default:
            break;
    }
    return make_weights(scheme, in, ds.n);
}

TraceRecord record_state(std::size_t epoch, const ModelParams& p, const Dataset& ds, const LossSpec& loss,
                         std::span<const double> w, std::optional<std::span<const double>> ref) {
    TraceRecord r;
    r.epoch = epoch;
    r.objective = objective(p, ds, loss, w);
    const auto m = margins(p, ds);
    r.min_margin = *std::min_element(m.begin(), m.end());
    const double nrm = p.norm();
    const int alpha = p.kind == ModelKind::linear ? 1 : 2;
    r.normalized_margin = nrm > 0.0 ? r.min_margin / std::pow(nrm, alpha) : 0.0;
    if (ref && nrm > 0.0) r.cosine_ref = cosine_to_direction(p.theta, *ref);
    r.weight_hash = hash_weights(w);
    return r;
}

}  // namespace

TrainResult train(const ModelParams& init, const Dataset& ds, const WeightScheme& scheme, const LossSpec& loss,
                  const Hyper& hyper, std::optional<std::span<const double>> reference_direction) {
    init.validate();
    ds.validate();
    loss.validate();
    hyper.validate();
    scheme.validate();
    loss.check_head(init.dims.outputs);
    if (ds.d != init.dims.d) throw SpecificationError("dataset dimension does not match model");
    if (ds.n == 0) throw SpecificationError("cannot train on an empty dataset");
    if ((ds.binary() ? 1u : static_cast<std::size_t>(ds.num_classes)) != init.dims.outputs) {
        throw SpecificationError("model head does not match the number of classes");
    }
    if (reference_direction && reference_direction->size() != init.theta.size()) {
        throw SpecificationError("reference direction length must equal theta length");
    }

    TrainResult res{init, {}, {}};
    auto& p = res.params;
    auto w = state_weights(scheme, p, ds, loss);
    res.trace.records.reserve(hyper.epochs + 1);

    auto push = [&](std::size_t epoch) {
        auto rec = record_state(epoch, p, ds, loss, w, reference_direction);
        if (!std::isfinite(rec.objective)) throw DivergenceError(epoch, "training objective is not finite");
        res.trace.records.push_back(rec);
    };
    push(0);

    for (std::size_t t = 0; t < hyper.epochs; ++t) {
        if (scheme.dynamic && t > 0) w = state_weights(scheme, p, ds, loss);
        const auto g = grad_params(p, ds, loss, w);
        double gn = 0.0;
        for (double v : g) gn += v * v;
        if (!std::isfinite(gn)) throw DivergenceError(t + 1, "gradient is not finite");
        if (hyper.stop_grad_norm > 0.0 && std::sqrt(gn) < hyper.stop_grad_norm) {
            res.trace.stopped_early = true;
            break;
        }
        for (std::size_t k = 0; k < g.size(); ++k) p.theta[k] -= hyper.learning_rate * g[k];
        for (double v : p.theta) {
            if (!std::isfinite(v)) throw DivergenceError(t + 1, "parameters are not finite");
        }
        push(t + 1);
    }
    res.final_weights = std::move(w);
    return res;
}

double normalized_margin(const ModelParams& p, const Dataset& ds) {
    const double nrm = p.norm();
    if (!(nrm > 0.0)) throw UndefinedError("normalized margin is undefined at theta = 0");
    const int alpha = p.kind == ModelKind::linear ? 1 : 2;
    const auto m = margins(p, ds);
    if (m.empty()) throw SpecificationError("normalized margin needs at least one sample");
    return *std::min_element(m.begin(), m.end()) / std::pow(nrm, alpha);
}

double cosine_to_direction(std::span<const double> theta, std::span<const double> reference) {
    if (theta.size() != reference.size()) throw SpecificationError("vectors differ in length");
    double dot = 0.0, a = 0.0, b = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        dot += theta[k] * reference[k];
        a += theta[k] * theta[k];
        b += reference[k] * reference[k];
    }
    if (!(a > 0.0) || !(b > 0.0)) throw UndefinedError("cosine is undefined for a zero vector");
    return std::clamp(dot / (std::sqrt(a) * std::sqrt(b)), -1.0, 1.0);
}

std::optional<std::size_t> epochs_to_cosine(const TrainTrace& trace, double threshold) {
    std::optional<std::size_t> since;
    for (const auto& r : trace.records) {
        if (!r.cosine_ref) return std::nullopt;
        if (*r.cosine_ref >= threshold) {
            if (!since) since = r.epoch;
        } else {
            since.reset();
        }
    }
    return since;
}

void save_trace_csv(const TrainTrace& trace, std::ostream& out) {
    out << "epoch,objective,min_margin,normalized_margin,cosine_ref\n";
    for (const auto& r : trace.records) {
        out << r.epoch << ',' << io::format_real(r.objective) << ',' << io::format_real(r.min_margin) << ','
            << io::format_real(r.normalized_margin) << ',';
        if (r.cosine_ref) out << io::format_real(*r.cosine_ref);
        out << '\n';
    }
}

}  // namespace dwlab
