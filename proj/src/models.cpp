#include "dwlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "dwlab/errors.hpp"
#include "dwlab/rng.hpp"

namespace dwlab {

namespace {

void require_finite(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (std::isnan(x)) throw NumericError(std::string("NaN in ") + what);
    }
}

}  // namespace

std::size_t ModelParams::expected_size() const {
    if (kind == ModelKind::linear) return dims.outputs * dims.d;
    return dims.h * dims.d + dims.outputs * dims.h;
}

void ModelParams::validate() const {
    if (dims.d == 0 || dims.outputs == 0) throw SpecificationError("model dims must be positive");
    if (kind == ModelKind::mlp2 && dims.h == 0) throw SpecificationError("mlp2 needs h >= 1");
    if (dims.outputs == 2) throw SpecificationError("binary heads use one output; multi-class needs C >= 3");
    if (theta.size() != expected_size()) throw SpecificationError("theta length does not match dims");
    for (double v : theta) {
        if (!std::isfinite(v)) throw SpecificationError("theta contains a non-finite entry");
    }
}

double ModelParams::norm() const {
    double s = 0.0;
    for (double v : theta) s += v * v;
    return std::sqrt(s);
}

ModelParams init_params(ModelKind kind, const ModelDims& dims, std::uint64_t seed) {
    ModelParams p{kind, dims, {}};
    p.theta.resize(p.expected_size());
    Engine eng(seed);
    for (double& v : p.theta) v = standard_normal(eng);
    p.validate();
    return p;
}

ModelParams scaled(const ModelParams& p, double c) {
    ModelParams out = p;
    for (double& v : out.theta) v *= c;
    return out;
}

std::vector<double> forward(const ModelParams& p, std::span<const double> x) {
    const auto& [d, h, C] = p.dims;
    if (x.size() != d) throw SpecificationError("input length does not match model dimension");
    std::vector<double> out(C, 0.0);
    if (p.kind == ModelKind::linear) {
        for (std::size_t c = 0; c < C; ++c) {
            const double* w = p.theta.data() + c * d;
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += w[j] * x[j];
            out[c] = s;
        }
        return out;
    }
    const double* W1 = p.theta.data();
    const double* W2 = W1 + h * d;
    std::vector<double> a(h);
    for (std::size_t k = 0; k < h; ++k) {
        double z = 0.0;
        for (std::size_t j = 0; j < d; ++j) z += W1[k * d + j] * x[j];
        a[k] = z > 0.0 ? z : 0.0;
    }
    for (std::size_t c = 0; c < C; ++c) {
        double s = 0.0;
        for (std::size_t k = 0; k < h; ++k) s += W2[c * h + k] * a[k];
        out[c] = s;
    }
    return out;
}

double margin_from_outputs(std::span<const double> outputs, int label) {
    if (outputs.size() == 1) {
        if (label != -1 && label != 1) throw SpecificationError("binary label must be -1 or +1");
        return static_cast<double>(label) * outputs[0];
    }
    const auto y = static_cast<std::size_t>(label - 1);
    if (label < 1 || y >= outputs.size()) throw SpecificationError("multi-class label out of range");
    double best_other = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < outputs.size(); ++c) {
        if (c != y) best_other = std::max(best_other, outputs[c]);
    }
    return outputs[y] - best_other;
}

double margin(const ModelParams& p, std::span<const double> x, int label) {
    return margin_from_outputs(forward(p, x), label);
}

std::vector<double> margin_input_grad(const ModelParams& p, std::span<const double> x, int label) {
    const auto& [d, h, C] = p.dims;
    const auto out = forward(p, x);
    // coefficient of each output in the margin
    std::vector<double> coef(C, 0.0);
    if (C == 1) {
        coef[0] = static_cast<double>(label);
    } else {
        const auto y = static_cast<std::size_t>(label - 1);
        std::size_t rival = y == 0 ? 1 : 0;
        for (std::size_t c = 0; c < C; ++c) {
            if (c != y && out[c] > out[rival]) rival = c;
        }
        coef[y] = 1.0;
        coef[rival] = -1.0;
    }
    std::vector<double> g(d, 0.0);
    if (p.kind == ModelKind::linear) {
        for (std::size_t c = 0; c < C; ++c) {
            if (coef[c] == 0.0) continue;
            for (std::size_t j = 0; j < d; ++j) g[j] += coef[c] * p.theta[c * d + j];
        }
        return g;
    }
    const double* W1 = p.theta.data();
    const double* W2 = W1 + h * d;
    for (std::size_t k = 0; k < h; ++k) {
        double z = 0.0;
        for (std::size_t j = 0; j < d; ++j) z += W1[k * d + j] * x[j];
        if (z <= 0.0) continue;
        double back = 0.0;
        for (std::size_t c = 0; c < C; ++c) back += coef[c] * W2[c * h + k];
        for (std::size_t j = 0; j < d; ++j) g[j] += back * W1[k * d + j];
    }
    return g;
}

std::vector<double> margins(const ModelParams& p, const Dataset& ds) {
    std::vector<double> out(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) out[i] = margin(p, ds.row(i), ds.labels[i]);
    return out;
}

void LossSpec::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw SpecificationError("lambda must be >= 0");
    if (!(r > 0.0) || !std::isfinite(r)) throw SpecificationError("regularizer exponent r must be > 0");
}

void LossSpec::check_head(std::size_t outputs) const {
    const bool binary = outputs == 1;
    switch (kind) {
        case LossKind::exponential:
        case LossKind::logistic:
        case LossKind::squared:
            if (!binary) throw SpecificationError(std::string(to_string(kind)) + " loss needs a binary head");
            break;
        case LossKind::cross_entropy:
            if (binary) throw SpecificationError("cross_entropy loss needs a logit vector");
            break;
    }
}

const char* to_string(ModelKind k) { return k == ModelKind::linear ? "linear" : "mlp2"; }

const char* to_string(LossKind k) {
    switch (k) {
        case LossKind::exponential: return "exponential";
        case LossKind::logistic: return "logistic";
        case LossKind::cross_entropy: return "cross_entropy";
        case LossKind::squared: return "squared";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "linear") return ModelKind::linear;
    if (s == "mlp2") return ModelKind::mlp2;
    throw SpecificationError("unknown model kind: " + s);
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "exponential") return LossKind::exponential;
    if (s == "logistic") return LossKind::logistic;
    if (s == "cross_entropy") return LossKind::cross_entropy;
    if (s == "squared") return LossKind::squared;
    throw SpecificationError("unknown loss kind: " + s);
}

double exponential_loss(double u) { return std::exp(-u); }

double logistic_loss(double u) {
    return u >= 0.0 ? std::log1p(std::exp(-u)) : -u + std::log1p(std::exp(u));
}

double exponential_loss_grad(double u) { return -std::exp(-u); }

double logistic_loss_grad(double u) {
    // -sigmoid(-u)
    if (u >= 0.0) {
        const double e = std::exp(-u);
        return -e / (1.0 + e);
    }
    return -1.0 / (1.0 + std::exp(u));
}

double loss_value(const LossSpec& spec, std::span<const double> outputs, int label) {
    require_finite(outputs, "loss input");
    spec.check_head(outputs.size());
    switch (spec.kind) {
        case LossKind::exponential: return exponential_loss(margin_from_outputs(outputs, label));
        case LossKind::logistic: return logistic_loss(margin_from_outputs(outputs, label));
        case LossKind::squared: {
            const double r = static_cast<double>(label) - outputs[0];
            return r * r;
        }
        case LossKind::cross_entropy: {
            const auto y = static_cast<std::size_t>(label - 1);
            if (label < 1 || y >= outputs.size()) throw SpecificationError("multi-class label out of range");
            const double mx = *std::max_element(outputs.begin(), outputs.end());
            double s = 0.0;
            for (double o : outputs) s += std::exp(o - mx);
            return mx + std::log(s) - outputs[y];
        }
    }
    return 0.0;
}

void loss_output_grad(const LossSpec& spec, std::span<const double> outputs, int label,
                      std::span<double> grad_out) {
    spec.check_head(outputs.size());
    switch (spec.kind) {
        case LossKind::exponential:
            grad_out[0] = static_cast<double>(label) * exponential_loss_grad(static_cast<double>(label) * outputs[0]);
            return;
        case LossKind::logistic:
            grad_out[0] = static_cast<double>(label) * logistic_loss_grad(static_cast<double>(label) * outputs[0]);
            return;
        case LossKind::squared:
            grad_out[0] = 2.0 * (outputs[0] - static_cast<double>(label));
            return;
        case LossKind::cross_entropy: {
            const auto y = static_cast<std::size_t>(label - 1);
            const double mx = *std::max_element(outputs.begin(), outputs.end());
            double s = 0.0;
            for (std::size_t c = 0; c < outputs.size(); ++c) {
                grad_out[c] = std::exp(outputs[c] - mx);
                s += grad_out[c];
            }
            for (std::size_t c = 0; c < outputs.size(); ++c) grad_out[c] /= s;
            grad_out[y] -= 1.0;
            return;
        }
    }
}

double objective(const ModelParams& p, const Dataset& batch, const LossSpec& spec,
                 std::span<const double> weights) {
    if (weights.size() != batch.n) throw SpecificationError("weights length must equal batch size");
    double total = 0.0;
    for (std::size_t i = 0; i < batch.n; ++i) {
        if (weights[i] == 0.0) continue;
        total += weights[i] * loss_value(spec, forward(p, batch.row(i)), batch.labels[i]);
    }
    total /= static_cast<double>(batch.n);
    if (spec.lambda > 0.0) total += spec.lambda * std::pow(p.norm(), spec.r);
    return total;
}

std::vector<double> grad_params(const ModelParams& p, const Dataset& batch, const LossSpec& spec,
                                std::span<const double> weights) {
    if (weights.size() != batch.n) throw SpecificationError("weights length must equal batch size");
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw SpecificationError("weights must be finite and >= 0");
    }
    spec.check_head(p.dims.outputs);
    const auto& [d, h, C] = p.dims;
    if (batch.d != d) throw SpecificationError("batch dimension does not match model");

    std::vector<double> grad(p.theta.size(), 0.0);
    std::vector<double> g_out(C);
    const double inv_n = 1.0 / static_cast<double>(batch.n);

    if (p.kind == ModelKind::linear) {
        for (std::size_t i = 0; i < batch.n; ++i) {
            if (weights[i] == 0.0) continue;
            const auto x = batch.row(i);
            const auto out = forward(p, x);
            loss_output_grad(spec, out, batch.labels[i], g_out);
            const double s = weights[i] * inv_n;
            for (std::size_t c = 0; c < C; ++c) {
                for (std::size_t j = 0; j < d; ++j) grad[c * d + j] += s * g_out[c] * x[j];
            }
        }
    } else {
        const double* W1 = p.theta.data();
        const double* W2 = W1 + h * d;
        double* gW1 = grad.data();
        double* gW2 = gW1 + h * d;
        std::vector<double> z(h), a(h), g_a(h);
        std::vector<double> out(C);
        for (std::size_t i = 0; i < batch.n; ++i) {
            if (weights[i] == 0.0) continue;
            const auto x = batch.row(i);
            for (std::size_t k = 0; k < h; ++k) {
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j) s += W1[k * d + j] * x[j];
                z[k] = s;
                a[k] = s > 0.0 ? s : 0.0;
            }
            for (std::size_t c = 0; c < C; ++c) {
                double s = 0.0;
                for (std::size_t k = 0; k < h; ++k) s += W2[c * h + k] * a[k];
                out[c] = s;
            }
            loss_output_grad(spec, out, batch.labels[i], g_out);
            const double s = weights[i] * inv_n;
            std::fill(g_a.begin(), g_a.end(), 0.0);
            for (std::size_t c = 0; c < C; ++c) {
                for (std::size_t k = 0; k < h; ++k) {
                    gW2[c * h + k] += s * g_out[c] * a[k];
                    g_a[k] += g_out[c] * W2[c * h + k];
                }
            }
            for (std::size_t k = 0; k < h; ++k) {
                if (!(z[k] > 0.0)) continue;  // relu subgradient 0 at 0
                for (std::size_t j = 0; j < d; ++j) gW1[k * d + j] += s * g_a[k] * x[j];
            }
        }
    }

    if (spec.lambda > 0.0) {
        const double nrm = p.norm();
        if (nrm > 0.0) {
            const double coef = spec.lambda * spec.r * std::pow(nrm, spec.r - 2.0);
            for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += coef * p.theta[k];
        }
    }
    return grad;
}

int homogeneity_degree(const ModelParams& p, std::span<const double> probes) {
    p.validate();
    const int alpha = p.kind == ModelKind::linear ? 1 : 2;
    const std::size_t d = p.dims.d;
    if (probes.size() % d != 0) throw SpecificationError("probe buffer must hold whole rows");
    for (std::size_t off = 0; off < probes.size(); off += d) {
        const auto x = probes.subspan(off, d);
        const auto base = forward(p, x);
        for (double c : {0.5, 2.0, 3.0}) {
            const auto sc = forward(scaled(p, c), x);
            const double factor = std::pow(c, alpha);
            for (std::size_t k = 0; k < base.size(); ++k) {
                if (std::abs(sc[k] - factor * base[k]) > 1e-9 * (1.0 + std::abs(sc[k]))) {
                    throw InvariantViolation("predictor is not " + std::to_string(alpha) +
                                             "-homogeneous; biased architecture?");
                }
            }
        }
    }
    return alpha;
}

int homogeneity_degree(const ModelParams& p) {
    Engine eng(derive_seed(0x686f6d6fULL, {p.dims.d}));
    std::vector<double> probes(8 * p.dims.d);
    for (double& v : probes) v = standard_normal(eng);
    return homogeneity_degree(p, probes);
}

double ground_truth_probability(double m) {
    return m >= 0.0 ? 1.0 / (1.0 + std::exp(-m)) : std::exp(m) / (1.0 + std::exp(m));
}

std::string checkpoint_to_json(const ModelParams& p) {
    // Hand-written so every real carries 17 significant digits.
    std::string s = "{\"kind\":\"";
    s += to_string(p.kind);
    s += "\",\"dims\":{\"d\":" + std::to_string(p.dims.d) + ",\"h\":" + std::to_string(p.dims.h) +
         ",\"outputs\":" + std::to_string(p.dims.outputs) + "},\"theta\":[";
    char buf[40];
    for (std::size_t k = 0; k < p.theta.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", p.theta[k]);
        if (k) s += ',';
        s += buf;
    }
    s += "]}";
    return s;
}

ModelParams checkpoint_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ModelParams p;
    p.kind = model_kind_from_string(j.at("kind").get<std::string>());
    p.dims.d = j.at("dims").at("d").get<std::size_t>();
    p.dims.h = j.at("dims").at("h").get<std::size_t>();
    p.dims.outputs = j.at("dims").at("outputs").get<std::size_t>();
    p.theta = j.at("theta").get<std::vector<double>>();
    p.validate();
    return p;
}

}  // namespace dwlab
