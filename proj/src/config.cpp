#include "dwlab/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "dwlab/errors.hpp"

namespace dwlab {

namespace {

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(out);
}

json strip_jobs(const json& j) {
    if (j.is_object()) {
        json out = json::object();
        for (const auto& [k, v] : j.items()) {
            if (k != "jobs") out[k] = strip_jobs(v);
        }
        return out;
    }
    if (j.is_array()) {
        json out = json::array();
        for (const auto& v : j) out.push_back(strip_jobs(v));
        return out;
    }
    return j;
}

}  // namespace

const char* to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::uniform_label: return "uniform_label";
        case NoiseKind::flip_label: return "flip_label";
        case NoiseKind::feature: return "feature";
    }
    return "?";
}

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "uniform_label") return NoiseKind::uniform_label;
    if (s == "flip_label") return NoiseKind::flip_label;
    if (s == "feature") return NoiseKind::feature;
    throw SpecificationError("unknown noise kind: " + s);
}

EstimatorMode estimator_mode_from_string(const std::string& s) {
    if (s == "kfold") return EstimatorMode::kfold;
    if (s == "perturb") return EstimatorMode::perturb;
    throw SpecificationError("unknown estimator mode: " + s);
}

void to_json(json& j, const DatasetSpec& s) {
    j = json{{"class_means", s.class_means},
             {"class_variances", s.class_variances},
             {"class_counts", s.class_counts},
             {"seed", s.seed}};
}

void from_json(const json& j, DatasetSpec& s) {
    get_if(j, "class_means", s.class_means);
    get_if(j, "class_variances", s.class_variances);
    get_if(j, "class_counts", s.class_counts);
    get_if(j, "seed", s.seed);
}

void to_json(json& j, const NoiseSpec& s) {
    j = json{{"rate", s.rate},
             {"kind", to_string(s.kind)},
             {"epsilon", s.epsilon},
             {"direction", s.direction == FeatureDirection::adversarial ? "adversarial" : "promoted"},
             {"seed", s.seed}};
}

void from_json(const json& j, NoiseSpec& s) {
    get_if(j, "rate", s.rate);
    if (j.contains("kind")) s.kind = noise_kind_from_string(j.at("kind").get<std::string>());
    get_if(j, "epsilon", s.epsilon);
    if (j.contains("direction")) {
        const auto d = j.at("direction").get<std::string>();
        if (d == "adversarial") {
            s.direction = FeatureDirection::adversarial;
        } else if (d == "promoted") {
            s.direction = FeatureDirection::promoted;
        } else {
            throw SpecificationError("unknown feature-noise direction: " + d);
        }
    }
    get_if(j, "seed", s.seed);
}

void to_json(json& j, const LossSpec& s) { j = json{{"kind", to_string(s.kind)}, {"lambda", s.lambda}, {"r", s.r}}; }

void from_json(const json& j, LossSpec& s) {
    if (j.contains("kind")) s.kind = loss_kind_from_string(j.at("kind").get<std::string>());
    get_if(j, "lambda", s.lambda);
    get_if(j, "r", s.r);
}

void to_json(json& j, const Hyper& h) {
    j = json{{"learning_rate", h.learning_rate},
             {"epochs", h.epochs},
             {"seed", h.seed},
             {"stop_grad_norm", h.stop_grad_norm}};
}

void from_json(const json& j, Hyper& h) {
    get_if(j, "learning_rate", h.learning_rate);
    get_if(j, "epochs", h.epochs);
    get_if(j, "seed", h.seed);
    get_if(j, "stop_grad_norm", h.stop_grad_norm);
}

void to_json(json& j, const WeightScheme& s) {
    j = json{{"kind", to_string(s.kind)}, {"lower", s.lower}, {"upper", s.upper}, {"dynamic", s.dynamic}};
    if (!s.difficulty.empty()) j["difficulty"] = s.difficulty;
}

void from_json(const json& j, WeightScheme& s) {
    if (j.contains("kind")) s.kind = scheme_kind_from_string(j.at("kind").get<std::string>());
    get_if(j, "lower", s.lower);
    get_if(j, "upper", s.upper);
    get_if(j, "dynamic", s.dynamic);
    get_if(j, "difficulty", s.difficulty);
}

void to_json(json& j, const ModelFamily& f) {
    j = json{{"kind", to_string(f.kind)}, {"hidden", f.hidden}, {"loss", f.loss}, {"hyper", f.hyper},
             {"scheme", f.scheme}};
}

void from_json(const json& j, ModelFamily& f) {
    if (j.contains("kind")) f.kind = model_kind_from_string(j.at("kind").get<std::string>());
    get_if(j, "hidden", f.hidden);
    get_if(j, "loss", f.loss);
    get_if(j, "hyper", f.hyper);
    get_if(j, "scheme", f.scheme);
}

void to_json(json& j, const ErrorEstimatorConfig& c) {
    j = json{{"folds", c.folds},   {"repeats", c.repeats},         {"mode", to_string(c.mode)},
             {"delta", c.delta},   {"tau_inv", c.tau_inv},         {"family", c.family},
             {"master_seed", c.master_seed}, {"jobs", c.jobs}};
}

void from_json(const json& j, ErrorEstimatorConfig& c) {
    get_if(j, "folds", c.folds);
    get_if(j, "repeats", c.repeats);
    if (j.contains("mode")) c.mode = estimator_mode_from_string(j.at("mode").get<std::string>());
    get_if(j, "delta", c.delta);
    get_if(j, "tau_inv", c.tau_inv);
    get_if(j, "family", c.family);
    get_if(j, "master_seed", c.master_seed);
    get_if(j, "jobs", c.jobs);
}

void to_json(json& j, const BoundInputs& b) {
    j = json{{"gamma", b.gamma}, {"delta", b.delta}, {"q", b.q}, {"L", b.L}, {"n", b.n}};
}

void from_json(const json& j, BoundInputs& b) {
    get_if(j, "gamma", b.gamma);
    get_if(j, "delta", b.delta);
    get_if(j, "q", b.q);
    get_if(j, "L", b.L);
    get_if(j, "n", b.n);
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw NumericError("SHA-256 computation failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

std::string config_digest(const json& j) { return sha256_hex(strip_jobs(j).dump()); }

}  // namespace dwlab
