#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "dwlab/bounds.hpp"
#include "dwlab/datagen.hpp"
#include "dwlab/difficulty.hpp"
#include "dwlab/models.hpp"
#include "dwlab/optimizer.hpp"

namespace dwlab {

using json = nlohmann::json;

/// JSON mapping for the configuration structs. Missing keys keep the struct
/// defaults; unknown enum names raise SpecificationError.
void to_json(json& j, const DatasetSpec& s);
void from_json(const json& j, DatasetSpec& s);
void to_json(json& j, const NoiseSpec& s);
void from_json(const json& j, NoiseSpec& s);
void to_json(json& j, const LossSpec& s);
void from_json(const json& j, LossSpec& s);
void to_json(json& j, const Hyper& h);
void from_json(const json& j, Hyper& h);
void to_json(json& j, const WeightScheme& s);
void from_json(const json& j, WeightScheme& s);
void to_json(json& j, const ModelFamily& f);
void from_json(const json& j, ModelFamily& f);
void to_json(json& j, const ErrorEstimatorConfig& c);
void from_json(const json& j, ErrorEstimatorConfig& c);
void to_json(json& j, const BoundInputs& b);
void from_json(const json& j, BoundInputs& b);

const char* to_string(NoiseKind k);
NoiseKind noise_kind_from_string(const std::string& s);
EstimatorMode estimator_mode_from_string(const std::string& s);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Digest of the canonical form: object keys sorted, no whitespace, so it is
/// stable under key reordering of the source document. jobs fields are
/// dropped because they never change results.
std::string config_digest(const json& j);

}  // namespace dwlab
