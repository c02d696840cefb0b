#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dwlab/datagen.hpp"
#include "dwlab/models.hpp"

namespace dwlab {

enum class SchemeKind {
    equal,
    inverse_margin,
    error_hard_first,
    error_easy_first,
    class_balanced,
    custom_static,
};

const char* to_string(SchemeKind k);
SchemeKind scheme_kind_from_string(const std::string& s);

struct WeightScheme {
    SchemeKind kind = SchemeKind::equal;
    double lower = 0.1;
    double upper = 10.0;
    /// Recompute weights from the current model at the start of every epoch.
    bool dynamic = false;
    /// Static per-sample difficulty (error schemes) or raw weights (custom_static).
    /// Empty means "derive from the model state".
    std::vector<double> difficulty;

    void validate() const;
};

/// The per-sample quantities a scheme may read. Spans that a scheme does not
/// need may stay empty.
struct WeightInputs {
    std::span<const double> margins;
    std::span<const double> errors;
    std::span<const int> class_of;
    std::span<const double> custom;
};

/// Returns clip(s * raw, lower, upper) with the scale s chosen so the result
/// has mean 1, i.e. the fixpoint of alternating clip and renormalize.
std::vector<double> clip_renormalize(std::span<const double> raw, double lower, double upper);

std::vector<double> make_weights(const WeightScheme& scheme, const WeightInputs& in, std::size_t n);

struct Hyper {
    double learning_rate = 0.1;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
    /// Stop once the gradient norm falls below this value (0 disables).
    double stop_grad_norm = 0.0;

    void validate() const;
};

struct TraceRecord {
    std::size_t epoch = 0;
    double objective = 0.0;
    double min_margin = 0.0;
    double normalized_margin = 0.0;
    std::optional<double> cosine_ref;
    std::uint64_t weight_hash = 0;
};

struct TrainTrace {
    std::vector<TraceRecord> records;
    bool weights_renormalized_per_epoch = true;
    bool stopped_early = false;
};

struct TrainResult {
    ModelParams params;
    TrainTrace trace;
    std::vector<double> final_weights;
};

/// Full-batch weighted gradient descent:
///   theta <- theta - lr * grad[(1/n) sum w_i loss_i + lambda |theta|^r]
/// Dynamic schemes read margins and losses of the current model before each
/// update. The trace holds the initial state plus one record per update.
TrainResult train(const ModelParams& init, const Dataset& ds, const WeightScheme& scheme,
                  const LossSpec& loss, const Hyper& hyper,
                  std::optional<std::span<const double>> reference_direction = std::nullopt);

/// min_i margin_i / |theta|^alpha
double normalized_margin(const ModelParams& p, const Dataset& ds);

double cosine_to_direction(std::span<const double> theta, std::span<const double> reference);

/// First epoch from which cosine_ref stays at or above the threshold until the
/// end of the trace. Transient crossings on the way do not count.
std::optional<std::size_t> epochs_to_cosine(const TrainTrace& trace, double threshold);

std::uint64_t hash_weights(std::span<const double> w);

void save_trace_csv(const TrainTrace& trace, std::ostream& out);

}  // namespace dwlab
