#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dwlab/bounds.hpp"
#include "dwlab/config.hpp"
#include "dwlab/datagen.hpp"
#include "dwlab/difficulty.hpp"

namespace dwlab {

enum class Outcome { passed, failed, inconclusive };

const char* to_string(Outcome o);

/// Result of one empirical check. Statistics keep insertion order and are
/// always filled, whatever the outcome.
struct CheckVerdict {
    std::string check_id;
    Outcome outcome = Outcome::inconclusive;
    std::vector<std::pair<std::string, double>> statistics;
    std::string headline;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::vector<std::string> notes;

    bool passed() const { return outcome == Outcome::passed; }
    void add(const std::string& name, double value);
    /// Throws SpecificationError for an unknown name.
    double stat(const std::string& name) const;
    double headline_value() const;
    json to_json() const;
};

void write_verdicts_jsonl(const std::vector<CheckVerdict>& verdicts, std::ostream& out);
/// check_id,passed,headline_statistic
void write_verdict_summary_csv(const std::vector<CheckVerdict>& verdicts, std::ostream& out);

// ---------------------------------------------------------------- label noise

struct LabelNoiseCheckConfig {
    double rate = 0.1;
    NoiseKind kind = NoiseKind::flip_label;
    std::uint64_t noise_seed = 1;
    ErrorEstimatorConfig estimator;
    double level = 0.95;
    std::size_t resamples = 2000;
    /// Samples used for the exact flip-pattern enumeration (at most 10).
    std::size_t enum_size = 10;
    /// Corrupted draws averaged for the sampled side of the risk identity.
    std::size_t risk_draws = 20000;
};

void to_json(json& j, const LabelNoiseCheckConfig& c);
void from_json(const json& j, LabelNoiseCheckConfig& c);

/// Expected risk of fixed margins under independent label flips at rate pi,
/// by summing over all 2^n flip patterns. Binary losses on the margin only.
double enumerated_noisy_risk(const LossSpec& loss, std::span<const double> margins, double pi);

/// (1 - pi) L(f, y) + pi L(f, y') with y' the flipped label.
double mixture_noisy_risk(const LossSpec& loss, std::span<const double> margins, double pi);

CheckVerdict check_label_noise(const Dataset& base, const LabelNoiseCheckConfig& cfg);

// ------------------------------------------------------------------ imbalance

struct ImbalanceCheckConfig {
    ErrorEstimatorConfig estimator;
};

void to_json(json& j, const ImbalanceCheckConfig& c);
void from_json(const json& j, ImbalanceCheckConfig& c);

CheckVerdict check_imbalance(const DatasetSpec& spec, const ImbalanceCheckConfig& cfg);

struct RecallComparisonConfig {
    ModelFamily family;
    std::vector<std::uint64_t> seeds;
    /// Test samples per class are this multiple of the training counts.
    std::size_t test_scale = 10;
    /// Passing needs strict improvement on at least this many seeds.
    std::size_t required = 8;
};

void to_json(json& j, const RecallComparisonConfig& c);
void from_json(const json& j, RecallComparisonConfig& c);

/// Trains equal and class-balanced weights on each seed of the spec and
/// compares recall of the smallest class on a held-out draw.
CheckVerdict compare_small_class_recall(const DatasetSpec& spec, const RecallComparisonConfig& cfg);

// -------------------------------------------------------------- margin / error

struct MarginErrorCheckConfig {
    /// Variance-matching tolerance as a fraction of the median sigma2_hat.
    double match_fraction = 0.05;
    double agreement_required = 0.95;
    double gaussian_fraction_required = 0.80;
    double z_limit = 1.96;
};

void to_json(json& j, const MarginErrorCheckConfig& c);
void from_json(const json& j, MarginErrorCheckConfig& c);

CheckVerdict check_margin_error(const DifficultyProfile& profile, const MarginErrorCheckConfig& cfg);

// --------------------------------------------------------------- dual weights

enum class DualModel { linear_p, exponential_p };

/// linear_p: p = a gamma + b with a < 0. exponential_p: p = c exp(-gamma), c > 0.
struct DualCoefficients {
    double a = -1.0;
    double b = 0.0;
    double c = 1.0;
};

CheckVerdict check_dual_weights(const std::vector<double>& margins_i, const std::vector<double>& margins_j,
                                DualModel model, const DualCoefficients& coef);

// ---------------------------------------------------------- margin convergence

struct MarginConvergenceConfig {
    std::vector<double> lambdas{1e-1, 1e-2, 1e-3};
    std::vector<WeightScheme> schemes;
    LossSpec loss{LossKind::logistic};
    Hyper hyper{0.1, 300000, 0, 1e-10};
    std::uint64_t init_seed = 0;
    double monotone_tolerance = 1e-3;
    double oracle_tolerance = 0.05;
    /// Acceleration run: unregularized training budget and cosine threshold.
    std::size_t acceleration_epochs = 30000;
    double cosine_threshold = 0.99;
};

void to_json(json& j, const MarginConvergenceConfig& c);
void from_json(const json& j, MarginConvergenceConfig& c);

/// Epochs (sustained) to reach the cosine threshold against the max-margin
/// direction, for each scheme, from one shared initialization. nullopt when the
/// budget runs out first.
std::vector<std::optional<std::size_t>> epochs_to_oracle(const Dataset& ds, const std::vector<WeightScheme>& schemes,
                                                         const LossSpec& loss, const Hyper& hyper,
                                                         std::uint64_t init_seed, double threshold);

/// Linear, binary, separable data only.
CheckVerdict check_margin_convergence(const Dataset& ds, const MarginConvergenceConfig& cfg);

// -------------------------------------------------------------- feature noise

struct FeatureNoiseCheckConfig {
    double epsilon = -1.0;  // negative: default_feature_epsilon
    double fraction = 0.2;  // share of samples perturbed
    std::uint64_t noise_seed = 1;
    ErrorEstimatorConfig estimator;
};

void to_json(json& j, const FeatureNoiseCheckConfig& c);
void from_json(const json& j, FeatureNoiseCheckConfig& c);

/// Perturbs a random subset along the estimated reference gradient in both
/// directions and re-estimates: adversarial must raise their mean error and
/// promoted must lower it.
CheckVerdict check_feature_noise(const Dataset& base, const FeatureNoiseCheckConfig& cfg);

// ------------------------------------------------------------ bound tradeoff

struct BoundSweepConfig {
    /// Mixing levels t: w = (1 - t) * 1 + t * w_hard.
    std::vector<double> levels{0.0, 0.25, 0.5, 0.75, 1.0};
    ErrorEstimatorConfig estimator;
    ModelFamily family;
    /// Margin indicators are averaged over this many training seeds.
    std::size_t model_seeds = 5;
    /// Retrain the models at every level; otherwise keep the equal-weight models
    /// and let only the density ratios move.
    bool refit = true;
    double gamma_fraction = 0.1;  // gamma = fraction * L
    double delta = 0.05;
    Chi2Convention convention = Chi2Convention::paper;
    double lower = 0.1;
    double upper = 10.0;
    std::size_t test_scale = 10;
};

void to_json(json& j, const BoundSweepConfig& c);
void from_json(const json& j, BoundSweepConfig& c);

struct BoundSweepPoint {
    double level = 0.0;
    BoundReport report;
};

/// Hard-first weight sweep on a generated dataset, one bound report per level.
std::vector<BoundSweepPoint> bound_weight_sweep(const DatasetSpec& spec, const BoundSweepConfig& cfg);

/// term I non-increasing and D non-decreasing along the sweep, total >= empirical.
CheckVerdict check_bound_tradeoff(const DatasetSpec& spec, const BoundSweepConfig& cfg);

}  // namespace dwlab
