#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dwlab/datagen.hpp"
#include "dwlab/models.hpp"
#include "dwlab/optimizer.hpp"
#include "dwlab/stats.hpp"

namespace dwlab {

/// What gets trained inside the estimator.
struct ModelFamily {
    ModelKind kind = ModelKind::linear;
    std::size_t hidden = 5;
    LossSpec loss;
    Hyper hyper;
    WeightScheme scheme;
};

enum class EstimatorMode { kfold, perturb };

struct ErrorEstimatorConfig {
    int folds = 5;
    std::size_t repeats = 20;
    EstimatorMode mode = EstimatorMode::kfold;
    /// Standard deviation of the Gaussian feature perturbation applied to the
    /// training portion in perturb mode. Negative selects the default,
    /// 0.01 x the mean per-feature standard deviation.
    double delta = -1.0;
    double tau_inv = 0.0;
    ModelFamily family;
    std::uint64_t master_seed = 0;
    /// Worker threads for the R x K inner runs; never changes results.
    std::size_t jobs = 1;

    void validate() const;
};

/// exact_squared: err = bias + variance is the squared-loss decomposition.
/// residual: bias is the loss at the mean prediction and variance is the
/// remainder, which may be negative.
enum class Decomposition { exact_squared, residual };

struct DifficultyProfile {
    std::vector<double> err;
    std::vector<double> bias;
    std::vector<double> variance;
    std::vector<double> mu_hat;
    std::vector<double> sigma2_hat;
    std::vector<double> uncertainty;
    std::vector<double> z_skew;
    std::vector<double> z_kurt;
    /// margin_samples[i][r]: held-out functional margin of sample i in repeat r.
    std::vector<std::vector<double>> margin_samples;
    /// held_out_outputs[i]: R x outputs held-out predictions of sample i, row-major.
    std::vector<std::vector<double>> held_out_outputs;
    /// n x d row-major: mean over repeats of the held-out model's margin
    /// gradient with respect to the input, the reference for feature noise.
    std::vector<double> margin_input_grad;
    std::vector<std::uint8_t> noise_flag;
    std::vector<int> class_of;

    LossKind loss = LossKind::exponential;
    Decomposition decomposition = Decomposition::residual;
    std::size_t outputs = 1;
    std::size_t repeats_used = 0;
    std::size_t repeats_discarded = 0;
    double delta_used = 0.0;

    std::size_t size() const { return err.size(); }
};

/// Per-sample generalization error by repeated K-fold cross-validation: every
/// repeat draws a fresh fold plan, trains one model per fold, and records each
/// sample's held-out loss, output and margin. A repeat whose inner run diverges
/// is discarded; losing more than half of them is an EstimationFailure.
DifficultyProfile estimate_error_profile(const Dataset& ds, const ErrorEstimatorConfig& cfg);

struct ClosedFormError {
    double value = 0.0;
    bool overflow = false;
};

/// exp(-mu + sigma2 / 2): expected exponential loss of a N(mu, sigma2) margin.
ClosedFormError closed_form_error(double mu, double sigma2);

/// Predictive-variance uncertainty per sample from K models:
///   tau_inv + (1/K) sum_k |f_k|^2 - |(1/K) sum_k f_k|^2
/// predictions is K x (n * width), row-major, one row per model.
std::vector<double> epistemic_uncertainty(std::span<const double> predictions, std::size_t K, std::size_t n,
                                          double tau_inv, std::size_t width = 1);

using stats::gaussianity_z;
using stats::GaussianityZ;

/// |closed_form_error(mean, var) - mean(exp(-m))| / mean(exp(-m)) per sample set.
std::vector<double> lognormal_law_gaps(const std::vector<std::vector<double>>& margin_samples);

/// lognormal_law_gaps over a profile estimated with the exponential loss.
std::vector<double> verify_lognormal_law(const DifficultyProfile& profile);

void save_profile_csv(const DifficultyProfile& p, std::ostream& out);

const char* to_string(EstimatorMode m);
const char* to_string(Decomposition d);

}  // namespace dwlab
