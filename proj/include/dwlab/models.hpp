#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dwlab/datagen.hpp"

namespace dwlab {

enum class ModelKind { linear, mlp2 };

/// Input width d, hidden width h (mlp2 only) and number of outputs
/// (1 for a binary head, C for a multi-class head).
struct ModelDims {
    std::size_t d = 0;
    std::size_t h = 5;
    std::size_t outputs = 1;
};

/// Bias-free predictors. Layout of theta:
///   linear: W of outputs x d
///   mlp2:   W1 of h x d, then W2 of outputs x h
/// Both are positively homogeneous in theta (degree 1 and 2).
struct ModelParams {
    ModelKind kind = ModelKind::linear;
    ModelDims dims;
    std::vector<double> theta;

    std::size_t expected_size() const;
    void validate() const;
    double norm() const;
};

ModelParams init_params(ModelKind kind, const ModelDims& dims, std::uint64_t seed);

/// Returns a parameter vector with every entry scaled by c.
ModelParams scaled(const ModelParams& p, double c);

std::vector<double> forward(const ModelParams& p, std::span<const double> x);

/// Binary: y * f(x). Multi-class: true logit minus the best other logit.
double margin_from_outputs(std::span<const double> outputs, int label);
double margin(const ModelParams& p, std::span<const double> x, int label);

std::vector<double> margins(const ModelParams& p, const Dataset& ds);

/// Gradient of margin(p, x, label) with respect to x.
std::vector<double> margin_input_grad(const ModelParams& p, std::span<const double> x, int label);

enum class LossKind { exponential, logistic, cross_entropy, squared };

struct LossSpec {
    LossKind kind = LossKind::exponential;
    double lambda = 0.0;
    double r = 2.0;

    void validate() const;
    /// Throws unless the loss fits a head with this many outputs.
    void check_head(std::size_t outputs) const;
};

const char* to_string(ModelKind k);
const char* to_string(LossKind k);
ModelKind model_kind_from_string(const std::string& s);
LossKind loss_kind_from_string(const std::string& s);

/// exp(-u)
double exponential_loss(double u);
/// log(1 + exp(-u)), stable for large |u|
double logistic_loss(double u);
double exponential_loss_grad(double u);
double logistic_loss_grad(double u);

/// Per-sample loss (no regularizer). exponential/logistic act on the margin,
/// cross_entropy on the logits, squared on (y - f)^2 with y in {-1,+1}.
double loss_value(const LossSpec& spec, std::span<const double> outputs, int label);

/// d loss / d outputs.
void loss_output_grad(const LossSpec& spec, std::span<const double> outputs, int label,
                      std::span<double> grad_out);

/// (1/n) sum_i w_i loss_i + lambda |theta|^r
double objective(const ModelParams& p, const Dataset& batch, const LossSpec& spec,
                 std::span<const double> weights);

/// Analytic gradient of objective() with respect to theta.
std::vector<double> grad_params(const ModelParams& p, const Dataset& batch, const LossSpec& spec,
                                std::span<const double> weights);

/// Declared homogeneity degree (linear 1, mlp2 2), verified numerically on the
/// probe inputs for c in {0.5, 2, 3}. Throws InvariantViolation on mismatch.
int homogeneity_degree(const ModelParams& p, std::span<const double> probes);
int homogeneity_degree(const ModelParams& p);

/// sigmoid(margin): probability of the ground truth under the logistic link.
double ground_truth_probability(double margin);

std::string checkpoint_to_json(const ModelParams& p);
ModelParams checkpoint_from_json(const std::string& text);

}  // namespace dwlab
