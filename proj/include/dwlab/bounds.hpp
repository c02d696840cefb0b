#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dwlab/datagen.hpp"
#include "dwlab/models.hpp"

namespace dwlab {

/// Target density p_t and source density p_s on a shared discrete support,
/// with per-cell weights w and the reweighted source p~_s ∝ w p_s.
struct DiscreteDensityPair {
    std::vector<int> cells;
    std::vector<double> p_t;
    std::vector<double> p_s;
    std::vector<double> w;
    std::vector<double> p_tilde_s;

    void validate() const;
};

DiscreteDensityPair make_density_pair(std::vector<int> cells, std::vector<double> p_t, std::vector<double> p_s,
                                      std::vector<double> w);

/// paper:    sum_x p~_s(x) [ (p~_s(x)/p_t(x))^2 - 1 ]
/// standard: sum_x p_t(x)^2 / p~_s(x) - 1
enum class Chi2Convention { paper, standard };

const char* to_string(Chi2Convention c);
Chi2Convention chi2_convention_from_string(const std::string& s);

double chi2_divergence(const DiscreteDensityPair& pair, Chi2Convention convention);

struct BoundInputs {
    double gamma = 1.0;
    double delta = 0.05;
    int q = 2;
    double L = 1.0;
    std::size_t n = 1;

    void validate() const;
};

/// sqrt(ln(log2(4L/gamma)) / n) + sqrt(ln(1/delta) / n)
double epsilon_term(const BoundInputs& in);

/// Weighted margin-violation rate (1/n) sum_i ratio_i E_models[1(margin_i < gamma)].
/// Margins are those of the parameter-normalized predictor theta/|theta|, so
/// gamma lives on the same scale as L = sup |x|. Samples with ratio 0 drop out.
double term_I(std::span<const ModelParams> models, const Dataset& ds, std::span<const double> ratios,
              double gamma);

/// L sqrt(D + 1) / (gamma q^((q-1)/2) sqrt(n))
double term_II(const DiscreteDensityPair& pair, const BoundInputs& in, Chi2Convention convention);

/// Fraction of samples with margin <= 0.
double test_error(const ModelParams& model, const Dataset& test);

/// Class-level density model for a weighted training set. Cells are classes,
/// or (class, noisy) pairs when clean_target is set, in which case noisy cells
/// get zero target mass. target_priors holds one probability per class; empty
/// means the training class proportions.
struct CellDensities {
    DiscreteDensityPair pair;
    std::vector<double> ratios;  // per sample p_t / p~_s of its cell
};

CellDensities class_cell_densities(const Dataset& ds, std::span<const double> weights,
                                   std::span<const double> target_priors = {}, bool clean_target = false);

/// sup_i |x_i| over one or more datasets.
double sup_norm(const Dataset& ds);

struct BoundReport {
    double gamma = 0.0;
    double delta = 0.0;
    int q = 2;
    double L = 0.0;
    std::size_t n = 0;
    Chi2Convention convention = Chi2Convention::paper;
    double D = 0.0;
    double I = 0.0;
    double II = 0.0;
    double III = 0.0;
    double total = 0.0;
    double empirical = 0.0;

    std::string to_json() const;
};

/// total = I + II + III; empirical = mean test error over the models.
BoundReport evaluate_bound(std::span<const ModelParams> models, const Dataset& train_set,
                           std::span<const double> ratios, const Dataset& test_set, const DiscreteDensityPair& pair,
                           const BoundInputs& in, Chi2Convention convention);

}  // namespace dwlab
