#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace dwlab {

struct DatasetSpec {
    std::vector<std::vector<double>> class_means;
    /// One entry per class: either a single isotropic variance or a diagonal
    /// of length d.
    std::vector<std::vector<double>> class_variances;
    std::vector<std::size_t> class_counts;
    std::uint64_t seed = 0;

    std::size_t dim() const;
    std::size_t num_classes() const { return class_counts.size(); }
    /// max(counts) / min(counts)
    double imbalance_ratio() const;
    void validate() const;
};

/// Features are row-major n x d. Binary labels are stored as -1/+1, multi-class
/// labels as 1..C. class_of keeps the generating class (0-based) and is not
/// touched by label noise.
struct Dataset {
    std::size_t n = 0;
    std::size_t d = 0;
    int num_classes = 2;
    std::vector<double> features;
    std::vector<int> labels;
    std::vector<std::uint8_t> noise_flag;
    std::vector<int> class_of;
    std::optional<DatasetSpec> source_spec;

    bool binary() const { return num_classes == 2; }
    std::span<const double> row(std::size_t i) const { return {features.data() + i * d, d}; }
    std::span<double> row(std::size_t i) { return {features.data() + i * d, d}; }

    Dataset subset(std::span<const std::size_t> idx) const;
    std::vector<std::size_t> class_counts() const;
    void validate() const;
};

/// Maps a 0-based class index to its stored label and back.
int label_of_class(int cls, int num_classes);
int class_of_label(int label, int num_classes);

enum class NoiseKind { uniform_label, flip_label, feature };
enum class FeatureDirection { adversarial, promoted };

struct NoiseSpec {
    double rate = 0.0;
    NoiseKind kind = NoiseKind::uniform_label;
    double epsilon = 0.0;
    FeatureDirection direction = FeatureDirection::adversarial;
    std::uint64_t seed = 0;

    void validate() const;
};

struct FoldPlan {
    std::vector<int> fold_of;
    int K = 0;
    std::uint64_t seed = 0;

    std::vector<std::size_t> members(int fold) const;
    std::vector<std::size_t> complement(int fold) const;
};

struct FeatureNoiseResult {
    Dataset dataset;
    /// Samples left unperturbed because their reference gradient row was zero.
    std::size_t skipped = 0;
};

Dataset gen_gaussian_mixture(const DatasetSpec& spec);

/// Corruption decisions come from the stream derive_seed(seed, {0}); each sample
/// consumes exactly one uniform draw from it. Replacement labels for
/// uniform_label come from a separate stream derive_seed(seed, {1}).
Dataset apply_label_noise(const Dataset& ds, const NoiseSpec& spec);

/// Moves each row by epsilon along -g_i/|g_i| (adversarial) or +g_i/|g_i|
/// (promoted), where g_i is row i of reference_gradient (n x d, row-major).
FeatureNoiseResult apply_feature_noise(const Dataset& ds, const NoiseSpec& spec,
                                       std::span<const double> reference_gradient);

/// 0.05 x the mean per-feature standard deviation.
double default_feature_epsilon(const Dataset& ds);

FoldPlan make_fold_plan(std::size_t n, int K, std::uint64_t seed);

void save_dataset_csv(const Dataset& ds, std::ostream& out);
Dataset load_dataset_csv(std::istream& in);

}  // namespace dwlab
