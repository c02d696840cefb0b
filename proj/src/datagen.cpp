#include "dwlab/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "dwlab/errors.hpp"
#include "dwlab/io.hpp"
#include "dwlab/rng.hpp"

namespace dwlab {

std::size_t DatasetSpec::dim() const {
    return class_means.empty() ? 0 : class_means.front().size();
}

double DatasetSpec::imbalance_ratio() const {
    validate();
    const auto [lo, hi] = std::minmax_element(class_counts.begin(), class_counts.end());
    return static_cast<double>(*hi) / static_cast<double>(*lo);
}

void DatasetSpec::validate() const {
    const std::size_t C = class_counts.size();
    if (C < 2) throw SpecificationError("dataset spec needs at least two classes");
    if (class_means.size() != C || class_variances.size() != C) {
        throw SpecificationError("class_means, class_variances and class_counts must have equal length");
    }
    const std::size_t d = dim();
    if (d < 1) throw SpecificationError("feature dimension must be >= 1");
    for (std::size_t c = 0; c < C; ++c) {
        if (class_means[c].size() != d) throw SpecificationError("class means differ in dimension");
        for (double m : class_means[c]) {
            if (!std::isfinite(m)) throw SpecificationError("class mean is not finite");
        }
        const auto& var = class_variances[c];
        if (var.size() != 1 && var.size() != d) {
            throw SpecificationError("class variance must be a scalar or a length-d diagonal");
        }
        for (double v : var) {
            if (!(v > 0.0) || !std::isfinite(v)) throw SpecificationError("class variances must be positive");
        }
        if (class_counts[c] < 1) throw SpecificationError("class counts must be >= 1");
    }
}

int label_of_class(int cls, int num_classes) {
    if (num_classes == 2) return cls == 0 ? -1 : +1;
    return cls + 1;
}

int class_of_label(int label, int num_classes) {
    if (num_classes == 2) return label < 0 ? 0 : 1;
    return label - 1;
}

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
    Dataset out;
    out.n = idx.size();
    out.d = d;
    out.num_classes = num_classes;
    out.source_spec = source_spec;
    out.features.reserve(idx.size() * d);
    out.labels.reserve(idx.size());
    out.noise_flag.reserve(idx.size());
    out.class_of.reserve(idx.size());
    for (std::size_t i : idx) {
        const auto r = row(i);
        out.features.insert(out.features.end(), r.begin(), r.end());
        out.labels.push_back(labels[i]);
        out.noise_flag.push_back(noise_flag[i]);
        out.class_of.push_back(class_of[i]);
    }
    return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
    for (int c : class_of) ++counts.at(static_cast<std::size_t>(c));
    return counts;
}

void Dataset::validate() const {
    if (features.size() != n * d || labels.size() != n || noise_flag.size() != n || class_of.size() != n) {
        throw SpecificationError("dataset arrays have inconsistent lengths");
    }
    if (num_classes < 2) throw SpecificationError("dataset needs at least two classes");
    for (double v : features) {
        if (!std::isfinite(v)) throw SpecificationError("dataset contains a non-finite feature");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const int y = labels[i];
        const bool ok = binary() ? (y == -1 || y == 1) : (y >= 1 && y <= num_classes);
        if (!ok) throw SpecificationError("label out of range at row " + std::to_string(i));
        if (class_of[i] < 0 || class_of[i] >= num_classes) {
            throw SpecificationError("class id out of range at row " + std::to_string(i));
        }
    }
}

void NoiseSpec::validate() const {
    if (!(rate >= 0.0 && rate <= 1.0)) throw SpecificationError("noise rate must lie in [0,1]");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw SpecificationError("epsilon must be >= 0");
}

std::vector<std::size_t> FoldPlan::members(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::complement(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] != fold) out.push_back(i);
    }
    return out;
}

Dataset gen_gaussian_mixture(const DatasetSpec& spec) {
    spec.validate();
    const std::size_t d = spec.dim();
    const int C = static_cast<int>(spec.num_classes());

    Dataset ds;
    ds.d = d;
    ds.num_classes = C;
    ds.n = std::accumulate(spec.class_counts.begin(), spec.class_counts.end(), std::size_t{0});
    ds.features.reserve(ds.n * d);
    ds.source_spec = spec;

    Engine eng(spec.seed);
    for (int c = 0; c < C; ++c) {
        const auto& mean = spec.class_means[static_cast<std::size_t>(c)];
        const auto& var = spec.class_variances[static_cast<std::size_t>(c)];
        for (std::size_t k = 0; k < spec.class_counts[static_cast<std::size_t>(c)]; ++k) {
            for (std::size_t j = 0; j < d; ++j) {
                const double sd = std::sqrt(var.size() == 1 ? var[0] : var[j]);
                ds.features.push_back(mean[j] + sd * standard_normal(eng));
            }
            ds.labels.push_back(label_of_class(c, C));
            ds.class_of.push_back(c);
            ds.noise_flag.push_back(0);
        }
    }
    return ds;
}

Dataset apply_label_noise(const Dataset& ds, const NoiseSpec& spec) {
    spec.validate();
    if (spec.kind == NoiseKind::feature) {
        throw WrongOperationError("apply_label_noise called with a feature-noise spec");
    }
    Dataset out = ds;
    Engine corrupt(derive_seed(spec.seed, {0}));
    Engine choose(derive_seed(spec.seed, {1}));
    const int C = ds.num_classes;
    for (std::size_t i = 0; i < ds.n; ++i) {
        if (!(uniform01(corrupt) < spec.rate)) continue;
        const int cls = class_of_label(ds.labels[i], C);
        int target = 0;
        if (spec.kind == NoiseKind::flip_label) {
            target = (cls + 1) % C;
        } else {
            // uniform over the C-1 other classes
            int pick = static_cast<int>(std::uniform_int_distribution<int>(0, C - 2)(choose));
            target = pick >= cls ? pick + 1 : pick;
        }
        out.labels[i] = label_of_class(target, C);
        out.noise_flag[i] = 1;
    }
    return out;
}

FeatureNoiseResult apply_feature_noise(const Dataset& ds, const NoiseSpec& spec,
                                       std::span<const double> reference_gradient) {
    spec.validate();
    if (spec.kind != NoiseKind::feature) {
        throw WrongOperationError("apply_feature_noise called with a label-noise spec");
    }
    if (reference_gradient.size() != ds.n * ds.d) {
        throw SpecificationError("reference gradient must be n x d");
    }
    FeatureNoiseResult res{ds, 0};
    if (spec.epsilon == 0.0) return res;
    const double sign = spec.direction == FeatureDirection::adversarial ? -1.0 : 1.0;
    for (std::size_t i = 0; i < ds.n; ++i) {
        const auto g = reference_gradient.subspan(i * ds.d, ds.d);
        double norm2 = 0.0;
        for (double v : g) norm2 += v * v;
        if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
            ++res.skipped;
            continue;
        }
        const double scale = sign * spec.epsilon / std::sqrt(norm2);
        auto x = res.dataset.row(i);
        for (std::size_t j = 0; j < ds.d; ++j) x[j] += scale * g[j];
        res.dataset.noise_flag[i] = 1;
    }
    return res;
}

double default_feature_epsilon(const Dataset& ds) {
    if (ds.n < 2) return 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < ds.d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < ds.n; ++i) mean += ds.features[i * ds.d + j];
        mean /= static_cast<double>(ds.n);
        double ss = 0.0;
        for (std::size_t i = 0; i < ds.n; ++i) {
            const double z = ds.features[i * ds.d + j] - mean;
            ss += z * z;
        }
        total += std::sqrt(ss / static_cast<double>(ds.n - 1));
    }
    return 0.05 * total / static_cast<double>(ds.d);
}

FoldPlan make_fold_plan(std::size_t n, int K, std::uint64_t seed) {
    if (K < 2 || static_cast<std::size_t>(K) > n) {
        throw SpecificationError("fold count must satisfy 2 <= K <= n");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Engine eng(seed);
    std::shuffle(perm.begin(), perm.end(), eng);
    FoldPlan plan;
    plan.K = K;
    plan.seed = seed;
    plan.fold_of.assign(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        plan.fold_of[perm[j]] = static_cast<int>(j % static_cast<std::size_t>(K));
    }
    return plan;
}

void save_dataset_csv(const Dataset& ds, std::ostream& out) {
    for (std::size_t j = 0; j < ds.d; ++j) out << 'f' << j << ',';
    out << "label,noise_flag,class\n";
    for (std::size_t i = 0; i < ds.n; ++i) {
        for (double v : ds.row(i)) out << io::format_real(v) << ',';
        out << ds.labels[i] << ',' << static_cast<int>(ds.noise_flag[i]) << ',' << ds.class_of[i] << '\n';
    }
}

Dataset load_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw SpecificationError("dataset CSV is empty");
    const auto header = io::split_csv_line(line);
    if (header.size() < 4) throw SpecificationError("dataset CSV header too short");
    const std::size_t d = header.size() - 3;
    for (std::size_t j = 0; j < d; ++j) {
        if (header[j] != "f" + std::to_string(j)) throw SpecificationError("bad feature column: " + header[j]);
    }
    if (header[d] != "label" || header[d + 1] != "noise_flag" || header[d + 2] != "class") {
        throw SpecificationError("dataset CSV header must end with label,noise_flag,class");
    }
    Dataset ds;
    ds.d = d;
    bool only_pm_one = true;
    int max_label = 0;
    int max_class = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = io::split_csv_line(line);
        if (cells.size() != d + 3) throw SpecificationError("dataset CSV row has wrong arity");
        for (std::size_t j = 0; j < d; ++j) ds.features.push_back(io::parse_real(cells[j]));
        const int y = static_cast<int>(io::parse_int(cells[d]));
        ds.labels.push_back(y);
        ds.noise_flag.push_back(static_cast<std::uint8_t>(io::parse_int(cells[d + 1]) != 0));
        const int c = static_cast<int>(io::parse_int(cells[d + 2]));
        ds.class_of.push_back(c);
        only_pm_one = only_pm_one && (y == -1 || y == 1);
        max_label = std::max(max_label, y);
        max_class = std::max(max_class, c);
        ++ds.n;
    }
    ds.num_classes = only_pm_one ? 2 : std::max(max_label, max_class + 1);
    ds.validate();
    return ds;
}

}  // namespace dwlab
