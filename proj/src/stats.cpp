#include "dwlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dwlab/errors.hpp"
#include "dwlab/rng.hpp"

namespace dwlab::stats {

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return ss / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

GaussianityZ gaussianity_z(std::span<const double> samples) {
    const std::size_t count = samples.size();
    if (count < 8) throw SpecificationError("gaussianity test needs at least 8 samples");
    const double n = static_cast<double>(count);
    const double m = mean(samples);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : samples) {
        const double z = x - m;
        const double z2 = z * z;
        m2 += z2;
        m3 += z2 * z;
        m4 += z2 * z2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (!(m2 > 1e-300)) throw DegenerateSampleError("sample variance is zero");
    const double g1 = m3 / std::pow(m2, 1.5);
    const double g2 = m4 / (m2 * m2) - 3.0;
    const double G1 = std::sqrt(n * (n - 1.0)) / (n - 2.0) * g1;
    const double G2 = (n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * g2 + 6.0);
    const double se_skew = std::sqrt(6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0)));
    const double se_kurt = 2.0 * se_skew * std::sqrt((n * n - 1.0) / ((n - 3.0) * (n + 5.0)));
    return {G1 / se_skew, G2 / se_kurt};
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw SpecificationError("spearman needs two equal-length samples");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double ma = mean(ra), mb = mean(rb);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    if (da == 0.0 || db == 0.0) return 0.0;
    return num / std::sqrt(da * db);
}

Interval bootstrap_mean_diff(std::span<const double> a, std::span<const double> b, double level,
                             std::size_t resamples, std::uint64_t seed) {
    if (a.empty() || b.empty()) throw SpecificationError("bootstrap needs two nonempty samples");
    Engine eng(seed);
    std::uniform_int_distribution<std::size_t> pick_a(0, a.size() - 1), pick_b(0, b.size() - 1);
    std::vector<double> diffs(resamples);
    for (auto& out : diffs) {
        double sa = 0.0, sb = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) sa += a[pick_a(eng)];
        for (std::size_t k = 0; k < b.size(); ++k) sb += b[pick_b(eng)];
        out = sa / static_cast<double>(a.size()) - sb / static_cast<double>(b.size());
    }
    std::sort(diffs.begin(), diffs.end());
    const double tail = 0.5 * (1.0 - level);
    auto at = [&](double q) {
        const double pos = q * static_cast<double>(resamples - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, resamples - 1);
        return diffs[lo] + (pos - static_cast<double>(lo)) * (diffs[hi] - diffs[lo]);
    };
    return {at(tail), at(1.0 - tail)};
}

}  // namespace dwlab::stats
