#pragma once

// Inter-brain synchrony between the two participants of a dyad: Pearson
// correlation and dynamic time warping distance per channel and band.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "flowsync/core.hpp"
#include "flowsync/features.hpp"
#include "flowsync/registry.hpp"

namespace flowsync {

/// Pearson correlation. nullopt when either input has zero variance.
inline std::optional<double> cross_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error("cross_correlation: length mismatch (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
    }
    if (a.size() < 2) throw Error("cross_correlation: need at least 2 samples");
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace detail {

/// Unconstrained DTW, rows processed in skewed strips of kStrip so that the
/// per-row dependency chains interleave. Same arithmetic as the plain
/// row-by-row recurrence, so results are bitwise identical.
inline double dtw_full(std::span<const double> a, std::span<const double> b) {
    constexpr std::size_t kStrip = 8;
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    // rows[0] is the last completed row; rows[1..kStrip] are the strip in progress.
    std::array<std::vector<double>, kStrip + 1> rows;
    for (auto& r : rows) r.assign(n + 1, inf);
    rows[0][0] = 0.0;
    std::array<double*, kStrip + 1> p{};
    for (std::size_t i0 = 0; i0 < m; i0 += kStrip) {
        const std::size_t height = std::min(kStrip, m - i0);
        for (std::size_t r = 0; r <= kStrip; ++r) p[r] = rows[r].data();
        std::array<double, kStrip> ai{};
        std::array<double, kStrip> left{};
        for (std::size_t r = 0; r < height; ++r) {
            ai[r] = a[i0 + r];
            left[r] = inf;
            p[r + 1][0] = inf;
        }
        auto cell = [&](std::size_t r, std::size_t j) {
            const double best = std::min(p[r][j], std::min(p[r][j - 1], left[r]));
            left[r] = std::abs(ai[r] - b[j - 1]) + best;
            p[r + 1][j] = left[r];
        };
        if (height == kStrip && n >= kStrip) {
            for (std::size_t step = 1; step < kStrip; ++step) {
                for (std::size_t r = 0; r < step; ++r) cell(r, step - r);
            }
            for (std::size_t step = kStrip; step <= n; ++step) {
                for (std::size_t r = 0; r < kStrip; ++r) cell(r, step - r);
            }
            for (std::size_t step = n + 1; step < n + kStrip; ++step) {
                for (std::size_t r = step - n; r < kStrip; ++r) cell(r, step - r);
            }
        } else {
            for (std::size_t r = 0; r < height; ++r) {
                for (std::size_t j = 1; j <= n; ++j) cell(r, j);
            }
        }
        std::swap(rows[0], rows[height]);
    }
    return rows[0][n];
}

}  // namespace detail

/// DTW with absolute-difference local cost, steps (i-1,j), (i,j-1), (i-1,j-1)
/// and D(1,1) = |a1 - b1|. A nonzero radius restricts |i - j| to
/// max(radius, |m - n|) (Sakoe-Chiba band).
inline double dtw_distance(std::span<const double> a, std::span<const double> b, std::size_t radius = 0) {
    if (a.empty() || b.empty()) throw Error("dtw_distance: empty input");
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    const std::size_t diff = m > n ? m - n : n - m;
    if (radius == 0 || std::max(radius, diff) >= std::max(m, n)) return detail::dtw_full(a, b);

    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t band = std::max(radius, diff);
    std::vector<double> prev(n + 1, inf), cur(n + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= m; ++i) {
        const double ai = a[i - 1];
        const std::size_t lo = i > band ? i - band : 1;
        const std::size_t hi = std::min(n, i + band);
        std::fill(cur.begin(), cur.begin() + static_cast<std::ptrdiff_t>(lo), inf);
        double left = inf;
        for (std::size_t j = lo; j <= hi; ++j) {
            const double best = std::min(prev[j], std::min(prev[j - 1], left));
            left = std::abs(ai - b[j - 1]) + best;
            cur[j] = left;
        }
        std::fill(cur.begin() + static_cast<std::ptrdiff_t>(hi) + 1, cur.end(), inf);
        std::swap(prev, cur);
    }
    return prev[n];
}

/// Population z-score; a constant input becomes all zeros.
inline std::vector<double> znormalize(std::span<const double> x) {
    const auto n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = sd > 0.0 ? (x[i] - mean) / sd : 0.0;
    return out;
}

struct SynchronyFeatures {
    std::array<double, kSynchronyFeatureCount> values{};
    QualityFlags flags = kFlagNone;
};

/// Position of a synchrony value inside SynchronyFeatures::values.
constexpr std::size_t synchrony_slot(std::size_t channel, bool dtw, std::size_t band) {
    return channel * kSynchronyPerChannel + (dtw ? 4 : 0) + band;
}

/// 64 values: for each flow channel and band, CCC and DTW between participants.
inline SynchronyFeatures extract_synchrony(std::span<const BandSignals, kFlowChannels> p1,
                                           std::span<const BandSignals, kFlowChannels> p2,
                                           const PipelineConfig& cfg = {}) {
    SynchronyFeatures s;
    for (std::size_t ch = 0; ch < kFlowChannels; ++ch) {
        for (std::size_t b = 0; b < 4; ++b) {
            const auto& x = p1[ch].bands[b];
            const auto& y = p2[ch].bands[b];
            const auto r = cross_correlation(x, y);
            if (!r) s.flags |= kFlagDegenerateCorrelation;
            s.values[synchrony_slot(ch, false, b)] = r.value_or(0.0);
            s.values[synchrony_slot(ch, true, b)] =
                cfg.dtw_znormalize ? dtw_distance(znormalize(x), znormalize(y), cfg.dtw_radius)
                                   : dtw_distance(x, y, cfg.dtw_radius);
        }
    }
    return s;
}

/// Full 272-value feature pair for a dyad: each participant's individual block
/// followed by the shared synchrony block.
struct DyadFeatures {
    IndividualFeatures p1;
    IndividualFeatures p2;
    SynchronyFeatures synchrony;
};

inline DyadFeatures extract_dyad(const DyadSample& d, const PipelineConfig& cfg = {}) {
    validate(d);
    std::array<ChannelAnalysis, kFlowChannels> a1, a2;
    for (std::size_t ch = 0; ch < kFlowChannels; ++ch) {
        a1[ch] = analyze_channel(d.segments_p1[ch], cfg);
        a2[ch] = analyze_channel(d.segments_p2[ch], cfg);
    }
    DyadFeatures out;
    out.p1 = individual_from_analysis(a1);
    out.p2 = individual_from_analysis(a2);
    std::array<BandSignals, kFlowChannels> b1, b2;
    for (std::size_t ch = 0; ch < kFlowChannels; ++ch) {
        b1[ch] = std::move(a1[ch].bands);
        b2[ch] = std::move(a2[ch].bands);
    }
    out.synchrony = extract_synchrony(b1, b2, cfg);
    return out;
}

}  // namespace flowsync
