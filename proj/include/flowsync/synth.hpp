#pragma once

// Synthetic dyad recordings with two planted effects: frontal band power that
// scales with each participant's own flow score, and a band-limited component
// shared by both participants whenever the dyad is in simultaneous flow.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "flowsync/core.hpp"
#include "flowsync/dataset.hpp"
#include "flowsync/dsp.hpp"
#include "flowsync/models/common.hpp"
#include "flowsync/parallel.hpp"

namespace flowsync {

/// Power multiplier per (flow score, band).
using BandEffect = std::array<std::array<double, 4>, 4>;

inline BandEffect no_band_effect() {
    BandEffect e;
    for (auto& row : e) row.fill(1.0);
    return e;
}

/// Frontal theta / alpha power grows and beta power shrinks with the score.
inline BandEffect default_band_effect() {
    BandEffect e;
    for (std::size_t s = 0; s < 4; ++s) {
        const double x = static_cast<double>(s);
        e[s] = {1.0, 1.0 + 0.6 * x, 1.0 + 0.8 * x, 1.0 / (1.0 + 0.3 * x)};
    }
    return e;
}

struct SynthConfig {
    std::size_t n_pairs = 47;
    std::size_t n_rounds = 3;
    std::size_t n_samplings = 5;
    double coupling = 0.8;  // kappa: weight of the shared component for high simultaneous-flow samples
    BandEffect band_effect = default_band_effect();
    double noise_floor = 0.2;  // broadband white-noise standard deviation
    std::array<double, 4> band_amplitude = {2.0, 1.5, 1.5, 1.0};
    /// Joint score-class weights: both high, p1 high only, p2 high only, both low.
    std::array<double, 4> joint = {0.629, 0.170, 0.170, 0.031};
    int decimals = 3;  // CSV precision
    std::uint64_t seed = 0;
    unsigned jobs = 1;

    void validate() const {
        if (n_pairs == 0 || n_rounds == 0 || n_samplings == 0) throw Error("synth: counts must be at least 1");
        if (!(coupling >= 0.0 && coupling <= 1.0)) throw Error("synth: coupling must lie in [0, 1]");
        for (const auto& row : band_effect) {
            for (double m : row) {
                if (!(m > 0.0) || !std::isfinite(m)) throw Error("synth: band multipliers must be positive");
            }
        }
        double total = 0.0;
        for (double w : joint) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw Error("synth: invalid joint distribution weight");
            total += w;
        }
        if (!(total > 0.0)) throw Error("synth: joint distribution weights sum to zero");
        if (noise_floor < 0.0) throw Error("synth: noise floor must be non-negative");
    }
};

struct SynthSample {
    int group = 0;
    int round = 0;
    int sampling = 0;
    std::array<int, 2> scores{};
    std::array<std::vector<std::vector<double>>, 2> recordings;  // [participant][14 rows][1536]
};

/// Noise restricted to [lo, hi) Hz by zeroing FFT bins, scaled to unit
/// expected variance; the DC bin is always dropped. Realizations are not
/// renormalized, so band power keeps its natural sampling spread.
inline std::vector<double> band_limited_noise(RealFft& fft, std::mt19937_64& rng, double lo, double hi) {
    std::normal_distribution<double> g;
    const std::size_t n = fft.size();
    for (auto& v : fft.time()) v = g(rng);
    fft.forward();
    auto spec = fft.spectrum();
    const double df = kSampleRate / static_cast<double>(n);
    double kept = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double f = static_cast<double>(k) * df;
        if (k == 0 || f < lo || f >= hi) {
            spec[k] = 0.0;
        } else {
            kept += (2 * k == n) ? 1.0 : 2.0;
        }
    }
    fft.inverse();
    std::vector<double> out(fft.time().begin(), fft.time().end());
    const double scale = kept > 0.0 ? 1.0 / (static_cast<double>(n) * std::sqrt(kept / static_cast<double>(n))) : 0.0;
    for (auto& v : out) v *= scale;
    return out;
}

namespace detail {

inline std::pair<double, double> synth_band(std::size_t b) {
    const auto e = band_edges(kBands[b]);
    return {e.low, e.high};
}

inline SynthSample synth_one(const SynthConfig& cfg, int group, int round, int sampling, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    SynthSample s{group, round, sampling, {}, {}};

    std::discrete_distribution<int> joint(cfg.joint.begin(), cfg.joint.end());
    const int cls = joint(rng);
    const bool high1 = cls == 0 || cls == 1;
    const bool high2 = cls == 0 || cls == 2;
    std::uniform_int_distribution<int> hi(2, 3), lo(0, 1);
    s.scores[0] = high1 ? hi(rng) : lo(rng);
    s.scores[1] = high2 ? hi(rng) : lo(rng);
    const bool simultaneous = high1 && high2;
    const double kappa = simultaneous ? cfg.coupling : 0.0;
    const double own_w = std::sqrt(1.0 - kappa * kappa);

    // Always drawn, so every coupling strength consumes the same random stream.
    RealFft fft(kSegmentLength);
    std::array<std::vector<double>, 4> shared;
    for (std::size_t b = 0; b < 4; ++b) {
        const auto [l, h] = synth_band(b);
        shared[b] = band_limited_noise(fft, rng, l, h);
    }
    std::normal_distribution<double> g;
    for (std::size_t p = 0; p < 2; ++p) {
        auto& rec = s.recordings[p];
        rec.assign(kRecordingChannels, std::vector<double>(kSegmentLength, 0.0));
        for (std::size_t row = 0; row < kRecordingChannels; ++row) {
            const ChannelId ch = kEpocOrder[row];
            auto& x = rec[row];
            if (in_flow_subset(ch)) {
                const bool frontal = region_of(ch) == Region::Frontal;
                for (std::size_t b = 0; b < 4; ++b) {
                    const auto [l, h] = synth_band(b);
                    auto own = band_limited_noise(fft, rng, l, h);
                    double amp = cfg.band_amplitude[b];
                    if (frontal) amp *= std::sqrt(cfg.band_effect[static_cast<std::size_t>(s.scores[p])][b]);
                    for (std::size_t i = 0; i < kSegmentLength; ++i) {
                        const double mixed = kappa > 0.0 ? own_w * own[i] + kappa * shared[b][i] : own[i];
                        x[i] += amp * mixed;
                    }
                }
            }
            for (auto& v : x) v += cfg.noise_floor * g(rng);
        }
    }
    return s;
}

}  // namespace detail

/// Deterministic under cfg.seed for any job count: sample i uses its own
/// stream derive_seed(seed, i).
inline std::vector<SynthSample> synthesize(const SynthConfig& cfg) {
    cfg.validate();
    std::vector<std::tuple<int, int, int>> keys;
    for (std::size_t g = 1; g <= cfg.n_pairs; ++g) {
        for (std::size_t r = 1; r <= cfg.n_rounds; ++r) {
            for (std::size_t s = 1; s <= cfg.n_samplings; ++s) {
                keys.emplace_back(static_cast<int>(g), static_cast<int>(r), static_cast<int>(s));
            }
        }
    }
    std::vector<SynthSample> out(keys.size());
    parallel_for(keys.size(), cfg.jobs, [&](std::size_t i) {
        const auto [g, r, s] = keys[i];
        out[i] = detail::synth_one(cfg, g, r, s, derive_seed(cfg.seed, i));
    });
    // CSV precision is applied in memory too, so in-memory and on-disk data agree.
    for (auto& s : out) {
        for (auto& rec : s.recordings) {
            for (auto& row : rec) {
                for (auto& v : row) v = csv::round_decimal(v, cfg.decimals);
            }
        }
    }
    return out;
}

inline DyadSample to_dyad(const SynthSample& s) {
    RecordingFile r1, r2;
    r1.rows = s.recordings[0];
    r2.rows = s.recordings[1];
    DyadSample d;
    d.group_id = s.group;
    d.round_index = s.round;
    d.sampling_index = s.sampling;
    d.segments_p1 = r1.flow_segments();
    d.segments_p2 = r2.flow_segments();
    d.score_p1 = FlowScore(s.scores[0]);
    d.score_p2 = FlowScore(s.scores[1]);
    return d;
}

inline std::vector<DyadSample> to_dyads(const std::vector<SynthSample>& samples) {
    std::vector<DyadSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(to_dyad(s));
    return out;
}

/// Writes <root>/manifest.csv, the recordings tree, and <root>/ground_truth.csv
/// (group,round,sampling,score_p1,score_p2,binary_label,ternary_p1,ternary_p2).
inline void write_synth(const fs::path& root, const std::vector<SynthSample>& samples, int decimals = 3) {
    fs::create_directories(root);
    std::vector<ManifestEntry> manifest;
    std::ofstream truth(root / "ground_truth.csv", std::ios::binary);
    if (!truth) throw Error("cannot write " + (root / "ground_truth.csv").string());
    truth << "group,round,sampling,score_p1,score_p2,binary_label,ternary_p1,ternary_p2\n";
    for (const auto& s : samples) {
        for (int p = 1; p <= 2; ++p) {
            const auto path = recording_path(root, s.group, p, s.round, s.sampling);
            fs::create_directories(path.parent_path());
            write_recording(path, s.recordings[static_cast<std::size_t>(p - 1)], decimals);
            manifest.push_back({s.group, p, s.round, s.sampling, s.scores[static_cast<std::size_t>(p - 1)]});
        }
        const FlowScore a(s.scores[0]), b(s.scores[1]);
        truth << s.group << ',' << s.round << ',' << s.sampling << ',' << s.scores[0] << ',' << s.scores[1] << ','
              << static_cast<int>(label_binary(a, b)) << ',' << static_cast<int>(label_ternary(a, b)) << ','
              << static_cast<int>(label_ternary(b, a)) << '\n';
    }
    write_manifest(root / "manifest.csv", manifest);
}

}  // namespace flowsync
