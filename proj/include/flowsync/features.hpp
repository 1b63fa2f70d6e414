#pragma once

// Individual-flow features: 12 time-domain and 14 frequency-domain values per
// channel, 26 x 8 channels = 208 per participant.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "flowsync/core.hpp"
#include "flowsync/dsp.hpp"
#include "flowsync/registry.hpp"

namespace flowsync {

struct TimeFeatures {
    double mean = 0.0;
    double std = 0.0;
    double variance = 0.0;
    double aafod = 0.0;    // average absolute first-order difference
    double nfod = 0.0;     // aafod / std
    double energy = 0.0;
    double power = 0.0;
    double activity = 0.0;  // Hjorth
    double mobility = 0.0;  // Hjorth: std(first difference) / std
    double hozc = 0.0;
    double ppm = 0.0;       // (max - min) / T
    double kurtosis = 0.0;  // E(x - mean)^4 / std^4, not excess
    QualityFlags flags = kFlagNone;

    std::array<double, kTimeFeatureCount> values() const {
        return {mean, std, variance, aafod, nfod, energy, power, activity, mobility, hozc, ppm, kurtosis};
    }
};

struct FreqFeatures {
    std::array<double, 4> psd{};
    std::array<double, 4> lbp{};
    std::array<double, 4> de{};
    double de_full = 0.0;
    double mean_psd = 0.0;
    QualityFlags flags = kFlagNone;

    std::array<double, kFreqFeatureCount> values() const {
        return {psd[0], psd[1], psd[2], psd[3], lbp[0], lbp[1], lbp[2], lbp[3],
                de[0],  de[1],  de[2],  de[3],  de_full, mean_psd};
    }
};

/// Number of sign changes of the zero-meaned signal: the indicator is 1 where
/// s(t) - mean >= 0 and 0 elsewhere, summed as squared successive differences.
inline double higher_order_zero_crossings(std::span<const double> x, double mean) {
    double count = 0.0;
    for (std::size_t t = 0; t + 1 < x.size(); ++t) {
        const double a = (x[t] - mean) >= 0.0 ? 1.0 : 0.0;
        const double b = (x[t + 1] - mean) >= 0.0 ? 1.0 : 0.0;
        count += (b - a) * (b - a);
    }
    return count;
}

inline TimeFeatures time_features(std::span<const double> x) {
    if (x.size() < 2) throw Error("time_features: need at least 2 samples");
    require_finite(x, "time_features");
    const auto n = static_cast<double>(x.size());

    TimeFeatures f;
    double sum = 0.0, sum_sq = 0.0;
    for (double v : x) {
        sum += v;
        sum_sq += v * v;
    }
    f.mean = sum / n;
    f.energy = sum_sq;
    f.power = sum_sq / n;

    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - f.mean;
        const double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    f.variance = m2 / n;
    f.std = std::sqrt(f.variance);
    f.activity = f.variance;

    const std::size_t nd = x.size() - 1;
    double abs_diff = 0.0, diff_sum = 0.0;
    for (std::size_t t = 0; t < nd; ++t) {
        const double d = x[t + 1] - x[t];
        abs_diff += std::abs(d);
        diff_sum += d;
    }
    f.aafod = abs_diff / static_cast<double>(nd);
    const double diff_mean = diff_sum / static_cast<double>(nd);
    double diff_var = 0.0;
    for (std::size_t t = 0; t < nd; ++t) {
        const double d = (x[t + 1] - x[t]) - diff_mean;
        diff_var += d * d;
    }
    const double diff_std = std::sqrt(diff_var / static_cast<double>(nd));

    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    f.ppm = (*hi - *lo) / n;
    f.hozc = higher_order_zero_crossings(x, f.mean);

    if (f.std > 0.0) {
        f.nfod = f.aafod / f.std;
        f.mobility = diff_std / f.std;
        f.kurtosis = (m4 / n) / (f.variance * f.variance);
    } else {
        f.flags |= kFlagConstantSignal;
    }
    return f;
}

/// Differential entropy of a Gaussian with the sample variance of x (natural log).
/// Returns 0 and sets kFlagSilentBand when the variance is zero.
inline double differential_entropy(std::span<const double> x, QualityFlags& flags) {
    const auto n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    if (!(var > 0.0)) {
        flags |= kFlagSilentBand;
        return 0.0;
    }
    return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * var);
}

/// Natural log of the mean squared amplitude; 0 with kFlagSilentBand for a silent band.
inline double log_band_power(std::span<const double> x, QualityFlags& flags) {
    double p = 0.0;
    for (double v : x) p += v * v;
    p /= static_cast<double>(x.size());
    if (!(p > 0.0)) {
        flags |= kFlagSilentBand;
        return 0.0;
    }
    return std::log(p);
}

inline FreqFeatures freq_features(const BandSignals& bands, std::span<const double> full, const Spectrum& spectrum) {
    FreqFeatures f;
    for (std::size_t b = 0; b < 4; ++b) {
        f.psd[b] = band_power(spectrum, kBands[b]);
        f.lbp[b] = log_band_power(bands.bands[b], f.flags);
        f.de[b] = differential_entropy(bands.bands[b], f.flags);
    }
    f.de_full = differential_entropy(full, f.flags);
    f.mean_psd = (f.psd[0] + f.psd[1] + f.psd[2] + f.psd[3]) / 4.0;
    return f;
}

// ---------------------------------------------------------------------------
// Per-channel pipeline

struct PipelineConfig {
    bool denoise = true;
    DenoiseConfig denoise_config;
    WelchConfig welch;
    bool dtw_znormalize = true;
    std::size_t dtw_radius = 0;  // 0 = unconstrained
};

/// Intermediate products of one channel: the conditioned signal, its bands and spectrum.
struct ChannelAnalysis {
    std::vector<double> signal;
    BandSignals bands;
    Spectrum spectrum;
};

inline ChannelAnalysis analyze_channel(const SignalSegment& seg, const PipelineConfig& cfg = {}) {
    require_finite(seg.samples, "analyze_channel");
    ChannelAnalysis a;
    a.signal = cfg.denoise ? wavelet_denoise(seg.samples, cfg.denoise_config) : seg.samples;
    a.bands = band_decompose(a.signal, seg.sample_rate);
    a.spectrum = welch_psd(a.signal, seg.sample_rate, cfg.welch);
    return a;
}

struct IndividualFeatures {
    std::array<double, kIndividualFeatureCount> values{};
    QualityFlags flags = kFlagNone;
};

inline void channel_feature_block(const ChannelAnalysis& a, std::span<double, kPerChannelFeatures> out,
                                  QualityFlags& flags) {
    const TimeFeatures t = time_features(a.signal);
    const FreqFeatures fr = freq_features(a.bands, a.signal, a.spectrum);
    const auto tv = t.values();
    const auto fv = fr.values();
    std::copy(tv.begin(), tv.end(), out.begin());
    std::copy(fv.begin(), fv.end(), out.begin() + kTimeFeatureCount);
    flags |= t.flags | fr.flags;
}

/// Features from already analysed channels, indexed by kFlowChannelOrder.
inline IndividualFeatures individual_from_analysis(std::span<const ChannelAnalysis, kFlowChannels> channels) {
    IndividualFeatures f;
    for (std::size_t ch = 0; ch < kFlowChannels; ++ch) {
        channel_feature_block(channels[ch],
                              std::span<double, kPerChannelFeatures>(f.values.data() + ch * kPerChannelFeatures,
                                                                     kPerChannelFeatures),
                              f.flags);
    }
    return f;
}

/// Reorders arbitrary segments into flow-channel order; throws naming the first missing channel.
inline std::array<const SignalSegment*, kFlowChannels> select_flow_channels(std::span<const SignalSegment> segments) {
    std::array<const SignalSegment*, kFlowChannels> picked{};
    for (const SignalSegment& s : segments) {
        if (!in_flow_subset(s.channel)) continue;
        picked[flow_channel_index(s.channel)] = &s;
    }
    for (std::size_t i = 0; i < kFlowChannels; ++i) {
        if (picked[i] == nullptr) {
            throw StructureError("missing channel " + std::string(channel_name(kFlowChannelOrder[i])));
        }
    }
    return picked;
}

/// 208 named individual features ("AF3 Mean" ... "AF4 Mean PSD").
inline IndividualFeatures extract_individual(std::span<const SignalSegment> segments, const PipelineConfig& cfg = {}) {
    const auto picked = select_flow_channels(segments);
    std::array<ChannelAnalysis, kFlowChannels> analysed;
    for (std::size_t i = 0; i < kFlowChannels; ++i) analysed[i] = analyze_channel(*picked[i], cfg);
    return individual_from_analysis(analysed);
}

}  // namespace flowsync
