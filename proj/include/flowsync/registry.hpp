#pragma once

// Ordered, stable feature-name registry. The strings are part of the file
// formats (feature CSV header, importance tables) and must not change.
//
// Layout of the 272 columns:
//   [0, 208)   individual features, channel-major over kFlowChannelOrder,
//              26 per channel in kPerChannelFeatures order
//   [208, 272) synchrony features, channel-major, per channel
//              "CCC δ..β" followed by "DTW δ..β"

#include <array>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flowsync/core.hpp"
#include "flowsync/dsp.hpp"

namespace flowsync {

inline constexpr std::size_t kTimeFeatureCount = 12;
inline constexpr std::size_t kFreqFeatureCount = 14;
inline constexpr std::size_t kPerChannelFeatures = kTimeFeatureCount + kFreqFeatureCount;  // 26
inline constexpr std::size_t kIndividualFeatureCount = kPerChannelFeatures * kFlowChannels;  // 208
inline constexpr std::size_t kSynchronyPerChannel = 8;  // 4 bands x {CCC, DTW}
inline constexpr std::size_t kSynchronyFeatureCount = kSynchronyPerChannel * kFlowChannels;  // 64
inline constexpr std::size_t kFeatureCount = kIndividualFeatureCount + kSynchronyFeatureCount;  // 272

inline const std::array<std::string, kPerChannelFeatures>& per_channel_feature_labels() {
    static const std::array<std::string, kPerChannelFeatures> labels = {
        "Mean", "SD", "Variance", "AAFOD", "NFOD", "Energy", "Power", "Activity", "Mobility", "HOZC", "PPM",
        "Kurtosis",
        "PSD δ", "PSD θ", "PSD α", "PSD β",
        "LBP δ", "LBP θ", "LBP α", "LBP β",
        "DE δ", "DE θ", "DE α", "DE β", "DE FB",
        "Mean PSD"};
    return labels;
}

inline std::vector<std::string> individual_feature_names() {
    std::vector<std::string> out;
    out.reserve(kIndividualFeatureCount);
    for (ChannelId c : kFlowChannelOrder) {
        for (const auto& label : per_channel_feature_labels()) {
            out.push_back(std::string(channel_name(c)) + " " + label);
        }
    }
    return out;
}

inline std::vector<std::string> synchrony_feature_names() {
    std::vector<std::string> out;
    out.reserve(kSynchronyFeatureCount);
    for (ChannelId c : kFlowChannelOrder) {
        for (const char* kind : {"CCC", "DTW"}) {
            for (BandId b : kBands) {
                out.push_back(std::string(channel_name(c)) + " " + kind + " " + std::string(band_symbol(b)));
            }
        }
    }
    return out;
}

inline const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        auto all = individual_feature_names();
        auto sync = synchrony_feature_names();
        all.insert(all.end(), sync.begin(), sync.end());
        return all;
    }();
    return names;
}

/// Column groups used by the ablation protocol.
enum class FeatureGroup : std::uint8_t {
    L,   // individual features of the left temporal channels (T7, P7)
    F,   // individual features of the frontal channels
    LS,  // synchrony features of the left temporal channels
    FS,  // synchrony features of the frontal channels
};

inline std::string_view group_name(FeatureGroup g) {
    switch (g) {
    case FeatureGroup::L: return "L";
    case FeatureGroup::F: return "F";
    case FeatureGroup::LS: return "LS";
    case FeatureGroup::FS: return "FS";
    }
    return "";
}

/// Column indices (ascending, registry order) covered by the union of groups.
inline std::vector<std::size_t> feature_indices(std::span<const FeatureGroup> groups) {
    std::set<std::size_t> cols;
    for (FeatureGroup g : groups) {
        const bool sync = (g == FeatureGroup::LS || g == FeatureGroup::FS);
        const Region want = (g == FeatureGroup::L || g == FeatureGroup::LS) ? Region::LeftTemporal : Region::Frontal;
        for (std::size_t ch = 0; ch < kFlowChannels; ++ch) {
            if (region_of(kFlowChannelOrder[ch]) != want) continue;
            if (sync) {
                for (std::size_t k = 0; k < kSynchronyPerChannel; ++k) {
                    cols.insert(kIndividualFeatureCount + ch * kSynchronyPerChannel + k);
                }
            } else {
                for (std::size_t k = 0; k < kPerChannelFeatures; ++k) cols.insert(ch * kPerChannelFeatures + k);
            }
        }
    }
    return {cols.begin(), cols.end()};
}

inline std::vector<std::size_t> feature_indices(std::initializer_list<FeatureGroup> groups) {
    return feature_indices(std::span<const FeatureGroup>(groups.begin(), groups.size()));
}

/// Parses "L+F+FS" style set names.
inline std::vector<FeatureGroup> parse_feature_set(std::string_view spec) {
    std::vector<FeatureGroup> out;
    std::size_t start = 0;
    while (start <= spec.size()) {
        std::size_t end = spec.find('+', start);
        if (end == std::string_view::npos) end = spec.size();
        const std::string_view tok = spec.substr(start, end - start);
        if (tok == "L") out.push_back(FeatureGroup::L);
        else if (tok == "F") out.push_back(FeatureGroup::F);
        else if (tok == "LS") out.push_back(FeatureGroup::LS);
        else if (tok == "FS") out.push_back(FeatureGroup::FS);
        else throw Error("unknown feature group '" + std::string(tok) + "' (expected L, F, LS or FS)");
        start = end + 1;
    }
    if (out.empty()) throw Error("empty feature set");
    return out;
}

}  // namespace flowsync
