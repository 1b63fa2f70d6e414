#pragma once

// Domain types shared by every stage of the simultaneous-flow pipeline,
// plus the binary / ternary labeling rules derived from self-reported
// flow scores.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flowsync {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that is structurally wrong (missing channel, bad shape, ...).
class StructureError : public Error {
public:
    using Error::Error;
};

class ShapeError : public StructureError {
public:
    using StructureError::StructureError;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : Error(what + " (row " + std::to_string(row) + ", column " + std::to_string(column) + ")"),
          row_(row), column_(column) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class ChannelError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Channels

constexpr double kSampleRate = 256.0;
constexpr std::size_t kSegmentLength = 1536;   // 6 s at 256 Hz
constexpr std::size_t kRecordingChannels = 14;
constexpr std::size_t kFlowChannels = 8;

/// The 14 Emotiv Epoc+ electrodes, in the headset's canonical row order.
enum class ChannelId : std::uint8_t {
    AF3, F7, F3, FC5, T7, P7, O1, O2, P8, T8, FC6, F4, F8, AF4
};

enum class Region : std::uint8_t { Frontal, LeftTemporal, Other };

inline constexpr std::array<ChannelId, kRecordingChannels> kEpocOrder = {
    ChannelId::AF3, ChannelId::F7, ChannelId::F3, ChannelId::FC5, ChannelId::T7,
    ChannelId::P7,  ChannelId::O1, ChannelId::O2, ChannelId::P8,  ChannelId::T8,
    ChannelId::FC6, ChannelId::F4, ChannelId::F8, ChannelId::AF4};

/// Channels used by the flow pipeline, in feature-registry order.
inline constexpr std::array<ChannelId, kFlowChannels> kFlowChannelOrder = {
    ChannelId::AF3, ChannelId::F7, ChannelId::F3, ChannelId::T7,
    ChannelId::P7,  ChannelId::F4, ChannelId::F8, ChannelId::AF4};

constexpr std::string_view channel_name(ChannelId c) {
    constexpr std::array<std::string_view, kRecordingChannels> names = {
        "AF3", "F7", "F3", "FC5", "T7", "P7", "O1", "O2", "P8", "T8", "FC6", "F4", "F8", "AF4"};
    return names[static_cast<std::size_t>(c)];
}

inline std::optional<ChannelId> parse_channel(std::string_view name) {
    for (ChannelId c : kEpocOrder) {
        if (channel_name(c) == name) return c;
    }
    return std::nullopt;
}

constexpr Region region_of(ChannelId c) {
    switch (c) {
    case ChannelId::F3: case ChannelId::F4: case ChannelId::F7:
    case ChannelId::F8: case ChannelId::AF3: case ChannelId::AF4:
        return Region::Frontal;
    case ChannelId::T7: case ChannelId::P7:
        return Region::LeftTemporal;
    default:
        return Region::Other;
    }
}

constexpr bool in_flow_subset(ChannelId c) { return region_of(c) != Region::Other; }

/// Position of a flow channel in kFlowChannelOrder.
inline std::size_t flow_channel_index(ChannelId c) {
    for (std::size_t i = 0; i < kFlowChannels; ++i) {
        if (kFlowChannelOrder[i] == c) return i;
    }
    throw ChannelError("channel " + std::string(channel_name(c)) + " is not a flow channel");
}

// ---------------------------------------------------------------------------
// Signals

struct SignalSegment {
    ChannelId channel = ChannelId::AF3;
    std::vector<double> samples;
    double sample_rate = kSampleRate;
};

class FlowScore {
public:
    constexpr FlowScore() = default;
    explicit constexpr FlowScore(int value) : value_(value) {
        if (value < 0 || value > 3) throw std::invalid_argument("flow score must be in [0, 3]");
    }
    constexpr int value() const noexcept { return value_; }
    constexpr bool high() const noexcept { return value_ >= 2; }
    friend constexpr bool operator==(FlowScore, FlowScore) = default;

private:
    int value_ = 0;
};

/// Segments of one participant for one sampling point, indexed by kFlowChannelOrder.
using ParticipantSegments = std::array<SignalSegment, kFlowChannels>;

struct DyadSample {
    int group_id = 0;
    int round_index = 1;      // 1..3
    int sampling_index = 1;   // 1..5
    ParticipantSegments segments_p1;
    ParticipantSegments segments_p2;
    FlowScore score_p1;
    FlowScore score_p2;
};

/// Throws StructureError when the dyad violates its channel / length invariants.
inline void validate(const DyadSample& d) {
    std::size_t length = d.segments_p1[0].samples.size();
    for (std::size_t i = 0; i < kFlowChannels; ++i) {
        for (const ParticipantSegments* p : {&d.segments_p1, &d.segments_p2}) {
            const SignalSegment& s = (*p)[i];
            if (s.channel != kFlowChannelOrder[i]) {
                throw StructureError("dyad " + std::to_string(d.group_id) + ": expected channel " +
                                     std::string(channel_name(kFlowChannelOrder[i])) + " at slot " +
                                     std::to_string(i));
            }
            if (s.samples.size() != length || s.sample_rate != d.segments_p1[0].sample_rate) {
                throw StructureError("dyad " + std::to_string(d.group_id) +
                                     ": segments differ in length or sample rate");
            }
            for (double v : s.samples) {
                if (!std::isfinite(v)) {
                    throw StructureError("dyad " + std::to_string(d.group_id) + ": non-finite sample in " +
                                         std::string(channel_name(s.channel)));
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Labels

enum class BinaryLabel : std::uint8_t { LowSimultaneousFlow = 0, HighSimultaneousFlow = 1 };

enum class TernaryLabel : std::uint8_t {
    NeitherIndividualNorSimultaneous = 0,
    IndividualNotSimultaneous = 1,
    SimultaneousFlow = 2,
};

/// High only when both participants report high (>= 2) flow.
constexpr BinaryLabel label_binary(FlowScore a, FlowScore b) {
    return (a.high() && b.high()) ? BinaryLabel::HighSimultaneousFlow : BinaryLabel::LowSimultaneousFlow;
}

/// Label from the perspective of `self`.
constexpr TernaryLabel label_ternary(FlowScore self, FlowScore other) {
    if (!self.high()) return TernaryLabel::NeitherIndividualNorSimultaneous;
    return other.high() ? TernaryLabel::SimultaneousFlow : TernaryLabel::IndividualNotSimultaneous;
}

constexpr std::string_view label_name(BinaryLabel l) {
    return l == BinaryLabel::HighSimultaneousFlow ? "High Simultaneous Flow" : "Low Simultaneous Flow";
}

constexpr std::string_view label_name(TernaryLabel l) {
    switch (l) {
    case TernaryLabel::NeitherIndividualNorSimultaneous: return "Neither Individual nor Simultaneous Flow";
    case TernaryLabel::IndividualNotSimultaneous: return "Individual but not Simultaneous Flow";
    case TernaryLabel::SimultaneousFlow: return "Simultaneous Flow";
    }
    return "";
}

enum class Task : std::uint8_t { Binary, Ternary };

constexpr int class_count(Task t) { return t == Task::Binary ? 2 : 3; }

// ---------------------------------------------------------------------------
// Quality flags

enum QualityFlag : std::uint32_t {
    kFlagNone = 0,
    kFlagConstantSignal = 1u << 0,    // sigma = 0: nfod, mobility, kurtosis emitted as 0
    kFlagSilentBand = 1u << 1,        // band with zero power / variance: lbp or de emitted as 0
    kFlagDegenerateCorrelation = 1u << 2,
    kFlagConstantColumn = 1u << 3,    // z-score column with zero spread
    kFlagZeroDenominator = 1u << 4,   // metric term with an empty denominator, defined as 0
    kFlagDegenerateTest = 1u << 5,    // paired t-test on zero-variance differences
};

using QualityFlags = std::uint32_t;

}  // namespace flowsync
