#include <gtest/gtest.h>

#include "flowsync/core.hpp"

using namespace flowsync;

namespace {

// Tables 2 and 4 of the labeling rules, spelled out for all 16 pairs:
// a participant is "high" at score >= 2.
BinaryLabel expected_binary(int a, int b) {
    const bool ha = a >= 2, hb = b >= 2;
    return (ha && hb) ? BinaryLabel::HighSimultaneousFlow : BinaryLabel::LowSimultaneousFlow;
}

TernaryLabel expected_ternary(int self, int other) {
    if (self <= 1) return TernaryLabel::NeitherIndividualNorSimultaneous;
    return other <= 1 ? TernaryLabel::IndividualNotSimultaneous : TernaryLabel::SimultaneousFlow;
}

}  // namespace

TEST(Labels, BinaryExamples) {
    EXPECT_EQ(label_binary(FlowScore(0), FlowScore(1)), BinaryLabel::LowSimultaneousFlow);
    EXPECT_EQ(label_binary(FlowScore(2), FlowScore(3)), BinaryLabel::HighSimultaneousFlow);
    EXPECT_EQ(label_binary(FlowScore(3), FlowScore(1)), BinaryLabel::LowSimultaneousFlow);
}

TEST(Labels, TernaryExamples) {
    EXPECT_EQ(label_ternary(FlowScore(2), FlowScore(1)), TernaryLabel::IndividualNotSimultaneous);
    EXPECT_EQ(label_ternary(FlowScore(1), FlowScore(3)), TernaryLabel::NeitherIndividualNorSimultaneous);
    EXPECT_EQ(label_ternary(FlowScore(3), FlowScore(3)), TernaryLabel::SimultaneousFlow);
}

TEST(Labels, ExhaustiveTruthTableAndConsistency) {
    for (int a = 0; a <= 3; ++a) {
        for (int b = 0; b <= 3; ++b) {
            const FlowScore sa(a), sb(b);
            EXPECT_EQ(label_binary(sa, sb), expected_binary(a, b)) << a << "," << b;
            EXPECT_EQ(label_binary(sa, sb), label_binary(sb, sa));
            EXPECT_EQ(label_ternary(sa, sb), expected_ternary(a, b)) << a << "," << b;
            EXPECT_EQ(label_ternary(sa, sb) == TernaryLabel::SimultaneousFlow,
                      label_binary(sa, sb) == BinaryLabel::HighSimultaneousFlow);
        }
    }
}

TEST(Labels, BinaryOrder) { EXPECT_LT(BinaryLabel::LowSimultaneousFlow, BinaryLabel::HighSimultaneousFlow); }

TEST(FlowScoreTest, RejectsOutOfRange) {
    EXPECT_THROW(FlowScore(-1), std::invalid_argument);
    EXPECT_THROW(FlowScore(4), std::invalid_argument);
    EXPECT_NO_THROW(FlowScore(3));
}

TEST(Channels, FlowSubsetAndRegions) {
    int flow = 0, frontal = 0, temporal = 0;
    for (ChannelId c : kEpocOrder) {
        if (in_flow_subset(c)) ++flow;
        if (region_of(c) == Region::Frontal) ++frontal;
        if (region_of(c) == Region::LeftTemporal) ++temporal;
    }
    EXPECT_EQ(flow, 8);
    EXPECT_EQ(frontal, 6);
    EXPECT_EQ(temporal, 2);
    for (ChannelId c : kFlowChannelOrder) EXPECT_TRUE(in_flow_subset(c));
    EXPECT_EQ(parse_channel("AF4"), ChannelId::AF4);
    EXPECT_FALSE(parse_channel("Cz").has_value());
}
