#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "flowsync/synth.hpp"
#include "flowsync/synchrony.hpp"
#include "support.hpp"

using namespace flowsync;
namespace ft = flowsync::testing;

namespace {

struct CccStats {
    double high = 0.0;      // mean ccc of High-label samples
    double high_abs = 0.0;  // mean |ccc| of High-label samples
    double low = 0.0;
    std::size_t n_high = 0, n_low = 0;
};

// Per-band ccc through the same conditioning the pipeline applies; DTW is skipped.
CccStats ccc_stats(const std::vector<SynthSample>& samples) {
    CccStats st;
    for (const auto& s : samples) {
        const auto d = to_dyad(s);
        double sum = 0.0, sum_abs = 0.0;
        for (std::size_t ch = 0; ch < kFlowChannels; ++ch) {
            const auto a = analyze_channel(d.segments_p1[ch]);
            const auto b = analyze_channel(d.segments_p2[ch]);
            for (std::size_t band = 0; band < 4; ++band) {
                const double r = ft::naive_pearson(a.bands.bands[band], b.bands.bands[band]);
                sum += r;
                sum_abs += std::abs(r);
            }
        }
        const double n = static_cast<double>(kFlowChannels * 4);
        if (s.scores[0] >= 2 && s.scores[1] >= 2) {
            st.high += sum / n;
            st.high_abs += sum_abs / n;
            ++st.n_high;
        } else {
            st.low += sum / n;
            ++st.n_low;
        }
    }
    if (st.n_high) st.high /= static_cast<double>(st.n_high), st.high_abs /= static_cast<double>(st.n_high);
    if (st.n_low) st.low /= static_cast<double>(st.n_low);
    return st;
}

SynthConfig small(double kappa, std::size_t pairs = 4) {
    SynthConfig c;
    c.n_pairs = pairs;
    c.coupling = kappa;
    c.seed = 11;
    return c;
}

// Variance carried by DFT bins in [lo, hi) Hz, by Parseval over the whole record.
double band_variance(const std::vector<double>& x, double lo, double hi) {
    const std::size_t n = x.size();
    double v = 0.0;
    for (std::size_t k = 1; k < n / 2; ++k) {
        const double f = static_cast<double>(k) * kSampleRate / static_cast<double>(n);
        if (f < lo || f >= hi) continue;
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * i / n);
        v += 2.0 * std::norm(acc) / (static_cast<double>(n) * static_cast<double>(n));
    }
    return v;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("flowsync_synth_" + name)) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Synth, ShapeAndCounts) {
    const auto s = synthesize(small(0.5, 2));
    ASSERT_EQ(s.size(), 2u * 3u * 5u);
    EXPECT_EQ(s.front().group, 1);
    EXPECT_EQ(s.back().group, 2);
    EXPECT_EQ(s.back().round, 3);
    EXPECT_EQ(s.back().sampling, 5);
    for (const auto& x : s) {
        for (const auto& rec : x.recordings) {
            ASSERT_EQ(rec.size(), kRecordingChannels);
            for (const auto& row : rec) ASSERT_EQ(row.size(), kSegmentLength);
        }
        for (int sc : x.scores) EXPECT_TRUE(sc >= 0 && sc <= 3);
    }
}

TEST(Synth, CouplingPlantsCorrelation) {
    const auto st = ccc_stats(synthesize(small(0.8)));
    ASSERT_GT(st.n_high, 0u);
    ASSERT_GT(st.n_low, 0u);
    EXPECT_GE(st.high, 0.4);
    EXPECT_GT(st.high, st.low);
}

TEST(Synth, NoCouplingStaysNearZero) {
    auto c = small(0.0, 6);
    c.band_effect = no_band_effect();
    const auto st = ccc_stats(synthesize(c));
    ASSERT_GT(st.n_high, 0u);
    EXPECT_LE(st.high_abs, 0.1);
}

TEST(Synth, CorrelationMonotoneInCoupling) {
    double prev = -1.0;
    for (double k : {0.0, 0.2, 0.4, 0.6, 0.8}) {
        const auto st = ccc_stats(synthesize(small(k, 2)));
        EXPECT_GE(st.high, prev) << "kappa " << k;
        prev = st.high;
    }
}

TEST(Synth, CouplingLeavesScoresUnchanged) {
    const auto a = synthesize(small(0.0, 2));
    const auto b = synthesize(small(0.8, 2));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].scores, b[i].scores);
}

TEST(Synth, JointDistributionFollowsWeights) {
    auto c = small(0.0, 40);
    c.joint = {1.0, 0.0, 0.0, 1.0};
    std::size_t hh = 0;
    const auto s = synthesize(c);
    for (const auto& x : s) {
        const bool h1 = x.scores[0] >= 2, h2 = x.scores[1] >= 2;
        ASSERT_EQ(h1, h2);
        hh += h1;
    }
    // 600 draws at p = 0.5: sd ~ 12.2, allow 4 sd.
    EXPECT_NEAR(static_cast<double>(hh), 300.0, 49.0);
}

TEST(Synth, BandEffectScalesFrontalPower) {
    auto c = small(0.0, 8);
    c.noise_floor = 0.0;
    c.joint = {1.0, 0.0, 0.0, 1.0};
    const auto samples = synthesize(c);
    const std::size_t row_f3 = 2, row_o1 = 6;  // F3 (frontal) and O1 (not in the flow subset)
    ASSERT_EQ(kEpocOrder[row_f3], ChannelId::F3);
    ASSERT_EQ(kEpocOrder[row_o1], ChannelId::O1);
    std::array<double, 4> theta{}, count{};
    for (const auto& s : samples) {
        for (std::size_t p = 0; p < 2; ++p) {
            const auto& x = s.recordings[p][row_f3];
            theta[static_cast<std::size_t>(s.scores[p])] += band_variance(x, 4.0, 8.0);
            count[static_cast<std::size_t>(s.scores[p])] += 1.0;
            EXPECT_EQ(ft::energy(s.recordings[p][row_o1]), 0.0);
        }
    }
    for (std::size_t k = 0; k < 4; ++k) ASSERT_GT(count[k], 0.0);
    // Expected theta power ratio score 3 : score 0 is 1 + 0.6 * 3.
    const double ratio = (theta[3] / count[3]) / (theta[0] / count[0]);
    EXPECT_NEAR(ratio, 2.8, 0.4);
}

TEST(Synth, SameSeedSameBytesAnyJobs) {
    auto c = small(0.8, 2);
    TempDir a("a"), b("b");
    write_synth(a.path, synthesize(c));
    c.jobs = 3;
    write_synth(b.path, synthesize(c));
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a.path)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), a.path);
        ASSERT_TRUE(fs::exists(b.path / rel)) << rel;
        EXPECT_EQ(slurp(e.path()), slurp(b.path / rel)) << rel;
        ++files;
    }
    EXPECT_EQ(files, 2u * 30u + 2u);
}

TEST(Synth, DifferentSeedsDiffer) {
    auto c = small(0.8, 1);
    const auto a = synthesize(c);
    c.seed = 12;
    const auto b = synthesize(c);
    EXPECT_NE(a[0].recordings[0][0], b[0].recordings[0][0]);
}

TEST(Synth, FilesLoadThroughDatasetModule) {
    const auto samples = synthesize(small(0.8, 2));
    TempDir dir("load");
    write_synth(dir.path, samples);
    const auto manifest = load_manifest(dir.path / "manifest.csv");
    ASSERT_EQ(manifest.size(), 2u * samples.size());
    LoadReport report;
    const auto dyads = load_dyads(dir.path, manifest, default_channel_map(), report);
    EXPECT_TRUE(report.errors.empty());
    EXPECT_TRUE(report.warnings.empty());
    ASSERT_EQ(dyads.size(), samples.size());
    const auto rec = load_recording(recording_path(dir.path, 1, 2, 1, 3), default_channel_map());
    EXPECT_EQ(rec.rows, samples[2].recordings[1]);
}

TEST(Synth, GroundTruthMatchesScores) {
    const auto samples = synthesize(small(0.8, 3));
    TempDir dir("truth");
    write_synth(dir.path, samples);
    std::ifstream in(dir.path / "ground_truth.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "group,round,sampling,score_p1,score_p2,binary_label,ternary_p1,ternary_p2");
    auto ternary = [](int self, int other) { return self < 2 ? 0 : (other >= 2 ? 2 : 1); };
    std::size_t i = 0;
    while (std::getline(in, line)) {
        ASSERT_LT(i, samples.size());
        const auto& s = samples[i++];
        std::ostringstream want;
        const int bin = s.scores[0] >= 2 && s.scores[1] >= 2;
        want << s.group << ',' << s.round << ',' << s.sampling << ',' << s.scores[0] << ',' << s.scores[1] << ','
             << bin << ',' << ternary(s.scores[0], s.scores[1]) << ',' << ternary(s.scores[1], s.scores[0]);
        EXPECT_EQ(line, want.str());
    }
    EXPECT_EQ(i, samples.size());
}

TEST(Synth, RejectsInvalidConfig) {
    auto bad = [](auto edit) {
        SynthConfig c;
        edit(c);
        return c;
    };
    EXPECT_THROW(synthesize(bad([](SynthConfig& c) { c.coupling = 1.5; })), Error);
    EXPECT_THROW(synthesize(bad([](SynthConfig& c) { c.coupling = -0.1; })), Error);
    EXPECT_THROW(synthesize(bad([](SynthConfig& c) { c.n_pairs = 0; })), Error);
    EXPECT_THROW(synthesize(bad([](SynthConfig& c) { c.band_effect[1][2] = 0.0; })), Error);
    EXPECT_THROW(synthesize(bad([](SynthConfig& c) { c.joint = {0.0, 0.0, 0.0, 0.0}; })), Error);
    EXPECT_THROW(synthesize(bad([](SynthConfig& c) { c.joint[2] = -1.0; })), Error);
    EXPECT_THROW(synthesize(bad([](SynthConfig& c) { c.noise_floor = -1.0; })), Error);
}
