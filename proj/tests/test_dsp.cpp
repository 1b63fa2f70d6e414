#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "flowsync/dsp.hpp"
#include "support.hpp"

using namespace flowsync;
using namespace flowsync::testing;

TEST(Wavelet, MatchesPyWaveletsSymmetricDecomposition) {
    // Frozen from pywt.wavedec(x, 'db4', mode='symmetric', level=3).
    std::vector<double> x(100);
    for (int i = 0; i < 100; ++i) x[i] = std::sin(0.3 * i) + 0.5 * std::cos(0.07 * i * i) + 0.01 * i;
    const auto c = wavedec(x, 3);
    ASSERT_EQ(c.approximation.size(), 18u);
    ASSERT_EQ(c.details[2].size(), 18u);
    ASSERT_EQ(c.details[1].size(), 30u);
    ASSERT_EQ(c.details[0].size(), 53u);
    EXPECT_NEAR(c.approximation[0], 2.5850871873335772, 1e-12);
    EXPECT_NEAR(c.approximation[9], -1.1673254320268935, 1e-12);
    EXPECT_NEAR(c.approximation[17], 0.8120262681856573, 1e-12);
    EXPECT_NEAR(c.details[2][0], 0.24705118857903724, 1e-12);
    EXPECT_NEAR(c.details[2][17], -1.2302686121017996, 1e-12);
    EXPECT_NEAR(c.details[1][15], 0.41175274562778935, 1e-12);
    EXPECT_NEAR(c.details[0][0], 0.021669063381173234, 1e-12);
    EXPECT_NEAR(c.details[0][26], -0.028798256176826433, 1e-12);
    EXPECT_NEAR(c.details[0][52], -0.005328420436108283, 1e-12);
}

TEST(Wavelet, PerfectReconstructionAcrossLengths) {
    std::mt19937_64 rng(7);
    for (std::size_t n : {32u, 63u, 64u, 100u, 257u, 1536u}) {
        const auto x = random_signal(rng, n);
        const auto r = waverec(wavedec(x, 5));
        ASSERT_EQ(r.size(), n);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(r[i], x[i], 1e-10);
    }
}

TEST(Wavelet, RejectsTooShortForLevels) {
    std::vector<double> x(20, 1.0);
    EXPECT_THROW(wavedec(x, 5), Error);
    EXPECT_LE(min_length_for_levels(5), kMinDenoiseLength);
}

TEST(Denoise, MatchesPyWaveletsReference) {
    std::vector<double> y(256);
    for (int i = 0; i < 256; ++i) {
        y[i] = std::sin(2 * std::numbers::pi * 10 * i / 256.0) + (i % 7 == 0 ? 0.3 : -0.1) * std::cos(i * 1.3);
    }
    const auto r = wavelet_denoise(y);
    ASSERT_EQ(r.size(), 256u);
    EXPECT_NEAR(r[0], 0.42374707920422316, 1e-10);
    EXPECT_NEAR(r[100], -0.48828522056731527, 1e-10);
    EXPECT_NEAR(r[255], -0.21288323213813692, 1e-10);
}

TEST(Denoise, ZeroIsFixedPoint) {
    std::vector<double> z(1536, 0.0);
    const auto r = wavelet_denoise(z);
    for (double v : r) EXPECT_EQ(v, 0.0);
}

TEST(Denoise, CleanToneSurvives) {
    const auto x = sine(1536, 10.0);
    const auto r = wavelet_denoise(x);
    EXPECT_GE(naive_pearson(x, r), 0.99);
}

TEST(Denoise, ImprovesSnrAtZeroDb) {
    std::mt19937_64 rng(11);
    const auto clean = sine(1536, 10.0, 256.0, std::sqrt(2.0));  // unit power
    const auto noise = random_signal(rng, 1536);                  // unit power
    std::vector<double> noisy(1536);
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] = clean[i] + noise[i];
    const auto r = wavelet_denoise(noisy);
    auto snr = [&](const std::vector<double>& s) {
        std::vector<double> err(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) err[i] = s[i] - clean[i];
        return 10.0 * std::log10(energy(clean) / energy(err));
    };
    EXPECT_GT(snr(r), snr(noisy));
}

TEST(Denoise, EnergyNonIncreasingAndIdempotent) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto x = random_signal(rng, 1536, 5.0);
        const auto tone = sine(1536, 6.0 + trial, 256.0, 20.0);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += tone[i];
        const auto once = wavelet_denoise(x);
        EXPECT_LE(energy(once), energy(x));
        const auto twice = wavelet_denoise(once);
        std::vector<double> diff(once.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = twice[i] - once[i];
        EXPECT_LE(std::sqrt(energy(diff) / energy(once)), 0.05);
    }
}

TEST(Denoise, RejectsNonFinite) {
    std::vector<double> x(64, 0.0);
    x[10] = std::nan("");
    EXPECT_THROW(wavelet_denoise(x), Error);
    x[10] = INFINITY;
    EXPECT_THROW(wavelet_denoise(x), Error);
}

TEST(BandDecompose, ZeroInput) {
    const auto b = band_decompose(std::vector<double>(1536, 0.0));
    for (const auto& band : b.bands) {
        ASSERT_EQ(band.size(), 1536u);
        for (double v : band) EXPECT_EQ(v, 0.0);
    }
}

TEST(BandDecompose, ComponentsReconstructInput) {
    std::mt19937_64 rng(5);
    const auto x = random_signal(rng, 1536, 10.0);
    const auto parts = wavelet_components(x);
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double s = 0.0;
        for (const auto& p : parts) s += p[i];
        err += (s - x[i]) * (s - x[i]);
    }
    EXPECT_LE(std::sqrt(err / energy(x)), 1e-6);
}

TEST(BandDecompose, SixHertzLandsInTheta) {
    const auto b = band_decompose(sine(1536, 6.0));
    double total = 0.0;
    for (const auto& band : b.bands) total += energy(band);
    EXPECT_GE(energy(b[BandId::Theta]) / total, 0.8);
}

TEST(BandDecompose, Linearity) {
    std::mt19937_64 rng(9);
    const auto x = random_signal(rng, 1536);
    const auto y = random_signal(rng, 1536);
    std::vector<double> mix(1536);
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.5 * x[i] - 0.75 * y[i];
    const auto bx = band_decompose(x), by = band_decompose(y), bm = band_decompose(mix);
    for (std::size_t b = 0; b < 4; ++b) {
        double err = 0.0;
        for (std::size_t i = 0; i < mix.size(); ++i) {
            const double want = 2.5 * bx.bands[b][i] - 0.75 * by.bands[b][i];
            err = std::max(err, std::abs(bm.bands[b][i] - want));
        }
        EXPECT_LE(err / std::sqrt(energy(bm.bands[b]) / 1536.0), 1e-9);
    }
}

TEST(BandDecompose, RejectsShortOrWrongRate) {
    EXPECT_THROW(band_decompose(std::vector<double>(63, 1.0)), Error);
    EXPECT_THROW(band_decompose(std::vector<double>(1536, 1.0), 128.0), Error);
}

TEST(Welch, MatchesDirectDft) {
    std::mt19937_64 rng(1);
    const auto x = random_signal(rng, 1536);
    const auto s = welch_psd(x, 256.0);
    const auto ref = naive_welch(x, 256.0, 256, 128);
    ASSERT_EQ(s.power.size(), ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(s.power[k], ref[k], 1e-12 * std::max(1.0, ref[k]));
    EXPECT_DOUBLE_EQ(s.frequencies[10], 10.0);
}

TEST(Welch, WhiteNoiseIsFlatAndParsevalConsistent) {
    std::mt19937_64 rng(2);
    std::vector<double> mean_psd(129, 0.0);
    double parseval_err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = random_signal(rng, 1536);
        const auto s = welch_psd(x, 256.0);
        for (std::size_t k = 0; k < s.power.size(); ++k) mean_psd[k] += s.power[k] / 100.0;
        double integral = 0.0;
        for (double p : s.power) integral += p * 1.0;  // 1 Hz bins
        const double m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
        double var = 0.0;
        for (double v : x) var += (v - m) * (v - m);
        var /= x.size();
        parseval_err = std::max(parseval_err, std::abs(integral - var) / var);
    }
    double level = 0.0;
    for (std::size_t k = 1; k < 128; ++k) level += mean_psd[k] / 127.0;
    for (std::size_t k = 1; k < 128; ++k) EXPECT_LE(std::abs(10.0 * std::log10(mean_psd[k] / level)), 3.0) << k;
    EXPECT_LE(parseval_err, 0.05);
}

TEST(Welch, TonePeakAndScaling) {
    const auto x = sine(1536, 10.0);
    const auto s = welch_psd(x, 256.0);
    const auto peak = std::max_element(s.power.begin(), s.power.end()) - s.power.begin();
    EXPECT_DOUBLE_EQ(s.frequencies[static_cast<std::size_t>(peak)], 10.0);

    std::vector<double> scaled(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = 3.0 * x[i];
    const auto s3 = welch_psd(scaled, 256.0);
    for (std::size_t k = 0; k < s.power.size(); ++k) EXPECT_NEAR(s3.power[k], 9.0 * s.power[k], 1e-9 * (1 + s3.power[k]));
}

TEST(Welch, ZeroInputAndErrors) {
    const auto s = welch_psd(std::vector<double>(1536, 0.0), 256.0);
    for (double p : s.power) EXPECT_EQ(p, 0.0);
    EXPECT_THROW(welch_psd(std::vector<double>{}, 256.0), Error);
    EXPECT_THROW(welch_psd(std::vector<double>(100, 1.0), 256.0), Error);
    EXPECT_THROW(welch_psd(std::vector<double>(1536, 1.0), 256.0, WelchConfig{256, 256}), Error);
}

TEST(BandPower, Basics) {
    Spectrum flat;
    for (int k = 0; k <= 128; ++k) {
        flat.frequencies.push_back(k);
        flat.power.push_back(1.0);
    }
    for (BandId b : kBands) EXPECT_DOUBLE_EQ(band_power(flat, b), 1.0);
    Spectrum zero = flat;
    std::fill(zero.power.begin(), zero.power.end(), 0.0);
    EXPECT_EQ(band_power(zero, BandId::Alpha), 0.0);
    EXPECT_THROW(band_power(flat, BandId::FullBand), Error);
    Spectrum coarse{{0.0, 64.0, 128.0}, {1.0, 1.0, 1.0}};
    EXPECT_THROW(band_power(coarse, BandId::Theta), Error);
}

TEST(BandPower, TenHertzDominatesAlpha) {
    const auto s = welch_psd(sine(1536, 10.0), 256.0);
    const double alpha = band_power(s, BandId::Alpha);
    for (BandId b : {BandId::Delta, BandId::Theta, BandId::Beta}) EXPECT_GE(alpha, 9.0 * band_power(s, b));
}
