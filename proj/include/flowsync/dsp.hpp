#pragma once

// Signal conditioning: db4 discrete wavelet transform, threshold denoising,
// dyadic band decomposition and Welch power spectral density.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include "flowsync/core.hpp"

namespace flowsync {

// ---------------------------------------------------------------------------
// Bands

enum class BandId : std::uint8_t { Delta, Theta, Alpha, Beta, FullBand };

inline constexpr std::array<BandId, 4> kBands = {BandId::Delta, BandId::Theta, BandId::Alpha, BandId::Beta};

struct BandEdges {
    double low;
    double high;
};

constexpr BandEdges band_edges(BandId b) {
    switch (b) {
    case BandId::Delta: return {0.0, 4.0};
    case BandId::Theta: return {4.0, 8.0};
    case BandId::Alpha: return {8.0, 16.0};
    case BandId::Beta: return {16.0, 32.0};
    case BandId::FullBand: return {0.0, kSampleRate / 2.0};
    }
    return {0.0, 0.0};
}

/// Greek-letter suffix used in feature names ("δ", "θ", "α", "β", "FB").
constexpr std::string_view band_symbol(BandId b) {
    switch (b) {
    case BandId::Delta: return "δ";
    case BandId::Theta: return "θ";
    case BandId::Alpha: return "α";
    case BandId::Beta: return "β";
    case BandId::FullBand: return "FB";
    }
    return "";
}

// ---------------------------------------------------------------------------
// Wavelet filter bank

struct Wavelet {
    std::vector<double> dec_lo;
    std::vector<double> dec_hi;
    std::vector<double> rec_lo;
    std::vector<double> rec_hi;

    std::size_t length() const { return dec_lo.size(); }

    static Wavelet from_scaling_filter(std::vector<double> dec_lo) {
        Wavelet w;
        const std::size_t n = dec_lo.size();
        w.dec_hi.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            w.dec_hi[i] = ((i % 2 == 0) ? -1.0 : 1.0) * dec_lo[n - 1 - i];
        }
        w.rec_lo.assign(dec_lo.rbegin(), dec_lo.rend());
        w.rec_hi.assign(w.dec_hi.rbegin(), w.dec_hi.rend());
        w.dec_lo = std::move(dec_lo);
        return w;
    }
};

/// Daubechies 4 (8 taps).
inline const Wavelet& db4() {
    static const Wavelet w = Wavelet::from_scaling_filter({
        -0.010597401785069032, 0.0328830116668852, 0.030841381835560764, -0.18703481171909309,
        -0.027983769416859854, 0.6308807679298589, 0.7148465705529157, 0.2303778133088965});
    return w;
}

namespace detail {

/// Half-sample symmetric extension: x[-1] = x[0], x[n] = x[n-1].
inline double symmetric_at(std::span<const double> x, std::ptrdiff_t k) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    while (k < 0 || k >= n) {
        if (k < 0) k = -k - 1;
        if (k >= n) k = 2 * n - 1 - k;
    }
    return x[static_cast<std::size_t>(k)];
}

inline std::size_t dwt_output_length(std::size_t n, std::size_t filter_len) {
    return (n + filter_len - 1) / 2;
}

}  // namespace detail

/// One analysis step (approximation, detail) with symmetric boundary handling.
inline std::pair<std::vector<double>, std::vector<double>> dwt_step(std::span<const double> x, const Wavelet& w) {
    const std::size_t f = w.length();
    const std::size_t out = detail::dwt_output_length(x.size(), f);
    std::vector<double> approx(out), det(out);
    for (std::size_t o = 0; o < out; ++o) {
        const auto i = static_cast<std::ptrdiff_t>(2 * o + 1);
        double a = 0.0, d = 0.0;
        for (std::size_t j = 0; j < f; ++j) {
            const double v = detail::symmetric_at(x, i - static_cast<std::ptrdiff_t>(j));
            a += w.dec_lo[j] * v;
            d += w.dec_hi[j] * v;
        }
        approx[o] = a;
        det[o] = d;
    }
    return {std::move(approx), std::move(det)};
}

/// One synthesis step; output length is 2*N - F + 2 for N coefficients.
inline std::vector<double> idwt_step(std::span<const double> approx, std::span<const double> det, const Wavelet& w) {
    const std::size_t f = w.length();
    const std::size_t n = approx.size();
    if (det.size() != n) throw Error("idwt_step: coefficient length mismatch");
    if (n + 1 < f / 2) throw Error("idwt_step: too few coefficients");
    std::vector<double> out(2 * n + 2 - f, 0.0);
    std::size_t o = 0;
    for (std::size_t i = f / 2 - 1; i < n; ++i, o += 2) {
        double even = 0.0, odd = 0.0;
        for (std::size_t j = 0; j < f / 2; ++j) {
            even += w.rec_lo[2 * j] * approx[i - j] + w.rec_hi[2 * j] * det[i - j];
            odd += w.rec_lo[2 * j + 1] * approx[i - j] + w.rec_hi[2 * j + 1] * det[i - j];
        }
        out[o] = even;
        out[o + 1] = odd;
    }
    return out;
}

/// Multilevel decomposition. details[0] is the finest level (D1).
struct WaveletCoefficients {
    std::vector<double> approximation;
    std::vector<std::vector<double>> details;
    std::vector<std::size_t> input_lengths;  // signal length entering each level

    std::size_t levels() const { return details.size(); }
};

/// Smallest signal length for which every level's input still spans the filter.
inline std::size_t min_length_for_levels(std::size_t levels, const Wavelet& w = db4()) {
    for (std::size_t n = 1;; ++n) {
        std::size_t len = n;
        bool ok = true;
        for (std::size_t l = 0; l < levels; ++l) {
            if (len < w.length()) {
                ok = false;
                break;
            }
            len = detail::dwt_output_length(len, w.length());
        }
        if (ok) return n;
    }
}

inline WaveletCoefficients wavedec(std::span<const double> x, std::size_t levels, const Wavelet& w = db4()) {
    if (x.size() < min_length_for_levels(levels, w)) {
        throw Error("wavedec: signal of length " + std::to_string(x.size()) + " is too short for " +
                    std::to_string(levels) + " decomposition levels");
    }
    WaveletCoefficients c;
    std::vector<double> current(x.begin(), x.end());
    for (std::size_t l = 0; l < levels; ++l) {
        c.input_lengths.push_back(current.size());
        auto [a, d] = dwt_step(current, w);
        c.details.push_back(std::move(d));
        current = std::move(a);
    }
    c.approximation = std::move(current);
    return c;
}

inline std::vector<double> waverec(const WaveletCoefficients& c, const Wavelet& w = db4()) {
    std::vector<double> a = c.approximation;
    for (std::size_t l = c.levels(); l-- > 0;) {
        const auto& d = c.details[l];
        if (a.size() > d.size()) a.resize(d.size());
        a = idwt_step(a, d, w);
        a.resize(c.input_lengths[l]);
    }
    return a;
}

// ---------------------------------------------------------------------------
// Denoising

struct DenoiseConfig {
    std::size_t levels = 5;
    double mad_normalizer = 0.6745;
    bool soft = true;
};

inline constexpr std::size_t kMinDenoiseLength = 32;

inline void require_finite(std::span<const double> x, const char* who) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) {
            throw Error(std::string(who) + ": non-finite sample at index " + std::to_string(i));
        }
    }
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

/// Universal-threshold wavelet shrinkage. Noise level comes from the median
/// absolute finest-scale detail; the same threshold sigma * sqrt(2 ln N) is
/// applied to every detail level and the approximation is kept.
inline std::vector<double> wavelet_denoise(std::span<const double> x, const DenoiseConfig& cfg = {}) {
    require_finite(x, "wavelet_denoise");
    if (x.size() < kMinDenoiseLength) {
        throw Error("wavelet_denoise: need at least " + std::to_string(kMinDenoiseLength) + " samples");
    }
    WaveletCoefficients c = wavedec(x, cfg.levels);
    std::vector<double> finest(c.details[0].size());
    std::transform(c.details[0].begin(), c.details[0].end(), finest.begin(), [](double v) { return std::abs(v); });
    const double sigma = median_of(std::move(finest)) / cfg.mad_normalizer;
    const double threshold = sigma * std::sqrt(2.0 * std::log(static_cast<double>(x.size())));
    for (auto& level : c.details) {
        for (double& v : level) {
            const double mag = std::abs(v);
            if (mag <= threshold) {
                v = 0.0;
            } else if (cfg.soft) {
                v = std::copysign(mag - threshold, v);
            }
        }
    }
    return waverec(c);
}

// ---------------------------------------------------------------------------
// Band decomposition

struct BandSignals {
    std::array<std::vector<double>, 4> bands;  // indexed by kBands order

    const std::vector<double>& operator[](BandId b) const { return bands.at(static_cast<std::size_t>(b)); }
    std::vector<double>& operator[](BandId b) { return bands.at(static_cast<std::size_t>(b)); }
};

inline constexpr std::size_t kBandLevels = 5;
inline constexpr std::size_t kMinBandLength = 64;

/// Reconstructions of every coefficient group of a 5-level db4 DWT:
/// index 0 = A5, 1 = D5, 2 = D4, 3 = D3, 4 = D2, 5 = D1. They sum to the input.
inline std::array<std::vector<double>, kBandLevels + 1> wavelet_components(std::span<const double> x) {
    const WaveletCoefficients full = wavedec(x, kBandLevels);
    std::array<std::vector<double>, kBandLevels + 1> out;
    WaveletCoefficients zero = full;
    std::fill(zero.approximation.begin(), zero.approximation.end(), 0.0);
    for (auto& d : zero.details) std::fill(d.begin(), d.end(), 0.0);

    WaveletCoefficients single = zero;
    single.approximation = full.approximation;
    out[0] = waverec(single);
    for (std::size_t k = 1; k <= kBandLevels; ++k) {
        const std::size_t level = kBandLevels - k;  // details index: D5 -> 4, D1 -> 0
        single = zero;
        single.details[level] = full.details[level];
        out[k] = waverec(single);
    }
    return out;
}

/// At 256 Hz the dyadic ranges line up with the EEG bands:
/// A5 -> delta, D5 -> theta, D4 -> alpha, D3 -> beta; D2 and D1 are dropped.
inline BandSignals band_decompose(std::span<const double> x, double sample_rate = kSampleRate) {
    if (sample_rate != kSampleRate) {
        throw Error("band_decompose: dyadic band mapping requires a 256 Hz sample rate");
    }
    if (x.size() < kMinBandLength) {
        throw Error("band_decompose: need at least " + std::to_string(kMinBandLength) +
                    " samples for 5 decomposition levels");
    }
    auto parts = wavelet_components(x);
    BandSignals out;
    for (std::size_t b = 0; b < 4; ++b) out.bands[b] = std::move(parts[b]);
    return out;
}

// ---------------------------------------------------------------------------
// FFT (FFTW3)

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// Real-to-complex / complex-to-real transform pair of fixed size.
/// Plan creation is serialized; execution on distinct instances is thread safe.
class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        if (n == 0) throw Error("RealFft: size must be positive");
        real_ = fftw_alloc_real(n);
        spec_ = fftw_alloc_complex(n / 2 + 1);
        std::lock_guard lock(fftw_planner_mutex());
        const int ni = static_cast<int>(n);
        forward_ = fftw_plan_dft_r2c_1d(ni, real_, spec_, FFTW_ESTIMATE);
        inverse_ = fftw_plan_dft_c2r_1d(ni, spec_, real_, FFTW_ESTIMATE);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;
    ~RealFft() {
        {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(forward_);
            fftw_destroy_plan(inverse_);
        }
        fftw_free(real_);
        fftw_free(spec_);
    }

    std::size_t size() const { return n_; }
    std::span<double> time() { return {real_, n_}; }
    std::span<std::complex<double>> spectrum() {
        return {reinterpret_cast<std::complex<double>*>(spec_), n_ / 2 + 1};
    }

    void forward() { fftw_execute(forward_); }
    /// Unnormalized inverse (result scaled by n). Overwrites the spectrum buffer.
    void inverse() { fftw_execute(inverse_); }

private:
    std::size_t n_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

// ---------------------------------------------------------------------------
// Welch PSD

struct Spectrum {
    std::vector<double> frequencies;  // Hz, ascending
    std::vector<double> power;        // one-sided density, units^2 / Hz
};

struct WelchConfig {
    std::size_t window_length = 256;
    std::size_t overlap = 128;
};

/// Periodic Hann window.
inline std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
    return w;
}

/// Averaged modified periodogram: per-window mean removal, Hann taper,
/// density scaling 1 / (fs * sum w^2), non-DC / non-Nyquist bins doubled.
inline Spectrum welch_psd(std::span<const double> x, double sample_rate, const WelchConfig& cfg = {}) {
    if (x.empty()) throw Error("welch_psd: empty input");
    if (cfg.window_length == 0) throw Error("welch_psd: window length must be positive");
    if (cfg.window_length > x.size()) {
        throw Error("welch_psd: window of " + std::to_string(cfg.window_length) + " samples exceeds signal length " +
                    std::to_string(x.size()));
    }
    if (cfg.overlap >= cfg.window_length) throw Error("welch_psd: overlap must be smaller than the window");
    if (!(sample_rate > 0.0)) throw Error("welch_psd: sample rate must be positive");

    const std::size_t n = cfg.window_length;
    const std::size_t hop = n - cfg.overlap;
    const std::size_t bins = n / 2 + 1;
    const std::vector<double> window = hann_window(n);
    double window_power = 0.0;
    for (double w : window) window_power += w * w;
    const double scale = 1.0 / (sample_rate * window_power);

    RealFft fft(n);
    std::vector<double> acc(bins, 0.0);
    std::size_t segments = 0;
    for (std::size_t start = 0; start + n <= x.size(); start += hop) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x[start + i];
        mean /= static_cast<double>(n);
        auto buf = fft.time();
        for (std::size_t i = 0; i < n; ++i) buf[i] = (x[start + i] - mean) * window[i];
        fft.forward();
        auto spec = fft.spectrum();
        for (std::size_t k = 0; k < bins; ++k) {
            double p = std::norm(spec[k]) * scale;
            const bool edge = (k == 0) || (n % 2 == 0 && k == n / 2);
            if (!edge) p *= 2.0;
            acc[k] += p;
        }
        ++segments;
    }

    Spectrum s;
    s.frequencies.resize(bins);
    s.power.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        s.frequencies[k] = static_cast<double>(k) * sample_rate / static_cast<double>(n);
        s.power[k] = acc[k] / static_cast<double>(segments);
    }
    return s;
}

/// Mean PSD over bins with low <= f < high.
inline double band_power(const Spectrum& s, BandId band) {
    if (band == BandId::FullBand) throw Error("band_power: FullBand has no band-limited power");
    const BandEdges e = band_edges(band);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < s.frequencies.size(); ++k) {
        if (s.frequencies[k] >= e.low && s.frequencies[k] < e.high) {
            sum += s.power[k];
            ++count;
        }
    }
    if (count == 0) throw Error("band_power: no spectral bins inside band " + std::string(band_symbol(band)));
    return sum / static_cast<double>(count);
}

}  // namespace flowsync
