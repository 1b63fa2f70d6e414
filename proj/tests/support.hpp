#pragma once

// Test-only reference implementations. These are written directly from the
// textbook formulas and deliberately share no code with the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace flowsync::testing {

inline std::vector<double> random_signal(std::mt19937_64& rng, std::size_t n, double scale = 1.0, double offset = 0.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = offset + scale * g(rng);
    return x;
}

inline std::vector<double> sine(std::size_t n, double freq_hz, double fs = 256.0, double amp = 1.0, double phase = 0.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = amp * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / fs + phase);
    }
    return x;
}

inline double rel_err(double got, double want) {
    const double denom = std::max(1.0, std::abs(want));
    return std::abs(got - want) / denom;
}

struct NaiveTime {
    double mean, sd, var, aafod, nfod, energy, power, activity, mobility, hozc, ppm, kurt;
};

inline NaiveTime naive_time_features(const std::vector<double>& s) {
    const double T = static_cast<double>(s.size());
    NaiveTime r{};
    r.mean = std::accumulate(s.begin(), s.end(), 0.0) / T;
    double acc = 0.0;
    for (double v : s) acc += std::pow(v - r.mean, 2);
    r.var = acc / T;
    r.sd = std::sqrt(r.var);
    double d = 0.0;
    for (std::size_t n = 0; n + 1 < s.size(); ++n) d += std::fabs(s[n + 1] - s[n]);
    r.aafod = d / (T - 1.0);
    r.nfod = r.sd > 0 ? r.aafod / r.sd : 0.0;
    r.energy = 0.0;
    for (double v : s) r.energy += std::pow(v, 2);
    r.power = r.energy / T;
    r.activity = std::pow(r.sd, 2);
    std::vector<double> diff;
    for (std::size_t n = 0; n + 1 < s.size(); ++n) diff.push_back(s[n + 1] - s[n]);
    const double dm = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(diff.size());
    double dv = 0.0;
    for (double v : diff) dv += std::pow(v - dm, 2);
    const double sigma_f = std::sqrt(dv / static_cast<double>(diff.size()));
    r.mobility = r.sd > 0 ? sigma_f / r.sd : 0.0;
    std::vector<int> indicator;
    for (double v : s) indicator.push_back(v - r.mean >= 0 ? 1 : 0);
    double h = 0.0;
    for (std::size_t t = 0; t + 1 < indicator.size(); ++t) h += std::pow(indicator[t + 1] - indicator[t], 2);
    r.hozc = h;
    r.ppm = (*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end())) / T;
    double m4 = 0.0;
    for (double v : s) m4 += std::pow(v - r.mean, 4);
    r.kurt = r.sd > 0 ? (m4 / T) / std::pow(r.sd, 4) : 0.0;
    return r;
}

inline double naive_de(const std::vector<double>& s) {
    const double T = static_cast<double>(s.size());
    const double m = std::accumulate(s.begin(), s.end(), 0.0) / T;
    double v = 0.0;
    for (double x : s) v += std::pow(x - m, 2);
    return 0.5 * std::log(2.0 * std::numbers::pi * std::exp(1.0) * v / T);
}

inline double naive_lbp(const std::vector<double>& s) {
    double p = 0.0;
    for (double x : s) p += x * x;
    return std::log(p / static_cast<double>(s.size()));
}

/// Welch PSD with a direct O(n^2) DFT.
inline std::vector<double> naive_welch(const std::vector<double>& x, double fs, std::size_t nw, std::size_t overlap) {
    std::vector<double> w(nw);
    for (std::size_t i = 0; i < nw; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / nw));
    double u = 0.0;
    for (double v : w) u += v * v;
    std::vector<double> out(nw / 2 + 1, 0.0);
    std::size_t count = 0;
    for (std::size_t s = 0; s + nw <= x.size(); s += nw - overlap) {
        double m = 0.0;
        for (std::size_t i = 0; i < nw; ++i) m += x[s + i];
        m /= nw;
        for (std::size_t k = 0; k <= nw / 2; ++k) {
            std::complex<double> acc = 0.0;
            for (std::size_t i = 0; i < nw; ++i) {
                acc += (x[s + i] - m) * w[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * i / nw);
            }
            double p = std::norm(acc) / (fs * u);
            if (k != 0 && k != nw / 2) p *= 2.0;
            out[k] += p;
        }
        ++count;
    }
    for (double& v : out) v /= count;
    return out;
}

inline double naive_band_mean(const std::vector<double>& psd, double fs, std::size_t nw, double lo, double hi) {
    double s = 0.0;
    int c = 0;
    for (std::size_t k = 0; k < psd.size(); ++k) {
        const double f = k * fs / nw;
        if (f >= lo && f < hi) {
            s += psd[k];
            ++c;
        }
    }
    return s / c;
}

/// Full (m+1) x (n+1) DTW table with infinite borders and D[0][0] = 0.
inline double naive_dtw(const std::vector<double>& a, const std::vector<double>& b) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> D(a.size() + 1, std::vector<double>(b.size() + 1, inf));
    D[0][0] = 0.0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            D[i][j] = std::abs(a[i - 1] - b[j - 1]) + std::min(D[i][j - 1], std::min(D[i - 1][j - 1], D[i - 1][j]));
        }
    }
    return D[a.size()][b.size()];
}

inline double naive_pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double c = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        c += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return (c / n) / (std::sqrt(va / n) * std::sqrt(vb / n));
}

inline double energy(const std::vector<double>& x) {
    double e = 0.0;
    for (double v : x) e += v * v;
    return e;
}

}  // namespace flowsync::testing
