#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "cbkm/errors.hpp"
#include "cbkm/waveform.hpp"

namespace cbkm {

/// Total signal energy: sum of squared samples.
inline double signal_energy(const Waveform& w) {
    if (w.samples.empty()) throw DataError("signal_energy: empty waveform");
    double e = 0.0;
    for (double x : w.samples) e += x * x;
    return e;
}

/// Raised-cosine taper h(n) = 0.54 - 0.46 cos(2 pi n / (W-1)), 0 <= n < W.
inline std::vector<double> hamming_window(std::size_t window_length) {
    if (window_length < 2)
        throw ConfigError("hamming_window: length must be >= 2, got " +
                          std::to_string(window_length));
    std::vector<double> h(window_length);
    const double denom = static_cast<double>(window_length - 1);
    for (std::size_t n = 0; n < window_length; ++n) {
        h[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
    }
    return h;
}

namespace detail {

// Iterative radix-2 FFT, in place. Size must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv_n;
    }
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Linear convolution via FFT; returns full length (na + nb - 1).
inline std::vector<double> fft_convolve(const std::vector<double>& a,
                                        const std::vector<double>& b) {
    const std::size_t full = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(full);
    std::vector<std::complex<double>> fa(n), fb(n);
    for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
    for (std::size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
    fft_radix2(fa, false);
    fft_radix2(fb, false);
    for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
    fft_radix2(fa, true);
    std::vector<double> out(full);
    for (std::size_t i = 0; i < full; ++i) out[i] = fa[i].real();
    return out;
}

} // namespace detail

/// Short-time energy envelope: convolution of the squared signal with the
/// squared Hamming window, zero-padded to the input length. Output index n
/// corresponds to the window centered on n (same-mode alignment with center
/// shift floor((W-1)/2)). Computed with an FFT; negative round-off is
/// clamped to zero so values stay non-negative.
inline SteSeries short_time_energy(const Waveform& w, std::size_t window_length) {
    validate_waveform(w, "short_time_energy");
    if (window_length < 2)
        throw ConfigError("short_time_energy: window length must be >= 2");
    if (window_length > w.samples.size())
        throw ConfigError("short_time_energy: window length " + std::to_string(window_length) +
                          " exceeds signal length " + std::to_string(w.samples.size()));

    std::vector<double> x2(w.samples.size());
    for (std::size_t i = 0; i < x2.size(); ++i) x2[i] = w.samples[i] * w.samples[i];
    std::vector<double> h2 = hamming_window(window_length);
    for (auto& v : h2) v *= v;

    std::vector<double> full = detail::fft_convolve(x2, h2);
    const std::size_t offset = (window_length - 1) / 2;

    SteSeries ste;
    ste.values.resize(w.samples.size());
    for (std::size_t n = 0; n < ste.values.size(); ++n) {
        ste.values[n] = std::max(0.0, full[n + offset]);
    }
    ste.sampling_rate_hz = w.sampling_rate_hz;
    ste.window_length_samples = window_length;
    ste.t0_offset_ms = w.t0_offset_ms;
    return ste;
}

} // namespace cbkm
