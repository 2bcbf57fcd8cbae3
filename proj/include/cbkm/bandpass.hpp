#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "cbkm/errors.hpp"
#include "cbkm/waveform.hpp"

namespace cbkm {

/// Band-pass design parameters. `order` is the overall band-pass order
/// (pole count), always even; the underlying low-pass prototype has
/// order/2 poles. `zero_phase` applies the filter forward then backward.
struct BandPassSpec {
    double low_cutoff_hz = 0.5;
    double high_cutoff_hz = 14000.0;
    int order = 4;
    bool zero_phase = true;
};

/// One second-order section, a0 normalized to 1.
struct BiquadSection {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

namespace detail {

inline void validate_bandpass_spec(const BandPassSpec& spec, double fs_hz) {
    if (spec.order < 2 || spec.order % 2 != 0)
        throw ConfigError("band_pass: order must be a positive even integer, got " +
                          std::to_string(spec.order));
    if (!(spec.low_cutoff_hz > 0.0) || !(spec.low_cutoff_hz < spec.high_cutoff_hz))
        throw ConfigError("band_pass: need 0 < low cutoff < high cutoff");
    if (!(spec.high_cutoff_hz < fs_hz / 2.0))
        throw ConfigError("band_pass: high cutoff " + std::to_string(spec.high_cutoff_hz) +
                          " Hz must be below Nyquist " + std::to_string(fs_hz / 2.0) + " Hz");
}

} // namespace detail

/// Butterworth band-pass as cascaded biquads: analog low-pass prototype,
/// low-pass-to-band-pass transform, bilinear transform with cutoff
/// prewarping. Each section carries one zero at z=+1 and one at z=-1;
/// the overall gain is distributed evenly across sections. Sections are
/// ordered by pole radius, the near-unit-circle (DC-blocking) pair last.
inline std::vector<BiquadSection> design_butterworth_bandpass(const BandPassSpec& spec,
                                                              double fs_hz) {
    using cd = std::complex<double>;
    detail::validate_bandpass_spec(spec, fs_hz);

    const int n_proto = spec.order / 2;
    const double c = 2.0 * fs_hz;
    const double w1 = c * std::tan(std::numbers::pi * spec.low_cutoff_hz / fs_hz);
    const double w2 = c * std::tan(std::numbers::pi * spec.high_cutoff_hz / fs_hz);
    const double w0 = std::sqrt(w1 * w2);
    const double bw = w2 - w1;

    // Analog band-pass poles: each prototype pole p yields the two roots of
    // s^2 - (p*bw)*s + w0^2 = 0.
    std::vector<cd> analog_poles;
    analog_poles.reserve(static_cast<std::size_t>(spec.order));
    for (int k = 1; k <= n_proto; ++k) {
        const double theta =
            std::numbers::pi * (2.0 * k + n_proto - 1.0) / (2.0 * n_proto);
        const cd p(std::cos(theta), std::sin(theta));
        const cd pb = p * bw;
        const cd disc = std::sqrt(pb * pb - 4.0 * w0 * w0);
        analog_poles.push_back((pb + disc) / 2.0);
        analog_poles.push_back((pb - disc) / 2.0);
    }

    // Bilinear transform. Analog zeros are n_proto at s=0 (-> z=+1) plus
    // n_proto at infinity (-> z=-1); gain k_a = bw^n_proto.
    std::vector<cd> digital_poles;
    digital_poles.reserve(analog_poles.size());
    cd denom_prod(1.0, 0.0);
    for (const cd& s : analog_poles) {
        digital_poles.push_back((c + s) / (c - s));
        denom_prod *= (c - s);
    }
    cd num_prod = std::pow(cd(c, 0.0), n_proto);
    const double k_a = std::pow(bw, n_proto);
    const double k_d = k_a * (num_prod / denom_prod).real();

    // Pair poles into conjugate (or real-real) pairs.
    std::vector<cd> pool = digital_poles;
    std::vector<std::pair<cd, cd>> pairs;
    while (!pool.empty()) {
        cd p = pool.back();
        pool.pop_back();
        if (std::abs(p.imag()) > 1e-14 * std::abs(p)) {
            auto it = std::min_element(pool.begin(), pool.end(), [&](const cd& a, const cd& b) {
                return std::abs(a - std::conj(p)) < std::abs(b - std::conj(p));
            });
            pairs.emplace_back(p, *it);
            pool.erase(it);
        } else {
            // Real pole: pair with the nearest remaining real pole.
            auto it = std::min_element(pool.begin(), pool.end(), [&](const cd& a, const cd& b) {
                return std::abs(a.imag()) + std::abs(a - p) < std::abs(b.imag()) + std::abs(b - p);
            });
            pairs.emplace_back(p, *it);
            pool.erase(it);
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        return std::abs(a.first) < std::abs(b.first);
    });

    const double g = std::pow(std::abs(k_d), 1.0 / n_proto);
    const double sign = k_d < 0.0 ? -1.0 : 1.0;

    std::vector<BiquadSection> sos;
    sos.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const cd& p1 = pairs[i].first;
        const cd& p2 = pairs[i].second;
        BiquadSection s;
        const double gi = (i == 0) ? g * sign : g;
        s.b0 = gi;
        s.b1 = 0.0;
        s.b2 = -gi; // zeros at z = +1 and z = -1
        s.a1 = -(p1 + p2).real();
        s.a2 = (p1 * p2).real();
        sos.push_back(s);
    }
    return sos;
}

/// Complex frequency response of a biquad cascade at frequency f_hz.
inline std::complex<double> frequency_response(const std::vector<BiquadSection>& sos,
                                               double f_hz, double fs_hz) {
    using cd = std::complex<double>;
    const double w = 2.0 * std::numbers::pi * f_hz / fs_hz;
    const cd z1 = std::exp(cd(0.0, -w));
    const cd z2 = z1 * z1;
    cd h(1.0, 0.0);
    for (const auto& s : sos) {
        h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    }
    return h;
}

namespace detail {

// Steady-state transposed-DF2 state for a constant input of 1, per section,
// with the constant propagated through upstream section DC gains.
inline std::vector<std::array<double, 2>> steady_state_zi(const std::vector<BiquadSection>& sos) {
    std::vector<std::array<double, 2>> zi(sos.size());
    double dc_in = 1.0;
    for (std::size_t i = 0; i < sos.size(); ++i) {
        const auto& s = sos[i];
        const double h1 = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        const double s1 = (s.b2 - s.a2 * h1) * dc_in;
        const double s0 = (s.b1 - s.a1 * h1) * dc_in + s1;
        zi[i] = {s0, s1};
        dc_in *= h1;
    }
    return zi;
}

// Cascade filter, transposed direct form II. The state is seeded with
// steady_state_zi scaled by the input mean, i.e. as if the signal had sat
// at its mean level forever: a band-pass rejects that level exactly, and
// any other conditioning level rings through the near-unit-circle
// DC-blocker poles for far longer than a record.
inline void sosfilt_conditioned(const std::vector<BiquadSection>& sos, std::vector<double>& x) {
    auto zi = steady_state_zi(sos);
    double level = 0.0;
    for (double v : x) level += v;
    if (!x.empty()) level /= static_cast<double>(x.size());
    for (auto& z : zi) {
        z[0] *= level;
        z[1] *= level;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        double v = x[i];
        for (std::size_t k = 0; k < sos.size(); ++k) {
            const auto& s = sos[k];
            const double y = s.b0 * v + zi[k][0];
            zi[k][0] = s.b1 * v - s.a1 * y + zi[k][1];
            zi[k][1] = s.b2 * v - s.a2 * y;
            v = y;
        }
        x[i] = v;
    }
}

} // namespace detail

/// Apply a designed biquad cascade. With zero_phase the signal is extended
/// on both ends by odd reflection (pad length 3 * order * sections, capped
/// at length-1) and run through the cascade twice, once forward-backward
/// and once backward-forward; the two results are averaged and the padding
/// stripped. Averaging both orders makes the operator symmetric under time
/// reversal (the reversal identity holds to the last bit), with the same
/// squared-magnitude zero-phase response. Each pass seeds the filter state
/// with the steady-state response to the padded signal's mean. Single-pass
/// mode uses the same state seeding without padding.
inline std::vector<double> apply_bandpass(const std::vector<BiquadSection>& sos,
                                          const std::vector<double>& x, bool zero_phase) {
    if (x.empty()) return {};
    if (!zero_phase) {
        std::vector<double> y = x;
        detail::sosfilt_conditioned(sos, y);
        return y;
    }

    const std::size_t n = x.size();
    const std::size_t pad = std::min(3 * (2 * sos.size()) * sos.size(), n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x.front() - x[pad - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x.back() - x[n - 2 - i]);

    std::vector<double> fb = ext; // forward, then backward
    detail::sosfilt_conditioned(sos, fb);
    std::reverse(fb.begin(), fb.end());
    detail::sosfilt_conditioned(sos, fb);
    std::reverse(fb.begin(), fb.end());

    std::vector<double> bf = ext; // backward, then forward
    std::reverse(bf.begin(), bf.end());
    detail::sosfilt_conditioned(sos, bf);
    std::reverse(bf.begin(), bf.end());
    detail::sosfilt_conditioned(sos, bf);

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.5 * (fb[pad + i] + bf[pad + i]);
    return out;
}

/// Band-pass a waveform. Length, sampling rate and time origin are preserved.
inline Waveform band_pass(const Waveform& w, const BandPassSpec& spec) {
    validate_waveform(w, "band_pass");
    const auto sos = design_butterworth_bandpass(spec, w.sampling_rate_hz);
    Waveform out;
    out.samples = apply_bandpass(sos, w.samples, spec.zero_phase);
    out.sampling_rate_hz = w.sampling_rate_hz;
    out.t0_offset_ms = w.t0_offset_ms;
    return out;
}

} // namespace cbkm
