#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cbkm/errors.hpp"

namespace cbkm {

enum class Pole { A, B, C };

inline const char* to_string(Pole p) {
    switch (p) {
        case Pole::A: return "A";
        case Pole::B: return "B";
        case Pole::C: return "C";
    }
    return "?";
}

inline Pole pole_from_string(const std::string& s) {
    if (s == "A" || s == "a") return Pole::A;
    if (s == "B" || s == "b") return Pole::B;
    if (s == "C" || s == "c") return Pole::C;
    throw ConfigError("unknown pole '" + s + "', expected A, B or C");
}

/// Contact-separation voltage channel, sharing the vibration clock.
struct ContactChannel {
    Pole pole = Pole::A;
    std::vector<double> voltage;
    double sampling_rate_hz = 0.0;
    double t0_offset_ms = 0.0;
};

/// Closing time from one pole; absent when the channel never drops.
struct ClosingTime {
    std::optional<double> t_c_ms;
    Pole pole = Pole::A;
};

/// Closing time: the channel is normalized by the mean of its initial
/// plateau (open-position level -> 1) and the first sample below
/// drop_fraction wins. Contact bounce after the first crossing is ignored.
inline ClosingTime extract_closing_time(const ContactChannel& ch, double drop_fraction = 0.5,
                                        double plateau_ms = 10.0) {
    if (ch.voltage.empty()) throw DataError("extract_closing_time: empty channel");
    if (!(ch.sampling_rate_hz > 0.0))
        throw DataError("extract_closing_time: sampling rate must be positive");
    if (!(drop_fraction > 0.0 && drop_fraction < 1.0))
        throw ConfigError("extract_closing_time: drop_fraction must lie in (0, 1)");
    if (!(plateau_ms > 0.0))
        throw ConfigError("extract_closing_time: plateau_ms must be positive");

    const double fs = ch.sampling_rate_hz;
    const std::size_t min_plateau =
        static_cast<std::size_t>(std::llround(1.0 * fs / 1000.0));
    std::size_t plateau_n =
        static_cast<std::size_t>(std::llround(plateau_ms * fs / 1000.0));
    plateau_n = std::min(plateau_n, ch.voltage.size());
    if (plateau_n < std::max<std::size_t>(min_plateau, 1))
        throw DataError("extract_closing_time: no initial plateau of at least 1 ms");

    double plateau_sum = 0.0;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < ch.voltage.size(); ++i) {
        if (!std::isfinite(ch.voltage[i]))
            throw DataError("extract_closing_time: non-finite sample at index " +
                            std::to_string(i));
        max_abs = std::max(max_abs, std::abs(ch.voltage[i]));
        if (i < plateau_n) plateau_sum += ch.voltage[i];
    }
    const double plateau_mean = plateau_sum / static_cast<double>(plateau_n);
    if (max_abs == 0.0 || std::abs(plateau_mean) < 1e-9 * max_abs)
        throw DataError("extract_closing_time: open-position plateau level is ~0 "
                        "(dead channel or breaker already closed)");

    ClosingTime result;
    result.pole = ch.pole;
    for (std::size_t i = 0; i < ch.voltage.size(); ++i) {
        if (ch.voltage[i] / plateau_mean < drop_fraction) {
            result.t_c_ms = ch.t0_offset_ms + static_cast<double>(i) * 1000.0 / fs;
            break;
        }
    }
    return result;
}

} // namespace cbkm
