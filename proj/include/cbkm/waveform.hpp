#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cbkm/errors.hpp"

namespace cbkm {

/// Uniformly sampled amplitude series. Unit-agnostic (volts or g).
/// t0_offset_ms locates sample 0 relative to the close-coil trigger.
struct Waveform {
    std::vector<double> samples;
    double sampling_rate_hz = 0.0;
    double t0_offset_ms = 0.0;

    std::size_t size() const { return samples.size(); }
    double duration_ms() const {
        return static_cast<double>(samples.size()) * 1000.0 / sampling_rate_hz;
    }
    /// Absolute time of sample `idx` in milliseconds from the trigger.
    double time_ms(std::size_t idx) const {
        return t0_offset_ms + static_cast<double>(idx) * 1000.0 / sampling_rate_hz;
    }
    /// Nearest sample index for an absolute time in milliseconds.
    std::ptrdiff_t index_at_ms(double ms) const {
        return static_cast<std::ptrdiff_t>(
            std::llround((ms - t0_offset_ms) * sampling_rate_hz / 1000.0));
    }
};

/// Short-time energy envelope. Same length as the source waveform
/// (zero-padded convolution), every value non-negative.
struct SteSeries {
    std::vector<double> values;
    double sampling_rate_hz = 0.0;
    std::size_t window_length_samples = 0;
    double t0_offset_ms = 0.0;

    std::size_t size() const { return values.size(); }
    std::ptrdiff_t index_at_ms(double ms) const {
        return static_cast<std::ptrdiff_t>(
            std::llround((ms - t0_offset_ms) * sampling_rate_hz / 1000.0));
    }
};

inline void validate_waveform(const Waveform& w, const std::string& what = "waveform") {
    if (w.samples.size() < 2)
        throw DataError(what + ": need at least 2 samples, got " +
                        std::to_string(w.samples.size()));
    if (!(w.sampling_rate_hz > 0.0))
        throw DataError(what + ": sampling rate must be positive");
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        if (!std::isfinite(w.samples[i]))
            throw DataError(what + ": non-finite sample at index " + std::to_string(i));
    }
}

} // namespace cbkm
