#pragma once

// Brute-force reference implementations. These are deliberately written
// without prefix sums, FFTs or incremental state so they can check the
// optimized paths; keep them independent of the main headers' internals.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "cbkm/changepoint.hpp"
#include "cbkm/detector.hpp"
#include "cbkm/ste.hpp"
#include "cbkm/waveform.hpp"

namespace cbkm::oracle {

/// Direct O(T*W) short-time energy: for each output index, sum the squared
/// signal against the squared window with the same center alignment as the
/// optimized path.
inline std::vector<double> ste_direct(const std::vector<double>& samples,
                                      std::size_t window_length) {
    const std::vector<double> h = hamming_window(window_length);
    const std::size_t T = samples.size();
    const std::size_t offset = (window_length - 1) / 2;
    std::vector<double> out(T, 0.0);
    for (std::size_t n = 0; n < T; ++n) {
        const std::size_t m = n + offset; // index in the full convolution
        double acc = 0.0;
        for (std::size_t j = 0; j < window_length; ++j) {
            if (m < j) continue;
            const std::size_t t = m - j;
            if (t >= T) continue;
            const double hw = h[j] * h[j];
            acc += samples[t] * samples[t] * hw;
        }
        out[n] = acc;
    }
    return out;
}

/// Two-pass segment cost over series[a, b): mean over the whole segment,
/// squared deviations summed over the segment without its first sample.
inline double cost_l2_naive(const std::vector<double>& series, std::size_t a, std::size_t b) {
    double mean = 0.0;
    for (std::size_t i = a; i < b; ++i) mean += series[i];
    mean /= static_cast<double>(b - a);
    double cost = 0.0;
    for (std::size_t i = a + 1; i < b; ++i) cost += (series[i] - mean) * (series[i] - mean);
    return cost;
}

/// Exhaustive single split: evaluate every admissible split with the naive
/// cost and keep the smallest total (ties to the smallest index).
inline std::size_t binseg_exhaustive(const std::vector<double>& series, std::size_t lo,
                                     std::size_t hi) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_t = lo + 1;
    for (std::size_t t = lo + 1; t + 1 < hi; ++t) {
        const double total = cost_l2_naive(series, lo, t) + cost_l2_naive(series, t, hi);
        if (total < best) {
            best = total;
            best_t = t;
        }
    }
    return best_t;
}

/// Exhaustive sliding-window discrepancy argmax (naive costs).
inline std::size_t window_exhaustive(const std::vector<double>& series, std::size_t lo,
                                     std::size_t hi, std::size_t half_width) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_t = lo + half_width;
    for (std::size_t t = lo + half_width; t + half_width <= hi; ++t) {
        const double gain = cost_l2_naive(series, t - half_width, t + half_width) -
                            cost_l2_naive(series, t - half_width, t) -
                            cost_l2_naive(series, t, t + half_width);
        if (gain > best) {
            best = gain;
            best_t = t;
        }
    }
    return best_t;
}

/// Moving-threshold replay recomputing the baseline mean and population
/// standard deviation from scratch at every step. Returns the detected
/// index within the cropped series, or nullopt.
inline std::optional<std::size_t> detect_replay(const std::vector<double>& cropped,
                                                std::size_t t0, std::size_t L,
                                                double threshold_multiplier, double sigma_floor,
                                                bool reset_run_on_below = true) {
    const auto stats_over = [&](std::size_t count, double& mean, double& sigma) {
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            sum += cropped[i];
            sum_sq += cropped[i] * cropped[i];
        }
        mean = sum / static_cast<double>(count);
        sigma = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(count) - mean * mean));
    };

    double mean = 0.0, sigma = 0.0;
    std::size_t base_end = t0;
    stats_over(base_end, mean, sigma);

    std::size_t run = 0;
    for (std::size_t t = t0; t < cropped.size(); ++t) {
        if (std::abs(cropped[t] - mean) >= threshold_multiplier * std::max(sigma, sigma_floor)) {
            ++run;
        } else {
            base_end = t;
            stats_over(base_end, mean, sigma);
            if (reset_run_on_below) run = 0;
        }
        if (run > L) return t - run;
    }
    return std::nullopt;
}

/// The sigma floor the detector derives when none is configured.
inline double default_sigma_floor(const std::vector<double>& cropped) {
    double peak = 0.0;
    for (double v : cropped) peak = std::max(peak, std::abs(v));
    return std::max(1e-12 * peak, std::numeric_limits<double>::min());
}

} // namespace cbkm::oracle
