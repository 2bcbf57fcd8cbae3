#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "cbkm/errors.hpp"

namespace cbkm {

enum class ChangePointMethod { binseg, window, bottomup };

inline const char* to_string(ChangePointMethod m) {
    switch (m) {
        case ChangePointMethod::binseg: return "binseg";
        case ChangePointMethod::window: return "window";
        case ChangePointMethod::bottomup: return "bottomup";
    }
    return "unknown";
}

/// Single change point. `split_index` is the boundary in sample space:
/// the left segment ends at (excludes) split_index. `no_signal` marks a
/// flat input where the split carries no information (tie-break only).
struct ChangePointResult {
    double t_cp_ms = 0.0;
    double cost_at_split = 0.0;
    ChangePointMethod method = ChangePointMethod::binseg;
    std::size_t split_index = 0;
    bool no_signal = false;
};

/// Prefix sums of a series and its squares; segment costs in O(1).
class CostL2Cache {
public:
    explicit CostL2Cache(const std::vector<double>& series) {
        prefix_sum_.resize(series.size() + 1, 0.0);
        prefix_sq_.resize(series.size() + 1, 0.0);
        for (std::size_t i = 0; i < series.size(); ++i) {
            prefix_sum_[i + 1] = prefix_sum_[i] + series[i];
            prefix_sq_[i + 1] = prefix_sq_[i] + series[i] * series[i];
        }
    }

    std::size_t size() const { return prefix_sum_.size() - 1; }

    /// Deviation cost of segment [a, b): squared deviations from the
    /// segment mean, summed over the segment without its first sample
    /// (the mean itself is over the whole segment).
    double cost(std::size_t a, std::size_t b) const {
        if (!(a < b) || b > size())
            throw ConfigError("cost_l2: invalid segment [" + std::to_string(a) + ", " +
                              std::to_string(b) + ")");
        const double m = static_cast<double>(b - a);
        const double mean = (prefix_sum_[b] - prefix_sum_[a]) / m;
        const double tail_sum = prefix_sum_[b] - prefix_sum_[a + 1];
        const double tail_sq = prefix_sq_[b] - prefix_sq_[a + 1];
        const double cost = tail_sq - 2.0 * mean * tail_sum + (m - 1.0) * mean * mean;
        return std::max(0.0, cost);
    }

private:
    std::vector<double> prefix_sum_;
    std::vector<double> prefix_sq_;
};

/// Deviation cost of series[a, b), O(1) after building prefix sums.
inline double cost_l2(const std::vector<double>& series, std::size_t a, std::size_t b) {
    return CostL2Cache(series).cost(a, b);
}

namespace detail {

inline void validate_range(const std::vector<double>& series, std::size_t lo, std::size_t hi,
                           const char* who) {
    if (!(lo < hi) || hi > series.size())
        throw ConfigError(std::string(who) + ": invalid range [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + ") for series of length " +
                          std::to_string(series.size()));
}

inline double index_to_ms(std::size_t idx, double fs_hz, double t0_offset_ms) {
    return t0_offset_ms + static_cast<double>(idx) * 1000.0 / fs_hz;
}

} // namespace detail

/// Single change point minimizing summed left/right deviation costs over
/// all splits strictly inside [lo, hi). Ties go to the smallest index.
inline ChangePointResult binseg_single(const std::vector<double>& series, double fs_hz,
                                       std::size_t lo, std::size_t hi,
                                       double t0_offset_ms = 0.0) {
    detail::validate_range(series, lo, hi, "binseg_single");
    if (hi - lo < 3) throw ConfigError("binseg_single: range too narrow for a split");

    CostL2Cache cache(series);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_t = lo + 1;
    for (std::size_t t = lo + 1; t + 1 < hi; ++t) {
        const double total = cache.cost(lo, t) + cache.cost(t, hi);
        if (total < best) {
            best = total;
            best_t = t;
        }
    }

    ChangePointResult r;
    r.method = ChangePointMethod::binseg;
    r.split_index = best_t;
    r.cost_at_split = best;
    r.t_cp_ms = detail::index_to_ms(best_t, fs_hz, t0_offset_ms);
    const double whole = cache.cost(lo, hi);
    r.no_signal = (whole - best) <= 1e-12 * std::max(whole, 1.0);
    return r;
}

/// Change point by sliding-window discrepancy: the split maximizing the
/// cost drop between the joined window and its two halves.
inline ChangePointResult window_single(const std::vector<double>& series, double fs_hz,
                                       std::size_t lo, std::size_t hi, std::size_t half_width,
                                       double t0_offset_ms = 0.0) {
    detail::validate_range(series, lo, hi, "window_single");
    if (half_width < 1) throw ConfigError("window_single: half_width must be >= 1");
    if (hi - lo < 2 * half_width)
        throw ConfigError("window_single: range too narrow for two half-width windows");

    CostL2Cache cache(series);
    double best_gain = -std::numeric_limits<double>::infinity();
    std::size_t best_t = lo + half_width;
    double max_abs_gain = 0.0;
    for (std::size_t t = lo + half_width; t + half_width <= hi; ++t) {
        const double gain = cache.cost(t - half_width, t + half_width) -
                            cache.cost(t - half_width, t) - cache.cost(t, t + half_width);
        if (gain > best_gain) {
            best_gain = gain;
            best_t = t;
        }
        max_abs_gain = std::max(max_abs_gain, std::abs(gain));
    }

    ChangePointResult r;
    r.method = ChangePointMethod::window;
    r.split_index = best_t;
    r.cost_at_split = best_gain;
    r.t_cp_ms = detail::index_to_ms(best_t, fs_hz, t0_offset_ms);
    r.no_signal = max_abs_gain <= 1e-12 * std::max(1.0, cache.cost(lo, hi));
    return r;
}

/// Change point by bottom-up merging: boundaries seeded every grid_step
/// samples; the boundary whose removal costs least is merged away until a
/// single one survives. Removal ties go to the smallest index.
inline ChangePointResult bottomup_single(const std::vector<double>& series, double fs_hz,
                                         std::size_t lo, std::size_t hi, std::size_t grid_step,
                                         double t0_offset_ms = 0.0) {
    detail::validate_range(series, lo, hi, "bottomup_single");
    if (grid_step < 1) throw ConfigError("bottomup_single: grid_step must be >= 1");

    std::vector<std::size_t> bounds;
    bounds.push_back(lo);
    for (std::size_t b = lo + grid_step; b < hi; b += grid_step) bounds.push_back(b);
    bounds.push_back(hi);
    if (bounds.size() < 4)
        throw ConfigError("bottomup_single: range too narrow for the boundary grid");

    CostL2Cache cache(series);
    double last_delta = 0.0;
    while (bounds.size() > 3) {
        double best_delta = std::numeric_limits<double>::infinity();
        std::size_t best_i = 1;
        for (std::size_t i = 1; i + 1 < bounds.size(); ++i) {
            const double merged = cache.cost(bounds[i - 1], bounds[i + 1]);
            const double delta =
                merged - cache.cost(bounds[i - 1], bounds[i]) - cache.cost(bounds[i], bounds[i + 1]);
            if (delta < best_delta) {
                best_delta = delta;
                best_i = i;
            }
        }
        last_delta = best_delta;
        bounds.erase(bounds.begin() + static_cast<std::ptrdiff_t>(best_i));
    }

    const std::size_t survivor = bounds[1];
    ChangePointResult r;
    r.method = ChangePointMethod::bottomup;
    r.split_index = survivor;
    r.cost_at_split = cache.cost(lo, survivor) + cache.cost(survivor, hi);
    r.t_cp_ms = detail::index_to_ms(survivor, fs_hz, t0_offset_ms);
    const double whole = cache.cost(lo, hi);
    const double merge_delta = whole - r.cost_at_split;
    r.no_signal = std::abs(merge_delta) <= 1e-12 * std::max(whole, 1.0) &&
                  std::abs(last_delta) <= 1e-12 * std::max(whole, 1.0);
    return r;
}

} // namespace cbkm
