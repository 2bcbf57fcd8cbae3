#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "cbkm/detector.hpp"
#include "cbkm/errors.hpp"
#include "cbkm/evaluation.hpp"
#include "cbkm/ground_truth.hpp"
#include "cbkm/waveform.hpp"

namespace cbkm {

namespace rng {

/// splitmix64 mix step; used only to derive independent substream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream_id) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream_id * 0xA24BAED4963EE407ULL + 1));
}

/// Deterministic Gaussian source: std::mt19937_64 (algorithm fixed by the
/// C++ standard) with Box-Muller, pairs cached. Draw order is part of the
/// corpus format: u1 = ((x >> 11) + 1) * 2^-53, u2 = (y >> 11) * 2^-53,
/// z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sqrt(-2 ln u1) sin(2 pi u2).
class Gaussian {
public:
    explicit Gaussian(std::uint64_t seed) : eng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 =
            (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace rng

/// Signal model for one synthetic close operation. Each key moment injects
/// an exponentially decaying sine burst (carrier inside the filter
/// passband) with a short linear attack. Broadband mechanism vibration
/// runs from the latch release to the end of the record; from
/// post_contact_delay_ms after contact a sustained constant-envelope hum
/// (RMS post_contact_std) is added on top, the distribution change a
/// change-point baseline can lock onto. post_contact_std = 0 disables it.
struct CloseOpModel {
    double t1_true_ms = 38.0;
    double t2_true_ms = 60.0;
    double latch_burst_amp = 0.12;
    double contact_burst_amp = 0.12;
    double burst_decay_ms = 2.0;
    double burst_carrier_hz = 5000.0;
    double burst_attack_ms = 0.3;
    double noise_std = 0.02;
    double mech_vibration_std = 0.10;
    double post_contact_std = 0.25;
    double post_contact_tone_hz = 3100.0;
    double post_contact_delay_ms = 8.0;
    double contact_fall_ms = 0.1;
    double fs_hz = 300000.0;
    double duration_ms = 200.0;
    std::uint64_t seed = 0;
};

inline void validate_close_op_model(const CloseOpModel& m) {
    if (!(m.fs_hz > 0.0)) throw ConfigError("synth: fs_hz must be positive");
    if (!(m.duration_ms > 0.0)) throw ConfigError("synth: duration_ms must be positive");
    if (!(0.0 < m.t1_true_ms && m.t1_true_ms < m.t2_true_ms && m.t2_true_ms < m.duration_ms))
        throw ConfigError("synth: need 0 < t1 < t2 < duration");
    if (!(m.burst_decay_ms > 0.0)) throw ConfigError("synth: burst_decay_ms must be positive");
    if (m.noise_std < 0.0 || m.mech_vibration_std < 0.0 || m.post_contact_std < 0.0)
        throw ConfigError("synth: noise levels must be non-negative");
    if (m.latch_burst_amp < 0.0 || m.contact_burst_amp < 0.0)
        throw ConfigError("synth: burst amplitudes must be non-negative");
}

struct GeneratedOp {
    Waveform vibration;
    ContactChannel contact;
    KeyMoments truth; // injected t1/t2, both always present
};

/// Generate one close operation. Pure function of the model (incl. seed).
inline GeneratedOp gen_close_op(const CloseOpModel& m) {
    validate_close_op_model(m);
    const std::size_t n = static_cast<std::size_t>(std::llround(m.duration_ms * m.fs_hz / 1000.0));
    if (n < 2) throw ConfigError("synth: duration too short");

    rng::Gaussian noise(rng::substream_seed(m.seed, 0));
    rng::Gaussian vib(rng::substream_seed(m.seed, 1));

    const double settle_ms = m.t2_true_ms + m.post_contact_delay_ms;
    const auto burst = [&](double since_ms, double amp) {
        if (since_ms < 0.0) return 0.0;
        const double attack =
            m.burst_attack_ms > 0.0 ? std::min(1.0, since_ms / m.burst_attack_ms) : 1.0;
        const double env = attack * std::exp(-since_ms / m.burst_decay_ms);
        return amp * env *
               std::sin(2.0 * std::numbers::pi * m.burst_carrier_hz * since_ms / 1000.0);
    };

    GeneratedOp op;
    op.vibration.samples.resize(n);
    op.vibration.sampling_rate_hz = m.fs_hz;
    op.contact.voltage.resize(n);
    op.contact.sampling_rate_hz = m.fs_hz;
    op.contact.pole = Pole::A;

    const double half_fall = m.contact_fall_ms / 2.0;
    const double hum_amp = m.post_contact_std * std::numbers::sqrt2;
    for (std::size_t k = 0; k < n; ++k) {
        const double t_ms = static_cast<double>(k) * 1000.0 / m.fs_hz;
        double x = m.noise_std * noise.next();
        const double z_vib = vib.next(); // drawn every sample to keep the stream aligned
        if (t_ms >= m.t1_true_ms) x += m.mech_vibration_std * z_vib;
        if (t_ms >= settle_ms && m.post_contact_std > 0.0) {
            x += hum_amp * std::sin(2.0 * std::numbers::pi * m.post_contact_tone_hz *
                                    (t_ms - settle_ms) / 1000.0);
        }
        x += burst(t_ms - m.t1_true_ms, m.latch_burst_amp);
        x += burst(t_ms - m.t2_true_ms, m.contact_burst_amp);
        op.vibration.samples[k] = x;

        double v = 1.0;
        if (t_ms >= m.t2_true_ms + half_fall) {
            v = 0.0;
        } else if (t_ms > m.t2_true_ms - half_fall && m.contact_fall_ms > 0.0) {
            v = (m.t2_true_ms + half_fall - t_ms) / m.contact_fall_ms;
        }
        op.contact.voltage[k] = v;
    }

    op.truth.t1_ms = m.t1_true_ms;
    op.truth.t2_ms = m.t2_true_ms;
    return op;
}

/// Lifetime drift model: three stages (initiation: noisy flat, stationary:
/// stable flat, wearing: rising mean with growing jitter) for the contact
/// moment, plus a whole-life linear growth of the t2 - t1 interval. Stage
/// jitter is one-sided (half-normal): wear and friction only ever delay
/// the close, so the stage mean is the fastest the mechanism gets.
struct DegradationModel {
    std::size_t n_ops = 1000;
    double initiation_fraction = 0.19;
    double stationary_fraction = 0.57;
    double wearing_fraction = 0.24;
    double t2_start_ms = 60.0;
    double t2_end_ms = 72.0;
    double interval_start_ms = 22.0;
    double interval_end_ms = 28.0;
    double jitter_initiation_ms = 0.3;
    double jitter_stationary_ms = 0.1;
    double jitter_wearing_end_ms = 0.5;
    double interval_jitter_ms = 0.05;
    std::uint64_t seed = 0;
};

inline void validate_degradation_model(const DegradationModel& d) {
    if (d.n_ops < 1) throw ConfigError("synth: n_ops must be >= 1");
    const double total = d.initiation_fraction + d.stationary_fraction + d.wearing_fraction;
    if (!(d.initiation_fraction > 0.0 && d.stationary_fraction > 0.0 && d.wearing_fraction > 0.0))
        throw ConfigError("synth: stage fractions must be positive");
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("synth: stage fractions must sum to 1");
    if (!(d.t2_end_ms > d.t2_start_ms))
        throw ConfigError("synth: t2_end_ms must exceed t2_start_ms");
    if (d.jitter_initiation_ms < 0.0 || d.jitter_stationary_ms < 0.0 ||
        d.jitter_wearing_end_ms < 0.0 || d.interval_jitter_ms < 0.0)
        throw ConfigError("synth: jitter values must be non-negative");
}

struct OpTruth {
    std::int64_t op_number = 0;
    Stage stage = Stage::initiation;
    double t1_true_ms = 0.0;
    double t2_true_ms = 0.0;
};

/// Stage boundaries implied by the fractions (end-exclusive op counts).
struct SynthStageSplit {
    std::size_t initiation_end = 0;
    std::size_t stationary_end = 0;
};

inline SynthStageSplit stage_split(const DegradationModel& d) {
    SynthStageSplit s;
    s.initiation_end = static_cast<std::size_t>(
        std::llround(d.initiation_fraction * static_cast<double>(d.n_ops)));
    s.stationary_end = s.initiation_end + static_cast<std::size_t>(std::llround(
                                              d.stationary_fraction * static_cast<double>(d.n_ops)));
    s.initiation_end = std::min(s.initiation_end, d.n_ops);
    s.stationary_end = std::min(std::max(s.stationary_end, s.initiation_end), d.n_ops);
    return s;
}

/// Deterministic stage mean of the contact moment for op i (no jitter).
/// The wearing ramp is quadratic: degradation accelerates toward failure.
inline double t2_stage_mean(const DegradationModel& d, std::size_t i) {
    const auto split = stage_split(d);
    if (i < split.stationary_end) return d.t2_start_ms;
    const std::size_t wear_n = d.n_ops - split.stationary_end;
    if (wear_n <= 1) return d.t2_end_ms;
    const double frac = static_cast<double>(i - split.stationary_end) /
                        static_cast<double>(wear_n - 1);
    return d.t2_start_ms + (d.t2_end_ms - d.t2_start_ms) * frac * frac;
}

inline double t2_jitter_std(const DegradationModel& d, std::size_t i) {
    const auto split = stage_split(d);
    if (i < split.initiation_end) return d.jitter_initiation_ms;
    if (i < split.stationary_end) return d.jitter_stationary_ms;
    const std::size_t wear_n = d.n_ops - split.stationary_end;
    if (wear_n <= 1) return d.jitter_wearing_end_ms;
    const double frac = static_cast<double>(i - split.stationary_end) /
                        static_cast<double>(wear_n - 1);
    return d.jitter_stationary_ms + (d.jitter_wearing_end_ms - d.jitter_stationary_ms) * frac;
}

inline double interval_mean(const DegradationModel& d, std::size_t i) {
    if (d.n_ops <= 1) return d.interval_start_ms;
    const double frac = static_cast<double>(i) / static_cast<double>(d.n_ops - 1);
    return d.interval_start_ms + (d.interval_end_ms - d.interval_start_ms) * frac;
}

/// Injected truths for the whole trajectory; cheap (no waveforms).
inline std::vector<OpTruth> trajectory_truths(const DegradationModel& d) {
    validate_degradation_model(d);
    const auto split = stage_split(d);
    std::vector<OpTruth> out;
    out.reserve(d.n_ops);
    for (std::size_t i = 0; i < d.n_ops; ++i) {
        rng::Gaussian g(rng::substream_seed(d.seed, 0x7000000000000000ULL + i));
        OpTruth t;
        t.op_number = static_cast<std::int64_t>(i);
        t.stage = i < split.initiation_end
                      ? Stage::initiation
                      : (i < split.stationary_end ? Stage::stationary : Stage::wearing);
        t.t2_true_ms = t2_stage_mean(d, i) + t2_jitter_std(d, i) * std::abs(g.next());
        t.t1_true_ms = t.t2_true_ms - (interval_mean(d, i) + d.interval_jitter_ms * g.next());
        out.push_back(t);
    }
    return out;
}

/// Model for op i of a trajectory: template waveform parameters with the
/// drifted truths and a per-op seed substream.
inline CloseOpModel make_op_model(const DegradationModel& d, const CloseOpModel& tmpl,
                                  const OpTruth& truth) {
    CloseOpModel m = tmpl;
    m.t1_true_ms = truth.t1_true_ms;
    m.t2_true_ms = truth.t2_true_ms;
    m.seed = rng::substream_seed(d.seed, 0x3000000000000000ULL +
                                             static_cast<std::uint64_t>(truth.op_number));
    return m;
}

/// Materialize a full trajectory in memory. Intended for small corpora;
/// large runs should generate per op via trajectory_truths + make_op_model.
inline std::vector<GeneratedOp> gen_trajectory(const DegradationModel& d,
                                               const CloseOpModel& tmpl) {
    const auto truths = trajectory_truths(d);
    std::vector<GeneratedOp> ops;
    ops.reserve(truths.size());
    for (const auto& t : truths) ops.push_back(gen_close_op(make_op_model(d, tmpl, t)));
    return ops;
}

} // namespace cbkm
