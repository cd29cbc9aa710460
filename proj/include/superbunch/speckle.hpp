#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "superbunch/errors.hpp"
#include "superbunch/parallel.hpp"
#include "superbunch/random.hpp"
#include "superbunch/types.hpp"

// Classical stochastic picture: every rotating stage multiplies the light
// intensity by an independent unit-mean speckle intensity |E_j(t)|^2.
//
// Field model. E(t) = M^{-1/2} sum_m exp(i(dw_m t + phi_m)) with M discrete
// modes. Frequencies are stratified across the band: mode m is uniform in
// its own slice [-bw/2 + m bw/M, -bw/2 + (m+1) bw/M), so the set is
// marginally uniform over the band but its first-order correlation tracks
// sinc(bw tau / 2) far more closely than M i.i.d. draws would.
//
// Finite-M bias: the time average of |E|^4 is 2 - 1/M, so a single stage
// has g2(0) = 2 - 1/M and an N-stage cascade (2 - 1/M)^N.

namespace superbunch::speckle {

namespace detail {
using superbunch::detail::require;
}

inline constexpr std::uint64_t kFieldStream = 0x4649454c44ULL;
inline constexpr std::uint64_t kCompoundStream = 0x434f4d50ULL;
inline constexpr std::uint64_t kModulatorStream = 0x4d4f44ULL;
inline constexpr std::uint64_t kBootstrapStream = 0x424f4f54ULL;

inline constexpr std::size_t kDefaultModes = 256;

/// Sampled intensity I(t_k), t_k = k dt.
struct IntensityTrace {
    double dt = 0.0;
    std::vector<double> samples;
    double mean = 0.0;                   ///< cached arithmetic mean of samples
    double coherence_time = 0.0;         ///< longest stage coherence time, 0 when unknown/constant

    double duration() const { return dt * static_cast<double>(samples.size()); }
};

inline double arithmetic_mean(const std::vector<double>& xs)
{
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return xs.empty() ? 0.0 : s.value() / static_cast<double>(xs.size());
}

inline IntensityTrace make_trace(double dt, std::vector<double> samples, double coherence_time = 0.0)
{
    detail::require(dt > 0.0, "IntensityTrace: dt must be positive");
    for (double x : samples) detail::require(x >= 0.0 && std::isfinite(x), "IntensityTrace: samples must be finite and >= 0");
    IntensityTrace t;
    t.dt = dt;
    t.samples = std::move(samples);
    t.mean = arithmetic_mean(t.samples);
    t.coherence_time = coherence_time;
    return t;
}

/// Baseband complex field on a uniform time grid.
struct FieldTrace {
    double dt = 0.0;
    std::vector<std::complex<double>> samples;
};

namespace detail {

using superbunch::detail::require;

inline std::size_t sample_count(double duration, double dt)
{
    require(dt > 0.0 && duration > 0.0, "duration and dt must be positive");
    return static_cast<std::size_t>(std::llround(duration / dt));
}

inline void check_synthesis(double bandwidth, double duration, double dt, std::size_t modes)
{
    if (!(bandwidth > 0.0)) throw ContractViolation("bandwidth must be positive");
    const double tau_c = 2.0 * std::numbers::pi / bandwidth;
    if (!(dt < std::numbers::pi / bandwidth))
        throw ContractViolation("dt must be below pi/bandwidth (" + std::to_string(std::numbers::pi / bandwidth) + " s)");
    if (!(duration >= 100.0 * tau_c))
        throw ContractViolation("duration must be at least 100 coherence times (" + std::to_string(100.0 * tau_c) + " s)");
    if (modes < 1) throw ContractViolation("modes must be >= 1");
}

struct ModeSet {
    std::vector<double> frequency;
    std::vector<double> phase;
};

inline ModeSet draw_modes(double bandwidth, std::size_t modes, std::uint64_t seed)
{
    auto eng = make_stream(seed, kFieldStream);
    ModeSet set;
    set.frequency.resize(modes);
    set.phase.resize(modes);
    const double slice = bandwidth / static_cast<double>(modes);
    for (std::size_t m = 0; m < modes; ++m) {
        set.frequency[m] = -0.5 * bandwidth + (static_cast<double>(m) + uniform01(eng)) * slice;
        set.phase[m] = uniform(eng, 0.0, 2.0 * std::numbers::pi);
    }
    return set;
}

// Evaluates the field on samples [begin, end) by phasor recurrence,
// re-anchored exactly at `begin`. Calls sink(k, re, im) per sample.
template <class Sink>
void evaluate_field(const ModeSet& modes, double dt, std::size_t begin, std::size_t end, Sink&& sink)
{
    const std::size_t m = modes.frequency.size();
    std::vector<double> re(m), im(m), wr(m), wi(m);
    const double t0 = static_cast<double>(begin) * dt;
    for (std::size_t j = 0; j < m; ++j) {
        const double ph = modes.frequency[j] * t0 + modes.phase[j];
        re[j] = std::cos(ph);
        im[j] = std::sin(ph);
        wr[j] = std::cos(modes.frequency[j] * dt);
        wi[j] = std::sin(modes.frequency[j] * dt);
    }
    const double norm = 1.0 / std::sqrt(static_cast<double>(m));
    for (std::size_t k = begin; k < end; ++k) {
        double sr = 0.0;
        double si = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            sr += re[j];
            si += im[j];
            const double nr = re[j] * wr[j] - im[j] * wi[j];
            const double ni = re[j] * wi[j] + im[j] * wr[j];
            re[j] = nr;
            im[j] = ni;
        }
        sink(k, sr * norm, si * norm);
    }
}

inline constexpr std::size_t kSynthesisChunk = 4096;

// Multiplies target[k] by |E(t_k)|^2 for one stage.
inline void multiply_stage_intensity(std::vector<double>& target, double dt, const ModeSet& modes, unsigned workers)
{
    const ChunkPlan plan{target.size(), kSynthesisChunk};
    for_each_chunk(plan.count(), workers, [&](std::size_t c) {
        evaluate_field(modes, dt, plan.begin(c), plan.end(c),
                       [&](std::size_t k, double re, double im) { target[k] *= re * re + im * im; });
    });
}

}  // namespace detail

/// Complex baseband field of one rotating stage (see file comment).
inline FieldTrace synthesize_stage_field(double bandwidth, double duration, double dt, std::size_t modes,
                                         std::uint64_t seed, unsigned workers = 0)
{
    detail::check_synthesis(bandwidth, duration, dt, modes);
    const std::size_t n = detail::sample_count(duration, dt);
    const auto set = detail::draw_modes(bandwidth, modes, seed);
    FieldTrace field;
    field.dt = dt;
    field.samples.resize(n);
    const ChunkPlan plan{n, detail::kSynthesisChunk};
    for_each_chunk(plan.count(), workers, [&](std::size_t c) {
        detail::evaluate_field(set, dt, plan.begin(c), plan.end(c),
                               [&](std::size_t k, double re, double im) { field.samples[k] = {re, im}; });
    });
    return field;
}

struct SynthesisParams {
    double duration = 0.0;
    double dt = 0.0;
    std::size_t modes = kDefaultModes;
    std::uint64_t seed = 1;
    unsigned workers = 0;
};

/// I(t) = prod over rotating stages of |E_j(t)|^2, unit mean in expectation.
/// Stage j (position in spec.stages) uses seed derive_seed(seed, stage, j).
inline IntensityTrace cascade_intensity_trace(const CascadeSpec& spec, const SynthesisParams& p)
{
    spec.validate();
    detail::require(p.modes >= 64, "cascade synthesis needs at least 64 modes");
    const std::size_t n = detail::sample_count(p.duration, p.dt);
    std::vector<double> samples(n, 1.0);
    for (std::size_t j = 0; j < spec.stages.size(); ++j) {
        const auto& stage = spec.stages[j];
        if (!stage.rotating) continue;
        detail::check_synthesis(stage.bandwidth, p.duration, p.dt, p.modes);
        const auto modes = detail::draw_modes(stage.bandwidth, p.modes, derive_seed(p.seed, kFieldStream, j));
        detail::multiply_stage_intensity(samples, p.dt, modes, p.workers);
    }
    return make_trace(p.dt, std::move(samples), spec.longest_coherence_time());
}

struct CorrelateOptions {
    double block_length = 0.0;        ///< seconds; 0 = 10 coherence times of the trace
    std::size_t bootstrap_replicates = 200;
    std::uint64_t seed = 0x5eed;
    unsigned workers = 0;
};

/// Time-averaged <I(t) I(t+tau)> / (<I(t)> <I(t+tau)>) on an n_lags grid
/// over [-max_lag, max_lag], lags rounded to whole samples. Standard errors
/// come from a non-overlapping block bootstrap (blocks of at least
/// 10 coherence times) because samples are serially correlated.
inline G2Curve correlate(const IntensityTrace& trace, double max_lag, std::size_t n_lags,
                         const CorrelateOptions& opt = {})
{
    const double duration = trace.duration();
    detail::require(max_lag <= duration / 10.0, "correlate: max_lag must not exceed duration/10");
    if (trace.coherence_time > 0.0)
        detail::require(duration >= 100.0 * trace.coherence_time,
                        "correlate: trace must span at least 100 coherence times");

    const auto grid = symmetric_lag_grid(max_lag, n_lags);
    std::vector<long long> shifts;
    for (double lag : grid) shifts.push_back(std::llround(lag / trace.dt));
    for (std::size_t i = 1; i < shifts.size(); ++i)
        detail::require(shifts[i] > shifts[i - 1], "correlate: lag grid finer than the sample interval");

    const auto& x = trace.samples;
    const std::size_t n = x.size();
    double block_seconds = opt.block_length > 0.0 ? opt.block_length : 10.0 * trace.coherence_time;
    auto block = static_cast<std::size_t>(std::ceil(block_seconds / trace.dt));
    block = std::clamp<std::size_t>(block, 1, n);
    const std::size_t n_blocks = (n + block - 1) / block;

    // Per distinct |shift|: per-block sums of products, leading and trailing samples, counts.
    struct BlockSums {
        std::vector<double> prod, lead, trail, count;
    };
    std::vector<long long> distinct;
    for (auto s : shifts) distinct.push_back(std::llabs(s));
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<BlockSums> sums(distinct.size());

    for_each_chunk(distinct.size(), opt.workers, [&](std::size_t d) {
        const auto k = static_cast<std::size_t>(distinct[d]);
        BlockSums bs{std::vector<double>(n_blocks), std::vector<double>(n_blocks), std::vector<double>(n_blocks),
                     std::vector<double>(n_blocks)};
        for (std::size_t b = 0; b < n_blocks; ++b) {
            const std::size_t lo = b * block;
            const std::size_t hi = std::min(n >= k ? n - k : 0, (b + 1) * block);
            CompensatedSum prod, lead, trail;
            for (std::size_t t = lo; t < hi; ++t) {
                prod.add(x[t] * x[t + k]);
                lead.add(x[t]);
                trail.add(x[t + k]);
            }
            bs.prod[b] = prod.value();
            bs.lead[b] = lead.value();
            bs.trail[b] = trail.value();
            bs.count[b] = hi > lo ? static_cast<double>(hi - lo) : 0.0;
        }
        sums[d] = std::move(bs);
    });

    auto ratio = [](double prod, double lead, double trail, double count) {
        if (count <= 0.0 || lead <= 0.0 || trail <= 0.0) return 1.0;
        return (prod / count) / ((lead / count) * (trail / count));
    };

    std::vector<double> value(distinct.size()), error(distinct.size(), 0.0);
    for (std::size_t d = 0; d < distinct.size(); ++d) {
        CompensatedSum p, l, t, c;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            p.add(sums[d].prod[b]);
            l.add(sums[d].lead[b]);
            t.add(sums[d].trail[b]);
            c.add(sums[d].count[b]);
        }
        value[d] = ratio(p.value(), l.value(), t.value(), c.value());
    }

    if (n_blocks >= 2 && opt.bootstrap_replicates >= 2) {
        auto eng = make_stream(opt.seed, kBootstrapStream);
        std::vector<std::vector<double>> reps(distinct.size());
        std::vector<std::size_t> pick(n_blocks);
        for (std::size_t r = 0; r < opt.bootstrap_replicates; ++r) {
            for (auto& b : pick) b = static_cast<std::size_t>(uniform01(eng) * static_cast<double>(n_blocks));
            for (std::size_t d = 0; d < distinct.size(); ++d) {
                double p = 0.0, l = 0.0, t = 0.0, c = 0.0;
                for (auto b : pick) {
                    p += sums[d].prod[b];
                    l += sums[d].lead[b];
                    t += sums[d].trail[b];
                    c += sums[d].count[b];
                }
                reps[d].push_back(ratio(p, l, t, c));
            }
        }
        for (std::size_t d = 0; d < distinct.size(); ++d) {
            const double m = arithmetic_mean(reps[d]);
            double ss = 0.0;
            for (double v : reps[d]) ss += (v - m) * (v - m);
            error[d] = std::sqrt(ss / static_cast<double>(reps[d].size() - 1));
        }
    }

    G2Curve curve;
    for (auto s : shifts) {
        const auto d = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), std::llabs(s)) - distinct.begin());
        curve.lags.push_back(static_cast<double>(s) * trace.dt);
        curve.values.push_back(value[d]);
        curve.std_error.push_back(error[d]);
    }
    curve.validate();
    return curve;
}

/// i.i.d. draws of <I> * X_1 * ... * X_n with X_j unit-mean exponentials.
struct IntensitySampleSet {
    int n_stages = 1;
    double mean = 1.0;
    std::vector<double> samples;
};

inline constexpr std::size_t kSampleChunk = 1 << 16;

inline IntensitySampleSet sample_compound_intensity(int n_stages, double mean, std::size_t count, std::uint64_t seed,
                                                    unsigned workers = 0)
{
    detail::require(n_stages >= 1, "sample_compound_intensity: n_stages must be >= 1");
    detail::require(count >= 1, "sample_compound_intensity: count must be >= 1");
    detail::require(mean > 0.0, "sample_compound_intensity: mean must be positive");
    IntensitySampleSet set{n_stages, mean, std::vector<double>(count)};
    const ChunkPlan plan{count, kSampleChunk};
    for_each_chunk(plan.count(), workers, [&](std::size_t c) {
        auto eng = make_stream(seed, kCompoundStream, c);
        for (std::size_t i = plan.begin(c); i < plan.end(c); ++i) {
            double v = mean;
            for (int j = 0; j < n_stages; ++j) v *= exponential(eng);
            set.samples[i] = v;
        }
    });
    return set;
}

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Sample mean of x^q with its i.i.d. standard error.
inline Estimate sample_moment(const std::vector<double>& xs, int q)
{
    detail::require(xs.size() >= 2, "sample_moment: need at least two samples");
    CompensatedSum s, s2;
    for (double x : xs) {
        const double v = std::pow(x, q);
        s.add(v);
        s2.add(v * v);
    }
    const auto n = static_cast<double>(xs.size());
    const double m = s.value() / n;
    const double var = std::max(0.0, (s2.value() / n - m * m) * n / (n - 1.0));
    return {m, std::sqrt(var / n)};
}

/// Moment of a serially correlated trace with a batch-means standard error
/// (non-overlapping blocks of `block_samples`).
inline Estimate trace_moment(const IntensityTrace& trace, int q, std::size_t block_samples)
{
    detail::require(block_samples >= 1, "trace_moment: block must be non-empty");
    const auto& x = trace.samples;
    const std::size_t n_blocks = x.size() / block_samples;
    detail::require(n_blocks >= 2, "trace_moment: need at least two blocks");
    std::vector<double> block_means(n_blocks);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        CompensatedSum s;
        for (std::size_t t = b * block_samples; t < (b + 1) * block_samples; ++t) s.add(std::pow(x[t], q));
        block_means[b] = s.value() / static_cast<double>(block_samples);
    }
    const double m = arithmetic_mean(block_means);
    double ss = 0.0;
    for (double v : block_means) ss += (v - m) * (v - m);
    const auto nb = static_cast<double>(n_blocks);
    return {m, std::sqrt(ss / (nb - 1.0) / nb)};
}

/// How the intensity modulator is driven.
enum class ModulatorDrive {
    independent,  ///< a fresh compound-law draw every dwell (i.i.d. holds)
    replay,       ///< sample-and-hold of a synthesized n-stage cascade intensity
};

/// Intensity modulator followed by one rotating stage. The modulator
/// imposes the n-stage compound intensity law without touching the phase;
/// the last stage then randomizes the phase.
struct ModulatorScheme {
    int premodulation_stages = 1;
    double final_bandwidth = 0.0;           ///< rad/s
    double premodulation_bandwidth = 0.0;   ///< rad/s, replay drive only; 0 = final_bandwidth
    double dwell = 0.0;                     ///< seconds; 0 = coherence time of the final stage / 10
    ModulatorDrive drive = ModulatorDrive::independent;
};

inline IntensityTrace im_equivalent_trace(const ModulatorScheme& scheme, const SynthesisParams& p)
{
    detail::require(scheme.premodulation_stages >= 1, "im_equivalent_trace: need at least one premodulation stage");
    detail::require(p.modes >= 64, "im_equivalent_trace: needs at least 64 modes");
    detail::check_synthesis(scheme.final_bandwidth, p.duration, p.dt, p.modes);
    const double tau_final = 2.0 * std::numbers::pi / scheme.final_bandwidth;
    const double dwell = scheme.dwell > 0.0 ? scheme.dwell : tau_final / 10.0;
    const std::size_t n = detail::sample_count(p.duration, p.dt);

    // slot index of sample k: floor(k dt / dwell)
    auto slot_of = [&](std::size_t k) { return static_cast<std::size_t>(std::floor(static_cast<double>(k) * p.dt / dwell)); };
    const std::size_t n_slots = slot_of(n - 1) + 1;

    std::vector<double> samples(n);
    double coherence = tau_final;
    if (scheme.drive == ModulatorDrive::independent) {
        const auto held = sample_compound_intensity(scheme.premodulation_stages, 1.0, n_slots,
                                                    derive_seed(p.seed, kModulatorStream), p.workers);
        for (std::size_t k = 0; k < n; ++k) samples[k] = held.samples[slot_of(k)];
    } else {
        const double bw = scheme.premodulation_bandwidth > 0.0 ? scheme.premodulation_bandwidth : scheme.final_bandwidth;
        CascadeSpec pre = CascadeSpec::rotating_equal(static_cast<std::size_t>(scheme.premodulation_stages), bw);
        SynthesisParams pp = p;
        pp.seed = derive_seed(p.seed, kModulatorStream);
        const auto drive = cascade_intensity_trace(pre, pp);
        std::size_t current = static_cast<std::size_t>(-1);
        double held = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t s = slot_of(k);
            if (s != current) {
                current = s;
                held = drive.samples[k];
            }
            samples[k] = held;
        }
        coherence = std::max(coherence, pre.longest_coherence_time());
    }
    const auto modes = detail::draw_modes(scheme.final_bandwidth, p.modes, derive_seed(p.seed, kFieldStream, 1000));
    detail::multiply_stage_intensity(samples, p.dt, modes, p.workers);
    return make_trace(p.dt, std::move(samples), coherence);
}

}  // namespace superbunch::speckle
