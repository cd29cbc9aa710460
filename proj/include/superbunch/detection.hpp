#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "superbunch/errors.hpp"
#include "superbunch/parallel.hpp"
#include "superbunch/random.hpp"
#include "superbunch/speckle.hpp"
#include "superbunch/types.hpp"

// Virtual Hanbury Brown-Twiss chain: 50:50 fiber splitter, two
// single-photon detectors with dark counts and dead time, and a tag-based
// correlator that histograms every pair of detections within +-max_lag
// (full cross-correlation, not start-stop).

namespace superbunch::detection {

inline constexpr std::uint64_t kSignalStream = 0x5349474eULL;
inline constexpr std::uint64_t kDarkStream = 0x4441524bULL;

/// Arrival times on one detector channel, strictly increasing, in [0, duration].
struct TimeTagStream {
    std::vector<double> tags;
    int channel = 1;
    double duration = 0.0;
    double dead_time = 0.0;
    double dark_rate = 0.0;

    std::size_t size() const noexcept { return tags.size(); }
    double rate() const { return duration > 0.0 ? static_cast<double>(tags.size()) / duration : 0.0; }
};

struct DetectorSettings {
    double mean_rate = 1e4;     ///< total detected signal rate before the splitter, counts/s
    double split_ratio = 0.5;   ///< probability a photon is routed to channel 1
    double dead_time = 0.0;     ///< seconds, non-paralyzable, per detector
    double dark_rate = 0.0;     ///< counts/s per detector
    std::uint64_t seed = 1;
    unsigned workers = 0;
};

namespace detail {

using superbunch::detail::require;

inline constexpr std::size_t kThinningSegment = 1024;

inline std::vector<double> apply_dead_time(const std::vector<double>& sorted, double dead_time)
{
    std::vector<double> out;
    out.reserve(sorted.size());
    for (double t : sorted) {
        if (!out.empty() && (t <= out.back() || t - out.back() < dead_time)) continue;
        out.push_back(t);
    }
    return out;
}

inline std::vector<double> homogeneous_poisson(double rate, double duration, std::uint64_t seed)
{
    std::vector<double> out;
    if (rate <= 0.0) return out;
    auto eng = make_stream(seed, kDarkStream);
    double t = exponential(eng) / rate;
    while (t < duration) {
        out.push_back(t);
        t += exponential(eng) / rate;
    }
    return out;
}

}  // namespace detail

/// Photodetection of an intensity trace. Photons arrive as an inhomogeneous
/// Poisson process with rate mean_rate * I(t) / <I>, piecewise constant over
/// each sample interval, generated by thinning (segment-wise dominating
/// rate). Each photon goes to channel 1 with probability split_ratio,
/// independent dark counts are superposed per channel, and dead time is
/// applied last, per detector.
///
/// Signal and dark counts use separate random streams, so changing the dark
/// rate leaves the signal photons unchanged for a given seed.
inline std::pair<TimeTagStream, TimeTagStream> sample_timetags(const speckle::IntensityTrace& trace,
                                                               const DetectorSettings& s)
{
    detail::require(trace.dt > 0.0 && !trace.samples.empty(), "sample_timetags: empty trace");
    detail::require(trace.mean > 0.0, "sample_timetags: trace mean must be positive");
    detail::require(s.mean_rate > 0.0, "sample_timetags: mean_rate must be positive");
    detail::require(s.mean_rate * trace.dt < 0.1, "sample_timetags: mean_rate * dt must be below 0.1");
    detail::require(s.split_ratio > 0.0 && s.split_ratio < 1.0, "sample_timetags: split_ratio must lie in (0, 1)");
    detail::require(s.dead_time >= 0.0, "sample_timetags: dead_time must be >= 0");
    detail::require(s.dark_rate >= 0.0, "sample_timetags: dark_rate must be >= 0");

    const auto& x = trace.samples;
    const double duration = trace.duration();
    const ChunkPlan plan{x.size(), detail::kThinningSegment};
    std::vector<std::vector<double>> seg1(plan.count()), seg2(plan.count());

    for_each_chunk(plan.count(), s.workers, [&](std::size_t c) {
        auto eng = make_stream(s.seed, kSignalStream, c);
        const std::size_t lo = plan.begin(c);
        const std::size_t hi = plan.end(c);
        const double peak = *std::max_element(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(hi));
        if (peak <= 0.0) return;
        const double lambda_max = s.mean_rate * peak / trace.mean;
        const double t_end = static_cast<double>(hi) * trace.dt;
        double t = static_cast<double>(lo) * trace.dt + exponential(eng) / lambda_max;
        while (t < t_end) {
            auto k = static_cast<std::size_t>(t / trace.dt);
            k = std::clamp(k, lo, hi - 1);
            if (uniform01(eng) * peak < x[k]) {
                if (uniform01(eng) < s.split_ratio)
                    seg1[c].push_back(t);
                else
                    seg2[c].push_back(t);
            }
            t += exponential(eng) / lambda_max;
        }
    });

    auto assemble = [&](const std::vector<std::vector<double>>& segs, int channel) {
        std::vector<double> signal;
        for (const auto& v : segs) signal.insert(signal.end(), v.begin(), v.end());
        const auto dark = detail::homogeneous_poisson(s.dark_rate, duration, derive_seed(s.seed, kDarkStream, static_cast<std::uint64_t>(channel)));
        std::vector<double> merged;
        merged.reserve(signal.size() + dark.size());
        std::merge(signal.begin(), signal.end(), dark.begin(), dark.end(), std::back_inserter(merged));
        return TimeTagStream{detail::apply_dead_time(merged, s.dead_time), channel, duration, s.dead_time, s.dark_rate};
    };
    return {assemble(seg1, 1), assemble(seg2, 2)};
}

/// Histogram of t1 - t2 over every pair of tags. Bin k (k = -K..K) is
/// centered at k * bin_width and collects lags with round(lag / bin_width)
/// == k (halves rounded away from zero, so swapping channels mirrors the
/// histogram exactly). K = floor(max_lag / bin_width - 1/2), so every bin
/// is full width and lies inside +-max_lag.
struct CoincidenceHistogram {
    double bin_width = 0.0;
    long long half_bins = 0;
    std::vector<double> lags;
    std::vector<std::uint64_t> counts;
    double duration = 0.0;
    std::size_t channel1_counts = 0;
    std::size_t channel2_counts = 0;

    std::uint64_t total() const
    {
        std::uint64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
};

inline CoincidenceHistogram coincidence_histogram(const TimeTagStream& s1, const TimeTagStream& s2, double bin_width,
                                                  double max_lag, unsigned workers = 0)
{
    detail::require(bin_width > 0.0, "coincidence_histogram: bin_width must be positive");
    detail::require(max_lag >= 0.5 * bin_width, "coincidence_histogram: max_lag must cover at least the zero bin");
    const double duration = std::max(s1.duration, s2.duration);
    detail::require(max_lag <= duration / 100.0, "coincidence_histogram: max_lag must not exceed duration/100");

    CoincidenceHistogram h;
    h.bin_width = bin_width;
    h.half_bins = static_cast<long long>(std::floor(max_lag / bin_width - 0.5));
    const auto n_bins = static_cast<std::size_t>(2 * h.half_bins + 1);
    h.duration = duration;
    h.channel1_counts = s1.size();
    h.channel2_counts = s2.size();
    for (long long k = -h.half_bins; k <= h.half_bins; ++k) h.lags.push_back(static_cast<double>(k) * bin_width);
    h.counts.assign(n_bins, 0);
    if (s1.tags.empty() || s2.tags.empty()) return h;

    const double reach = (static_cast<double>(h.half_bins) + 1.0) * bin_width;
    const ChunkPlan plan{s1.size(), 1 << 14};
    std::vector<std::vector<std::uint64_t>> partial(plan.count());
    for_each_chunk(plan.count(), workers, [&](std::size_t c) {
        std::vector<std::uint64_t> local(n_bins, 0);
        const auto& t2 = s2.tags;
        auto start = std::lower_bound(t2.begin(), t2.end(), s1.tags[plan.begin(c)] - reach);
        for (std::size_t i = plan.begin(c); i < plan.end(c); ++i) {
            const double t1 = s1.tags[i];
            while (start != t2.end() && *start < t1 - reach) ++start;
            for (auto it = start; it != t2.end() && *it <= t1 + reach; ++it) {
                const auto k = static_cast<long long>(std::round((t1 - *it) / bin_width));
                if (k < -h.half_bins || k > h.half_bins) continue;
                ++local[static_cast<std::size_t>(k + h.half_bins)];
            }
        }
        partial[c] = std::move(local);
    });
    for (const auto& p : partial)
        for (std::size_t b = 0; b < n_bins; ++b) h.counts[b] += p[b];
    return h;
}

/// The histogram split by the arrival time of the channel-1 tag into
/// `blocks` equal time slices; the block histograms sum exactly to the full
/// one. Used for jackknife error estimates.
inline std::vector<CoincidenceHistogram> coincidence_histogram_blocks(const TimeTagStream& s1, const TimeTagStream& s2,
                                                                      double bin_width, double max_lag, std::size_t blocks,
                                                                      unsigned workers = 0)
{
    detail::require(blocks >= 2, "coincidence_histogram_blocks: need at least two blocks");
    const double duration = std::max(s1.duration, s2.duration);
    std::vector<CoincidenceHistogram> out;
    out.reserve(blocks);
    auto it = s1.tags.begin();
    for (std::size_t k = 0; k < blocks; ++k) {
        const double end = duration * static_cast<double>(k + 1) / static_cast<double>(blocks);
        const auto stop = k + 1 == blocks ? s1.tags.end() : std::lower_bound(it, s1.tags.end(), end);
        TimeTagStream part = s1;
        part.tags.assign(it, stop);
        out.push_back(coincidence_histogram(part, s2, bin_width, max_lag, workers));
        it = stop;
    }
    return out;
}

/// Sum of block histograms, optionally leaving one block out.
inline CoincidenceHistogram combine_blocks(const std::vector<CoincidenceHistogram>& blocks,
                                           std::optional<std::size_t> skip = std::nullopt)
{
    detail::require(!blocks.empty(), "combine_blocks: no blocks");
    CoincidenceHistogram h = blocks.front();
    std::fill(h.counts.begin(), h.counts.end(), 0);
    h.channel1_counts = 0;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        if (skip && *skip == k) continue;
        detail::require(blocks[k].counts.size() == h.counts.size(), "combine_blocks: bin layouts differ");
        for (std::size_t b = 0; b < h.counts.size(); ++b) h.counts[b] += blocks[k].counts[b];
        h.channel1_counts += blocks[k].channel1_counts;
    }
    return h;
}

/// Lag window |tau| in [lower, upper] used as the uncorrelated background.
struct BaselineWindow {
    double lower = 0.0;
    double upper = 0.0;

    /// [8, 10] coherence times of the slowest stage.
    static BaselineWindow for_coherence_time(double tau_c) { return {8.0 * tau_c, 10.0 * tau_c}; }
};

/// Divides every bin by the mean count inside the baseline window. Errors
/// combine Poisson noise of the bin (an empty bin counts as one) with the
/// Poisson noise of the baseline mean. The window must sit where the true
/// curve is flat (beyond ~5 coherence times of the slowest stage).
inline G2Curve normalize_histogram(const CoincidenceHistogram& h, const BaselineWindow& window)
{
    detail::require(window.lower >= 0.0 && window.upper >= window.lower, "normalize_histogram: invalid baseline window");
    double base_sum = 0.0;
    std::size_t base_bins = 0;
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        const double a = std::abs(h.lags[b]);
        if (a >= window.lower && a <= window.upper) {
            base_sum += static_cast<double>(h.counts[b]);
            ++base_bins;
        }
    }
    detail::require(base_bins > 0, "normalize_histogram: baseline window contains no bins");
    detail::require(base_sum > 0.0, "normalize_histogram: baseline window contains no counts");
    const double base = base_sum / static_cast<double>(base_bins);
    const double base_var = base / static_cast<double>(base_bins);

    G2Curve curve;
    curve.lags = h.lags;
    for (auto c : h.counts) {
        const auto counts = static_cast<double>(c);
        const double v = counts / base;
        const double var = std::max(counts, 1.0) / (base * base) + v * v * base_var / (base * base);
        curve.values.push_back(v);
        curve.std_error.push_back(std::sqrt(var));
    }
    curve.validate();
    return curve;
}

}  // namespace superbunch::detection

namespace superbunch::detection {

/// Normalized curves of the histogram with each block left out in turn.
inline std::vector<G2Curve> leave_one_out_curves(const std::vector<CoincidenceHistogram>& blocks,
                                                 const BaselineWindow& window)
{
    std::vector<G2Curve> out;
    out.reserve(blocks.size());
    for (std::size_t k = 0; k < blocks.size(); ++k) out.push_back(normalize_histogram(combine_blocks(blocks, k), window));
    return out;
}

}  // namespace superbunch::detection
