#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "superbunch/errors.hpp"
#include "superbunch/parallel.hpp"
#include "superbunch/random.hpp"
#include "superbunch/types.hpp"

// Two-photon path interference through a cascade of randomizing stages.
//
// Geometry. Every stage j = 1..N has two scatterer positions a_j and b_j,
// always occupied by one photon each. Between stage j and stage j+1 (or the
// detectors, for j = N) the pair either goes straight (a_j -> a_{j+1},
// b_j -> b_{j+1}) or crosses over (a_j -> b_{j+1}, b_j -> a_{j+1}). The
// "a" side ends at D1 and the "b" side at D2. A path is therefore one
// N-bit crossing pattern and there are exactly 2^N of them.
//
// Timing. Detectors fire at t1 = tau and t2 = 0. Positions on the a side of
// stage j are reached at t1 - (N + 1 - j) * hop_delay and on the b side at
// t2 - (N + 1 - j) * hop_delay, so arrival-time differences between the two
// sides equal tau at every stage (symmetric detectors, point source).
//
// Amplitude. exp(i(phi_a1 + phi_b1)) times, for each photon and each hop,
// the propagator exp(-i omega_src * dt), where omega_src is the frequency
// of the scatterer the photon leaves.
//
// Only rotating stages create alternatives. A static stage carries a single
// fixed phase and the carrier frequency for both labels, so it is treated
// as absent.

namespace superbunch::paths {

namespace detail {
using superbunch::detail::require;
}

enum class Side : std::uint8_t { a, b };
enum class Detector : std::uint8_t { d1, d2 };

/// Fixed propagation time between consecutive stages. Any constant works:
/// it only adds a path-independent phase.
inline constexpr double kHopDelay = 1e-9;

/// One of the 2^N alternatives. Bit j-1 of `crossings` set means the pair
/// crosses over on the hop leaving stage j.
struct TwoPhotonPath {
    int n_stages = 0;
    std::uint32_t crossings = 0;

    bool crosses_after(int stage) const { return (crossings >> (stage - 1)) & 1u; }

    /// Side occupied at stages 1..N by the photon emitted at a_1.
    std::vector<Side> route_a() const
    {
        std::vector<Side> route(static_cast<std::size_t>(n_stages));
        Side s = Side::a;
        for (int j = 1; j <= n_stages; ++j) {
            route[static_cast<std::size_t>(j - 1)] = s;
            if (crosses_after(j)) s = (s == Side::a) ? Side::b : Side::a;
        }
        return route;
    }

    /// Complementary route of the photon emitted at b_1.
    std::vector<Side> route_b() const
    {
        auto route = route_a();
        for (auto& s : route) s = (s == Side::a) ? Side::b : Side::a;
        return route;
    }

    /// Detector reached by the photon emitted at a_1.
    Detector detector_a() const
    {
        if (n_stages == 0) return Detector::d1;
        const Side last = route_a().back();
        const bool cross = crosses_after(n_stages);
        const Side end = cross ? (last == Side::a ? Side::b : Side::a) : last;
        return end == Side::a ? Detector::d1 : Detector::d2;
    }

    Detector detector_b() const { return detector_a() == Detector::d1 ? Detector::d2 : Detector::d1; }

    /// Label such as "a1-b2-D2 & b1-a2-D1".
    std::string label() const
    {
        auto describe = [&](const std::vector<Side>& route, Detector d) {
            std::string s;
            for (std::size_t j = 0; j < route.size(); ++j) {
                s += (route[j] == Side::a ? "a" : "b") + std::to_string(j + 1) + "-";
            }
            s += d == Detector::d1 ? "D1" : "D2";
            return s;
        };
        return describe(route_a(), detector_a()) + " & " + describe(route_b(), detector_b());
    }

    friend bool operator==(const TwoPhotonPath&, const TwoPhotonPath&) = default;
};

/// All 2^N alternatives by recursive doubling: the alternatives for N-1
/// stages are extended by the N-th stage, first with a_N going to D1 (no
/// crossing on the final hop), then with the detectors exchanged.
inline std::vector<TwoPhotonPath> enumerate_paths(int n_stages)
{
    if (n_stages < 1 || n_stages > 20) throw std::range_error("enumerate_paths: n_stages must be in [1, 20]");
    if (n_stages == 1) return {TwoPhotonPath{1, 0u}, TwoPhotonPath{1, 1u}};
    const auto previous = enumerate_paths(n_stages - 1);
    std::vector<TwoPhotonPath> out;
    out.reserve(previous.size() * 2);
    for (std::uint32_t last = 0; last < 2; ++last)
        for (const auto& p : previous) out.push_back({n_stages, p.crossings | (last << (n_stages - 1))});
    return out;
}

/// Random phases and frequency offsets (from the carrier) of the scatterers
/// of every rotating stage, indexed [stage][side].
struct PhaseFrequencyDraw {
    std::vector<std::array<double, 2>> phases;
    std::vector<std::array<double, 2>> frequency_offsets;
    double central_frequency = 0.0;

    int n_stages() const { return static_cast<int>(phases.size()); }
};

/// Independent uniform phases on [0, 2pi) and frequencies uniform across
/// each rotating stage's band.
template <class Engine>
PhaseFrequencyDraw draw_scatterers(const CascadeSpec& spec, Engine& eng, bool equal_frequencies = false)
{
    PhaseFrequencyDraw draw;
    draw.central_frequency = spec.central_frequency;
    for (const auto& stage : spec.stages) {
        if (!stage.rotating) continue;
        std::array<double, 2> ph{};
        std::array<double, 2> fr{};
        for (int s = 0; s < 2; ++s) {
            ph[s] = uniform(eng, 0.0, 2.0 * std::numbers::pi);
            fr[s] = equal_frequencies ? 0.0 : uniform(eng, -0.5 * stage.bandwidth, 0.5 * stage.bandwidth);
        }
        draw.phases.push_back(ph);
        draw.frequency_offsets.push_back(fr);
    }
    return draw;
}

namespace detail {

inline double arrival_time(Side side, int stage, int n_stages, double tau)
{
    const double t_side = side == Side::a ? tau : 0.0;
    return t_side - static_cast<double>(n_stages + 1 - stage) * kHopDelay;
}

// Total phase of one photon's route plus its carrier propagation time.
inline void accumulate_route(const TwoPhotonPath& path, Side start, const PhaseFrequencyDraw& draw, double tau,
                             double& baseband_phase, double& elapsed)
{
    const int n = path.n_stages;
    Side s = start;
    for (int j = 1; j <= n; ++j) {
        const Side next = path.crosses_after(j) ? (s == Side::a ? Side::b : Side::a) : s;
        const double dt = arrival_time(next, j + 1, n, tau) - arrival_time(s, j, n, tau);
        baseband_phase -= draw.frequency_offsets[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(s)] * dt;
        elapsed += dt;
        s = next;
    }
}

}  // namespace detail

/// Probability amplitude of one alternative at detection-time difference
/// tau. Always of unit modulus.
inline std::complex<double> path_amplitude(const TwoPhotonPath& path, const PhaseFrequencyDraw& draw, double tau)
{
    detail::require(draw.n_stages() == path.n_stages, "path_amplitude: draw and path stage counts differ");
    if (path.n_stages == 0) return std::polar(1.0, 0.0);
    double phase = draw.phases[0][0] + draw.phases[0][1];
    double elapsed = 0.0;
    detail::accumulate_route(path, Side::a, draw, tau, phase, elapsed);
    detail::accumulate_route(path, Side::b, draw, tau, phase, elapsed);
    // Carrier part: -omega0 * (total propagation time), reduced before use.
    const double carrier = std::fmod(draw.central_frequency * elapsed, 2.0 * std::numbers::pi);
    return std::polar(1.0, phase - carrier);
}

struct McOptions {
    std::size_t realizations = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    bool equal_frequencies = false;  ///< zero-bandwidth limit: phases random, frequencies at the carrier
};

struct McEstimate {
    double estimate = 0.0;     ///< <|sum A|^2> / <sum |A|^2>
    double std_error = 0.0;
    double background = 0.0;   ///< mean of sum |A|^2 (2^N up to rounding)
    double distinguishable = 0.0;  ///< <sum |A|^2> / background
    std::size_t realizations = 0;
};

inline constexpr int kMaxMcStages = 12;
inline constexpr std::uint64_t kPathStream = 0x5041544853ULL;

/// Monte Carlo estimate of the normalized coherence from indistinguishable
/// (amplitudes summed) and distinguishable (probabilities summed)
/// alternatives. Realization r draws its scatterers from a generator seeded
/// by (seed, r), and partial sums are merged in chunk order, so the result
/// does not depend on the worker count.
inline McEstimate run_path_mc(const CascadeSpec& spec, double tau, const McOptions& opt)
{
    spec.validate();
    detail::require(opt.realizations >= 1000, "path Monte Carlo needs at least 1000 realizations");
    const int n = static_cast<int>(spec.rotating_count());
    if (n > kMaxMcStages) throw std::range_error("path Monte Carlo limited to 12 rotating stages");

    const std::vector<TwoPhotonPath> paths = n == 0 ? std::vector<TwoPhotonPath>{TwoPhotonPath{}} : enumerate_paths(n);
    const ChunkPlan plan{opt.realizations, 4096};
    struct Partial {
        CompensatedSum coherent, coherent_sq, incoherent;
    };
    std::vector<Partial> partials(plan.count());

    for_each_chunk(plan.count(), opt.workers, [&](std::size_t c) {
        Partial part;
        for (std::size_t r = plan.begin(c); r < plan.end(c); ++r) {
            SplitMix64 eng(derive_seed(opt.seed, kPathStream, r));
            const auto draw = draw_scatterers(spec, eng, opt.equal_frequencies);
            std::complex<double> total{0.0, 0.0};
            double incoherent = 0.0;
            for (const auto& p : paths) {
                const auto amp = path_amplitude(p, draw, tau);
                total += amp;
                incoherent += std::norm(amp);
            }
            const double coherent = std::norm(total);
            part.coherent.add(coherent);
            part.coherent_sq.add(coherent * coherent);
            part.incoherent.add(incoherent);
        }
        partials[c] = part;
    });

    CompensatedSum coherent, coherent_sq, incoherent;
    for (const auto& p : partials) {
        coherent.merge(p.coherent);
        coherent_sq.merge(p.coherent_sq);
        incoherent.merge(p.incoherent);
    }
    const auto r = static_cast<double>(opt.realizations);
    McEstimate out;
    out.realizations = opt.realizations;
    out.background = incoherent.value() / r;
    const double mean = coherent.value() / r;
    const double var = std::max(0.0, (coherent_sq.value() / r - mean * mean) * r / (r - 1.0));
    out.estimate = coherent.value() / incoherent.value();
    out.std_error = std::sqrt(var / r) / out.background;
    out.distinguishable = incoherent.value() / incoherent.value();
    return out;
}

inline McEstimate g2_mc(const CascadeSpec& spec, double tau, std::size_t realizations, std::uint64_t seed,
                        unsigned workers = 0)
{
    return run_path_mc(spec, tau, McOptions{realizations, seed, workers, false});
}

inline double g2_distinguishable(const CascadeSpec& spec, double tau, std::size_t realizations, std::uint64_t seed,
                                 unsigned workers = 0)
{
    return run_path_mc(spec, tau, McOptions{realizations, seed, workers, false}).distinguishable;
}

/// Lag sweep; every lag gets its own derived seed so points are independent.
inline G2Curve g2_mc_curve(const CascadeSpec& spec, const std::vector<double>& lags, const McOptions& opt)
{
    G2Curve curve;
    curve.lags = lags;
    for (std::size_t i = 0; i < lags.size(); ++i) {
        McOptions o = opt;
        o.seed = derive_seed(opt.seed, kPathStream + 1, i);
        const auto est = run_path_mc(spec, lags[i], o);
        curve.values.push_back(est.estimate);
        curve.std_error.push_back(est.std_error);
    }
    curve.validate();
    return curve;
}

/// Counting of the (2^N)^2 terms of |sum A|^2.
struct TermCensus {
    std::uint64_t total_terms = 0;
    std::uint64_t autocorrelation_terms = 0;
    /// Cross terms keyed by the stages whose sinc^2 factor survives the
    /// frequency average, e.g. "sinc2{1,2}".
    std::map<std::string, std::uint64_t> cross_groups;
};

/// Expands every product A_p A_q^* symbolically: each path's phase is a sum
/// of (scatterer frequency) x (integer multiple of tau) terms; a term whose
/// frequency coefficients all cancel is an autocorrelation term, otherwise
/// it is grouped by the set of stages with uncancelled frequencies.
inline TermCensus term_census(int n_stages)
{
    if (n_stages < 1 || n_stages > kMaxMcStages) throw std::range_error("term_census: n_stages must be in [1, 12]");
    const auto paths = enumerate_paths(n_stages);
    const auto n = static_cast<std::size_t>(n_stages);

    // coefficient of tau multiplying omega_(stage, side) in each path's phase
    std::vector<std::vector<int>> coeffs;
    coeffs.reserve(paths.size());
    for (const auto& p : paths) {
        std::vector<int> c(2 * n, 0);
        for (Side start : {Side::a, Side::b}) {
            Side s = start;
            for (int j = 1; j <= n_stages; ++j) {
                const Side next = p.crosses_after(j) ? (s == Side::a ? Side::b : Side::a) : s;
                const int dt_tau = (next == Side::a ? 1 : 0) - (s == Side::a ? 1 : 0);
                c[2 * static_cast<std::size_t>(j - 1) + static_cast<std::size_t>(s)] += dt_tau;
                s = next;
            }
        }
        coeffs.push_back(std::move(c));
    }

    TermCensus census;
    census.total_terms = static_cast<std::uint64_t>(paths.size()) * paths.size();
    std::map<std::uint32_t, std::uint64_t> by_mask;
    for (std::size_t p = 0; p < paths.size(); ++p) {
        for (std::size_t q = 0; q < paths.size(); ++q) {
            std::uint32_t mask = 0;
            for (std::size_t k = 0; k < 2 * n; ++k)
                if (coeffs[p][k] != coeffs[q][k]) mask |= 1u << (k / 2);
            if (mask == 0)
                ++census.autocorrelation_terms;
            else
                ++by_mask[mask];
        }
    }
    for (const auto& [mask, count] : by_mask) {
        std::string label = "sinc2{";
        bool first = true;
        for (int j = 0; j < n_stages; ++j) {
            if (!((mask >> j) & 1u)) continue;
            if (!first) label += ",";
            label += std::to_string(j + 1);
            first = false;
        }
        census.cross_groups[label + "}"] = count;
    }
    return census;
}

}  // namespace superbunch::paths
