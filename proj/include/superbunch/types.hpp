#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "superbunch/errors.hpp"

namespace superbunch {

/// One randomizing stage (a rotating ground glass behind a pinhole).
/// The spectrum is flat over a full width `bandwidth` (rad/s) around the
/// carrier. A static stage randomizes nothing and is equivalent to leaving
/// it out.
struct SpectralStage {
    double bandwidth = 0.0;  ///< full angular-frequency width, rad/s
    bool rotating = true;

    /// Coherence time 2*pi/bandwidth, the first zero of the sinc factor.
    double coherence_time() const { return 2.0 * std::numbers::pi / bandwidth; }

    void validate() const
    {
        if (rotating && !(bandwidth > 0.0 && std::isfinite(bandwidth)))
            throw std::domain_error("rotating stage requires a positive finite bandwidth");
    }

    static SpectralStage from_coherence_time(double tau_c, bool rotating = true)
    {
        return {2.0 * std::numbers::pi / tau_c, rotating};
    }
};

/// Ordered cascade of stages plus the optical carrier. The carrier only
/// matters to the path-interference Monte Carlo; analytic results are
/// baseband.
struct CascadeSpec {
    std::vector<SpectralStage> stages;
    double central_frequency = 2.4150e15;  ///< rad/s (780 nm)

    std::size_t rotating_count() const
    {
        std::size_t n = 0;
        for (const auto& s : stages) n += s.rotating ? 1 : 0;
        return n;
    }

    std::vector<SpectralStage> rotating_stages() const
    {
        std::vector<SpectralStage> out;
        for (const auto& s : stages)
            if (s.rotating) out.push_back(s);
        return out;
    }

    /// Longest coherence time among rotating stages, 0 if none rotate.
    double longest_coherence_time() const
    {
        double t = 0.0;
        for (const auto& s : stages)
            if (s.rotating) t = std::max(t, s.coherence_time());
        return t;
    }

    /// Shortest coherence time among rotating stages, 0 if none rotate.
    double shortest_coherence_time() const
    {
        double t = std::numeric_limits<double>::infinity();
        for (const auto& s : stages)
            if (s.rotating) t = std::min(t, s.coherence_time());
        return std::isfinite(t) ? t : 0.0;
    }

    void validate() const
    {
        for (const auto& s : stages) s.validate();
    }

    static CascadeSpec rotating_equal(std::size_t n, double bandwidth)
    {
        CascadeSpec spec;
        spec.stages.reserve(n);
        for (std::size_t i = 0; i < n; ++i) spec.stages.push_back({bandwidth, true});
        return spec;
    }
};

/// Sampled normalized second-order coherence g2(tau).
/// Lags are t1 - t2 in seconds, strictly increasing. standard error is zero for
/// analytic curves.
struct G2Curve {
    std::vector<double> lags;
    std::vector<double> values;
    std::vector<double> std_error;

    std::size_t size() const noexcept { return lags.size(); }

    bool has_errors() const
    {
        for (double s : std_error)
            if (s > 0.0) return true;
        return false;
    }

    void validate() const
    {
        detail::require(values.size() == lags.size() && std_error.size() == lags.size(),
                        "G2Curve: lags, values and std_error must have equal length");
        for (std::size_t i = 1; i < lags.size(); ++i)
            detail::require(lags[i] > lags[i - 1], "G2Curve: lags must be strictly increasing");
        for (std::size_t i = 0; i < values.size(); ++i) {
            detail::require(std::isfinite(values[i]) && values[i] >= 0.0,
                            "G2Curve: values must be finite and non-negative");
            detail::require(std_error[i] >= 0.0, "G2Curve: std_error must be non-negative");
        }
    }
};

/// Evenly spaced symmetric lag grid [-max_lag, max_lag] with n points.
inline std::vector<double> symmetric_lag_grid(double max_lag, std::size_t n)
{
    detail::require(n >= 2, "lag grid needs at least two points");
    detail::require(max_lag > 0.0, "lag grid needs positive max_lag");
    std::vector<double> lags(n);
    for (std::size_t i = 0; i < n; ++i)
        lags[i] = -max_lag + 2.0 * max_lag * static_cast<double>(i) / static_cast<double>(n - 1);
    if (n % 2 == 1) lags[n / 2] = 0.0;
    return lags;
}

}  // namespace superbunch
