#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "superbunch/bessel.hpp"
#include "superbunch/errors.hpp"
#include "superbunch/types.hpp"

// Closed-form coherence and intensity statistics of cascaded pseudothermal
// light.
//
// Stage model: each rotating stage has a flat spectrum of full width
// bandwidth, which gives the first-order correlation sinc(bandwidth*tau/2).
// Only the product bandwidth*tau is observable, so a half-width convention
// would simply rescale fitted bandwidths by two.
//
// The N-stage curve prod_j [1 + sinc^2(bw_j tau / 2)] is the conjectured
// generalization of the two-stage result; it is pinned at tau = 0 by the
// 2^N counting rule and verified by the path-interference Monte Carlo.

namespace superbunch::analytics {

namespace detail {
using superbunch::detail::require;
}

inline double sinc(double x)
{
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

/// Single-stage normalized coherence 1 + sinc^2(bandwidth * tau / 2).
inline double g2_single(double tau, double bandwidth)
{
    if (!(bandwidth > 0.0)) throw std::domain_error("g2_single: bandwidth must be positive");
    const double s = sinc(0.5 * bandwidth * tau);
    return 1.0 + s * s;
}

/// Product over rotating stages of the single-stage factor. Static stages
/// contribute 1; an empty or all-static cascade returns exactly 1.
inline double g2_cascade(double tau, const CascadeSpec& spec)
{
    double g = 1.0;
    for (const auto& stage : spec.stages) {
        if (!stage.rotating) continue;
        g *= g2_single(tau, stage.bandwidth);
    }
    return g;
}

/// 2^n, exact for n <= 62.
inline double g2_zero(int n_rotating)
{
    if (n_rotating < 0) throw std::domain_error("g2_zero: stage count must be non-negative");
    if (n_rotating > 62) throw std::range_error("g2_zero: stage count above 62");
    return static_cast<double>(std::uint64_t{1} << n_rotating);
}

/// Analytic curve on a lag grid (zero standard errors).
inline G2Curve analytic_curve(const CascadeSpec& spec, const std::vector<double>& lags)
{
    spec.validate();
    G2Curve curve;
    curve.lags = lags;
    curve.values.reserve(lags.size());
    for (double tau : lags) curve.values.push_back(g2_cascade(tau, spec));
    curve.std_error.assign(lags.size(), 0.0);
    curve.validate();
    return curve;
}

/// Negative exponential intensity law of single-stage speckle.
inline double pdf_exponential(double intensity, double mean)
{
    if (!(mean > 0.0)) throw std::domain_error("pdf_exponential: mean must be positive");
    if (intensity < 0.0) throw std::domain_error("pdf_exponential: intensity must be non-negative");
    return std::exp(-intensity / mean) / mean;
}

/// Two-stage (K-type) law (2/<I>) K0(2 sqrt(I/<I>)).
inline double pdf_k0(double intensity, double mean)
{
    if (!(mean > 0.0)) throw std::domain_error("pdf_k0: mean must be positive");
    if (!(intensity > 0.0)) throw std::domain_error("pdf_k0: intensity must be positive");
    const double arg = 2.0 * std::sqrt(intensity / mean);
    // K0 underflows past ~705; the density is zero to double precision there.
    if (arg > 700.0) return 0.0;
    return 2.0 / mean * bessel_k0(arg);
}

/// Adaptive Gauss-Kronrod quadrature of f(x) over [lo, hi] (0 < lo < hi),
/// carried out in u = ln x and split into decade panels so that integrands
/// spanning many orders of magnitude are resolved.
/// Throws NumericalError when a panel misses the relative tolerance.
inline double integrate_log(const std::function<double(double)>& f, double lo, double hi, double rel_tol = 1e-10)
{
    detail::require(lo > 0.0 && hi > lo, "integrate_log: need 0 < lo < hi");
    const double ulo = std::log(lo);
    const double uhi = std::log(hi);
    const double panel = std::log(10.0);
    const auto n_panels = static_cast<int>(std::ceil((uhi - ulo) / panel));
    auto g = [&](double u) {
        const double x = std::exp(u);
        return f(x) * x;
    };
    double total = 0.0;
    double total_l1 = 0.0;
    double total_err = 0.0;
    for (int p = 0; p < n_panels; ++p) {
        const double a = ulo + p * panel;
        const double b = std::min(uhi, a + panel);
        double err = 0.0;
        double l1 = 0.0;
        const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, 15, rel_tol * 1e-2, &err, &l1);
        total += v;
        total_l1 += l1;
        total_err += err;
    }
    if (!(total_err <= rel_tol * std::max(total_l1, std::numeric_limits<double>::min())) || !std::isfinite(total)) {
        std::ostringstream diag;
        diag << "range=[" << lo << "," << hi << "] estimate=" << total << " error=" << total_err << " l1=" << total_l1;
        throw NumericalError("quadrature did not converge", diag.str());
    }
    return total;
}

namespace detail {

// Mixing range for the (n-1)-stage mean x: the exponential weight kills
// x > 60<I>; below x_lo the (n-1)-stage tail at I/x is below e^-60.
inline std::pair<double, double> mixing_range(double intensity, double mean, int inner_stages)
{
    const double k = inner_stages;
    const double x_hi = 60.0 * mean;
    const double x_lo = std::min(intensity / std::pow(60.0 / k, k), 1e-3 * x_hi);
    return {x_lo, x_hi};
}

}  // namespace detail

/// Intensity density after n cascaded stages with overall mean <I>.
///   n = 1: negative exponential
///   n = 2: closed K0 form
///   n >= 3: P_n(I; m) = int_0^inf P_{n-1}(I; x) (1/m) e^{-x/m} dx, i.e. an
///           exponential mixing of the (n-1)-stage law over its mean,
///           evaluated by nested log-spaced adaptive Gauss-Kronrod
///           quadrature (relative tolerance 1e-9 per level).
/// The density diverges at I = 0 for n >= 2, so I must be positive.
inline double pdf_compound(double intensity, double mean, int n_stages)
{
    if (n_stages < 1) throw std::domain_error("pdf_compound: n_stages must be >= 1");
    if (!(mean > 0.0)) throw std::domain_error("pdf_compound: mean must be positive");
    if (!(intensity > 0.0)) throw std::domain_error("pdf_compound: intensity must be positive");
    if (n_stages == 1) return pdf_exponential(intensity, mean);
    if (n_stages == 2) return pdf_k0(intensity, mean);
    const auto [x_lo, x_hi] = detail::mixing_range(intensity, mean, n_stages - 1);
    auto integrand = [&](double x) {
        return pdf_compound(intensity, x, n_stages - 1) * std::exp(-x / mean) / mean;
    };
    return integrate_log(integrand, x_lo, x_hi, 1e-9);
}

/// (q!)^n <I>^q. The factorial power is accumulated in 64-bit integers
/// while it fits and in floating point afterwards; a non-finite result is a
/// range error.
inline double moment(int q, int n_stages, double mean)
{
    if (q < 1) throw std::domain_error("moment: order q must be >= 1");
    if (n_stages < 0) throw std::domain_error("moment: n_stages must be >= 0");
    if (!(mean > 0.0)) throw std::domain_error("moment: mean must be positive");
    if (q > 20) throw std::range_error("moment: q! exceeds 64-bit range");
    std::uint64_t fact = 1;
    for (int k = 2; k <= q; ++k) fact *= static_cast<std::uint64_t>(k);

    std::uint64_t exact = 1;
    double approx = 1.0;
    bool overflowed = false;
    for (int k = 0; k < n_stages; ++k) {
        if (!overflowed && exact <= std::numeric_limits<std::uint64_t>::max() / fact) {
            exact *= fact;
        } else {
            if (!overflowed) approx = static_cast<double>(exact);
            overflowed = true;
            approx *= static_cast<double>(fact);
        }
    }
    const double factor = overflowed ? approx : static_cast<double>(exact);
    const double result = factor * std::pow(mean, q);
    if (!std::isfinite(result)) throw std::range_error("moment: result overflows double");
    return result;
}

/// Table of <I^q> for q in [1, q_max], n in [0, n_max].
struct MomentTable {
    double mean_intensity = 1.0;
    std::map<std::pair<int, int>, double> entries;  ///< (q, n) -> <I^q>

    double at(int q, int n) const { return entries.at({q, n}); }
};

inline MomentTable moment_table(double mean, int q_max, int n_max)
{
    MomentTable table;
    table.mean_intensity = mean;
    for (int q = 1; q <= q_max; ++q)
        for (int n = 0; n <= n_max; ++n) table.entries[{q, n}] = moment(q, n, mean);
    return table;
}

/// q-th moment of pdf_compound by quadrature, used to cross-check the
/// closed-form moment law.
inline double compound_moment_by_quadrature(int q, int n_stages, double mean)
{
    const double k = n_stages;
    const double hi = mean * std::pow(70.0 / k + q, k) * 2.0;
    const double lo = mean * 1e-14;
    auto integrand = [&](double intensity) { return std::pow(intensity, q) * pdf_compound(intensity, mean, n_stages); };
    return integrate_log(integrand, lo, hi, 1e-8);
}

}  // namespace superbunch::analytics
