#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "superbunch/errors.hpp"
#include "superbunch/types.hpp"

// Goodness-of-fit helpers shared by the tests, the acceptance suite and the
// crosscheck pipeline.

namespace superbunch::stats {

/// P(X > x) for a chi-square variable with `dof` degrees of freedom.
inline double chi_square_survival(double x, double dof)
{
    detail::require(dof > 0.0, "chi_square_survival: dof must be positive");
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

struct ChiSquareResult {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 0.0;
    std::vector<double> observed;
    std::vector<double> expected;
};

/// Pearson test of binned counts against bin probabilities (which should sum
/// to ~1). Degrees of freedom: bins - 1 (no fitted parameters).
inline ChiSquareResult chi_square_test(const std::vector<double>& observed, const std::vector<double>& probabilities)
{
    detail::require(observed.size() == probabilities.size() && observed.size() >= 2,
                    "chi_square_test: need matching bins (>= 2)");
    double total = 0.0;
    for (double o : observed) total += o;
    detail::require(total > 0.0, "chi_square_test: no observations");
    ChiSquareResult r;
    r.observed = observed;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = probabilities[i] * total;
        detail::require(e > 0.0, "chi_square_test: every bin needs a positive expectation");
        r.expected.push_back(e);
        r.statistic += (observed[i] - e) * (observed[i] - e) / e;
    }
    r.dof = static_cast<double>(observed.size() - 1);
    r.p_value = chi_square_survival(r.statistic, r.dof);
    return r;
}

/// n + 1 edges, logarithmically spaced from lo to hi.
inline std::vector<double> log_edges(double lo, double hi, std::size_t n)
{
    detail::require(lo > 0.0 && hi > lo && n >= 1, "log_edges: need 0 < lo < hi and n >= 1");
    std::vector<double> edges(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
        edges[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n));
    edges.back() = hi;
    return edges;
}

/// Counts of samples per interval [edge_i, edge_{i+1}); samples outside the
/// edges are ignored.
inline std::vector<double> bin_counts(const std::vector<double>& samples, const std::vector<double>& edges)
{
    std::vector<double> counts(edges.size() - 1, 0.0);
    for (double x : samples) {
        if (x < edges.front() || x >= edges.back()) continue;
        const auto it = std::upper_bound(edges.begin(), edges.end(), x);
        ++counts[static_cast<std::size_t>(it - edges.begin()) - 1];
    }
    return counts;
}

/// Kolmogorov-Smirnov distance between samples and a continuous CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf)
{
    detail::require(!samples.empty(), "ks_statistic: no samples");
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

/// Asymptotic Kolmogorov survival P(sqrt(n) D > x sqrt(n)), with the usual
/// small-sample correction of the argument.
inline double ks_p_value(double d, std::size_t n)
{
    const double sn = std::sqrt(static_cast<double>(n));
    const double x = (sn + 0.12 + 0.11 / sn) * d;
    if (x < 0.2) return 1.0;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
        p += term;
        if (std::abs(term) < 1e-16) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

/// Agreement between two curves sampled on the same lags.
struct CurveAgreement {
    double rms_deviation = 0.0;   ///< sqrt(mean (a - b)^2)
    double pooled_std_error = 0.0;  ///< sqrt(mean (s_a^2 + s_b^2))
    double max_z = 0.0;           ///< max |a - b| / sqrt(s_a^2 + s_b^2), 0 where both errors vanish
};

inline CurveAgreement compare_curves(const G2Curve& a, const G2Curve& b)
{
    a.validate();
    b.validate();
    detail::require(a.size() == b.size() && a.size() > 0, "compare_curves: curves must have equal, non-zero length");
    CurveAgreement r;
    double ss = 0.0, pooled = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        detail::require(std::abs(a.lags[i] - b.lags[i]) <= 1e-9 * std::max(1e-300, std::abs(a.lags[i])) + 1e-15,
                        "compare_curves: lag grids differ");
        const double d = a.values[i] - b.values[i];
        const double v = a.std_error[i] * a.std_error[i] + b.std_error[i] * b.std_error[i];
        ss += d * d;
        pooled += v;
        if (v > 0.0) r.max_z = std::max(r.max_z, std::abs(d) / std::sqrt(v));
    }
    const auto n = static_cast<double>(a.size());
    r.rms_deviation = std::sqrt(ss / n);
    r.pooled_std_error = std::sqrt(pooled / n);
    return r;
}

}  // namespace superbunch::stats
