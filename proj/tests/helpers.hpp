#pragma once

// Shared test fixtures: binning for the K0 goodness-of-fit test and a few
// estimators that the unit tests and the acceptance suite both need.

#include <cmath>
#include <vector>

#include "superbunch/analytics.hpp"
#include "superbunch/speckle.hpp"
#include "superbunch/stats.hpp"

namespace testing_helpers {

/// 50 bins: [0, 1e-4), 48 log-spaced bins up to 20, and [20, inf), with
/// expected probabilities integrated from the two-stage density.
inline superbunch::stats::ChiSquareResult k0_chi_square(const std::vector<double>& samples, double mean)
{
    using namespace superbunch;
    const double lo = 1e-4 * mean;
    const double hi = 20.0 * mean;
    auto edges = stats::log_edges(lo, hi, 48);
    std::vector<double> observed(50, 0.0);
    for (double x : samples) {
        if (x < lo)
            observed[0] += 1.0;
        else if (x >= hi)
            observed[49] += 1.0;
    }
    const auto inner = stats::bin_counts(samples, edges);
    for (std::size_t i = 0; i < inner.size(); ++i) observed[i + 1] = inner[i];

    auto pdf = [&](double x) { return analytics::pdf_k0(x, mean); };
    std::vector<double> p(50, 0.0);
    p[0] = analytics::integrate_log(pdf, 1e-40 * mean, lo, 1e-10);
    double total = p[0];
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        p[i + 1] = analytics::integrate_log(pdf, edges[i], edges[i + 1], 1e-10);
        total += p[i + 1];
    }
    p[49] = analytics::integrate_log(pdf, hi, 2000.0 * mean, 1e-10);
    return stats::chi_square_test(observed, p);
}

/// Pearson correlation of two equally long series with a batch-means
/// standard error (blocks of `block` samples).
struct Correlation {
    double r = 0.0;
    double std_error = 0.0;
};

inline Correlation correlation(const std::vector<double>& a, const std::vector<double>& b, std::size_t block)
{
    const double ma = superbunch::speckle::arithmetic_mean(a);
    const double mb = superbunch::speckle::arithmetic_mean(b);
    double va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    const double sa = std::sqrt(va / static_cast<double>(a.size()));
    const double sb = std::sqrt(vb / static_cast<double>(b.size()));
    const std::size_t nb = a.size() / block;
    std::vector<double> means(nb, 0.0);
    for (std::size_t k = 0; k < nb; ++k) {
        for (std::size_t i = k * block; i < (k + 1) * block; ++i) means[k] += (a[i] - ma) * (b[i] - mb) / (sa * sb);
        means[k] /= static_cast<double>(block);
    }
    const double m = superbunch::speckle::arithmetic_mean(means);
    double ss = 0.0;
    for (double v : means) ss += (v - m) * (v - m);
    return {m, std::sqrt(ss / static_cast<double>(nb - 1) / static_cast<double>(nb))};
}

}  // namespace testing_helpers
