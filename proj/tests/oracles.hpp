#pragma once

// Reference implementations used only by tests. Each one takes a different
// route from the library code it checks.

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "superbunch/paths.hpp"

namespace oracle {

// K0(x) = int_0^inf exp(-x cosh t) dt by the trapezoid rule, which converges
// geometrically for this analytic, rapidly decaying integrand. The factor
// e^{-x} is pulled out to avoid underflow.
inline double k0_trapezoid(double x, double h = 1e-3)
{
    double sum = 0.5;  // t = 0 term, weight 1/2
    for (int k = 1;; ++k) {
        const double t = k * h;
        const double e = x * (std::cosh(t) - 1.0);
        if (e > 745.0) break;
        sum += std::exp(-e);
    }
    return std::exp(-x) * sum * h;
}

// 1 + |<e^{-i w tau}>|^2 with w uniform over a band of width bw, the
// band average done by composite Simpson quadrature.
inline double g2_single_by_frequency_integral(double tau, double bw, int panels = 20000)
{
    const double lo = -0.5 * bw;
    const double h = bw / panels;
    std::complex<double> acc = 0.0;
    for (int k = 0; k <= panels; ++k) {
        const double w = lo + k * h;
        const double weight = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        acc += weight * std::polar(1.0, -w * tau);
    }
    const std::complex<double> mean = acc * (h / 3.0) / bw;
    return 1.0 + std::norm(mean);
}

// Stages whose scatterer frequencies survive in A_p A_q^*, found by nudging
// each scatterer frequency and watching the phase of the product.
inline std::map<std::string, std::uint64_t> census_by_perturbation(int n, std::uint64_t& autocorrelation)
{
    using namespace superbunch::paths;
    const auto paths = enumerate_paths(n);
    PhaseFrequencyDraw base;
    base.central_frequency = 0.0;
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int j = 0; j < n; ++j) {
        base.phases.push_back({6.0 * u(eng), 6.0 * u(eng)});
        base.frequency_offsets.push_back({1e6 * u(eng), 1e6 * u(eng)});
    }
    const double tau = 1e-6;
    const double nudge = 1e3;

    std::map<std::string, std::uint64_t> groups;
    autocorrelation = 0;
    for (const auto& p : paths) {
        for (const auto& q : paths) {
            const auto ref = path_amplitude(p, base, tau) * std::conj(path_amplitude(q, base, tau));
            std::set<int> stages;
            for (int j = 0; j < n; ++j) {
                for (int s = 0; s < 2; ++s) {
                    auto d = base;
                    d.frequency_offsets[static_cast<std::size_t>(j)][static_cast<std::size_t>(s)] += nudge;
                    const auto v = path_amplitude(p, d, tau) * std::conj(path_amplitude(q, d, tau));
                    if (std::abs(std::arg(v / ref)) > 1e-6) stages.insert(j + 1);
                }
            }
            if (stages.empty()) {
                ++autocorrelation;
                continue;
            }
            std::string label = "sinc2{";
            bool first = true;
            for (int j : stages) {
                label += (first ? "" : ",") + std::to_string(j);
                first = false;
            }
            ++groups[label + "}"];
        }
    }
    return groups;
}

// Mean of (X1 X2)^3 for unit exponentials, with the standard library's
// own generator and distribution.
inline std::pair<double, double> product_of_exponentials_moment(int q, int n, std::size_t count, std::uint64_t seed)
{
    std::mt19937_64 eng(seed);
    std::exponential_distribution<double> expo(1.0);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        double v = 1.0;
        for (int j = 0; j < n; ++j) v *= expo(eng);
        const double m = std::pow(v, q);
        s += m;
        s2 += m * m;
    }
    const double c = static_cast<double>(count);
    const double mean = s / c;
    return {mean, std::sqrt((s2 / c - mean * mean) / c)};
}

// All-pairs coincidence counting: count[k] over pairs with lag nearest to
// k * bin (k in [-half, half]).
inline std::vector<std::uint64_t> brute_force_histogram(const std::vector<double>& t1, const std::vector<double>& t2,
                                                        double bin, long long half)
{
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(2 * half + 1), 0);
    for (double a : t1)
        for (double b : t2) {
            const double x = (a - b) / bin;
            const auto k = static_cast<long long>(std::floor(std::abs(x) + 0.5)) * (x < 0 ? -1 : 1);
            if (k >= -half && k <= half) ++counts[static_cast<std::size_t>(k + half)];
        }
    return counts;
}

}  // namespace oracle
