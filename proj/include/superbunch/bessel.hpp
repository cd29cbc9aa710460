#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace superbunch::analytics {

namespace detail {

// Power series, accurate for 0 < x <= 2:
//   K0(x) = -(ln(x/2) + gamma) I0(x) + sum_{k>=1} (x^2/4)^k / (k!)^2 * H_k
inline double bessel_k0_series(double x)
{
    const double y = 0.25 * x * x;
    double term = 1.0;    // (x^2/4)^k / (k!)^2
    double i0 = 1.0;
    double harmonic = 0.0;
    double tail = 0.0;
    for (int k = 1; k < 60; ++k) {
        term *= y / (static_cast<double>(k) * k);
        harmonic += 1.0 / k;
        i0 += term;
        tail += term * harmonic;
        if (term * harmonic < 1e-18 * std::abs(tail) && term < 1e-18 * i0) break;
    }
    return -(std::log(0.5 * x) + std::numbers::egamma) * i0 + tail;
}

// Steed's continued fraction (Temme's CF2) for K_nu at nu = 0, x > 2.
inline double bessel_k0_continued_fraction(double x)
{
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i < 10000; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < 1e-17) break;
    }
    return std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
}

}  // namespace detail

/// Modified Bessel function of the second kind, order 0, for x > 0.
/// Relative accuracy better than 1e-10 on [1e-6, 700]; underflows to 0
/// beyond roughly x = 705.
inline double bessel_k0(double x)
{
    if (!(x > 0.0)) throw std::domain_error("bessel_k0: argument must be positive");
    if (std::isinf(x)) return 0.0;
    return x <= 2.0 ? detail::bessel_k0_series(x) : detail::bessel_k0_continued_fraction(x);
}

}  // namespace superbunch::analytics
