#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "superbunch/analytics.hpp"
#include "superbunch/errors.hpp"
#include "superbunch/types.hpp"

// Weighted nonlinear least squares for
//   g(tau) = prod_j [1 + beta_j sinc^2(bw_j tau / 2)]
// with one factor ("single") or several ("product-N"). Amplitudes beta_j are
// free (ideal value 1) so that dark counts and other imperfections show up
// as beta < 1 rather than as a distorted width.
//
// Coherence times are reported as 2*pi/bw, the first zero of the sinc.

namespace superbunch::fitting {

struct FitModel {
    int factors = 1;

    static FitModel single() { return {1}; }
    static FitModel product(int n) { return {n}; }

    /// "single", "product-2", "product-3", ...
    std::string name() const { return factors == 1 ? "single" : "product-" + std::to_string(factors); }

    static FitModel parse(const std::string& s)
    {
        if (s == "single") return single();
        if (s.rfind("product-", 0) == 0) {
            const std::string tail = s.substr(8);
            if (!tail.empty() && std::all_of(tail.begin(), tail.end(), [](unsigned char c) { return std::isdigit(c); })) {
                const int n = std::stoi(tail);
                if (n >= 1 && n <= 8) return product(n);
            }
        }
        throw std::invalid_argument("unknown fit model '" + s + "' (expected single or product-N)");
    }
};

struct FitResult {
    FitModel model;
    std::vector<double> amplitudes;        ///< beta_j
    std::vector<double> bandwidths;        ///< rad/s, ascending
    std::vector<double> amplitude_errors;
    std::vector<double> bandwidth_errors;
    std::vector<double> coherence_times;   ///< 2 pi / bw_j
    std::vector<double> coherence_time_errors;
    double g2_zero = 0.0;                  ///< prod (1 + beta_j)
    double g2_zero_error = 0.0;
    Eigen::MatrixXd covariance;            ///< order (beta_1, bw_1, beta_2, bw_2, ...)
    double residual_rms = 0.0;             ///< unweighted RMS of data - model
    double chi_square = 0.0;               ///< weighted sum of squared residuals
    std::size_t points = 0;
    std::size_t iterations = 0;
    int start_index = 0;
    bool weighted = false;
    std::string error_method = "jacobian";  ///< "jacobian" or "jackknife"
    std::size_t jackknife_blocks = 0;

    double evaluate(double tau) const
    {
        double g = 1.0;
        for (std::size_t j = 0; j < amplitudes.size(); ++j) {
            const double s = analytics::sinc(0.5 * bandwidths[j] * tau);
            g *= 1.0 + amplitudes[j] * s * s;
        }
        return g;
    }
};

class FitError : public NumericalError {
public:
    FitError(const std::string& what, const std::string& diagnostics, std::optional<FitResult> best = std::nullopt)
        : NumericalError(what, diagnostics), best_(std::move(best)) {}

    const std::optional<FitResult>& best_so_far() const noexcept { return best_; }

private:
    std::optional<FitResult> best_;
};

struct FitOptions {
    std::optional<std::vector<double>> initial_amplitudes;
    std::optional<std::vector<double>> initial_bandwidths;
    int starts = 5;
    int max_iterations = 400;
    double amplitude_min = -0.95;
    double amplitude_max = 20.0;
};

namespace detail {

using superbunch::detail::require;

// Parameters: (beta_1, ln bw_1, beta_2, ln bw_2, ...)
struct Problem {
    const std::vector<double>& lags;
    const std::vector<double>& values;
    std::vector<double> weights;  // 1/sigma
    int factors;
    Eigen::VectorXd lower, upper;

    Eigen::VectorXd residuals(const Eigen::VectorXd& p) const
    {
        Eigen::VectorXd r(static_cast<Eigen::Index>(lags.size()));
        for (std::size_t i = 0; i < lags.size(); ++i) {
            double g = 1.0;
            for (int j = 0; j < factors; ++j) {
                const double s = analytics::sinc(0.5 * std::exp(p[2 * j + 1]) * lags[i]);
                g *= 1.0 + p[2 * j] * s * s;
            }
            r[static_cast<Eigen::Index>(i)] = (values[i] - g) * weights[i];
        }
        return r;
    }

    // Jacobian of the weighted model (not the residual) with respect to p.
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const
    {
        const auto n = static_cast<Eigen::Index>(lags.size());
        Eigen::MatrixXd J(n, 2 * factors);
        std::vector<double> factor(static_cast<std::size_t>(factors)), ds(static_cast<std::size_t>(factors)),
            s2(static_cast<std::size_t>(factors));
        for (Eigen::Index i = 0; i < n; ++i) {
            const double tau = lags[static_cast<std::size_t>(i)];
            for (int j = 0; j < factors; ++j) {
                const double x = 0.5 * std::exp(p[2 * j + 1]) * tau;
                const double s = analytics::sinc(x);
                s2[static_cast<std::size_t>(j)] = s * s;
                ds[static_cast<std::size_t>(j)] = 2.0 * s * (std::cos(x) - s);  // d sinc^2 / d ln bw
                factor[static_cast<std::size_t>(j)] = 1.0 + p[2 * j] * s * s;
            }
            for (int j = 0; j < factors; ++j) {
                double others = 1.0;
                for (int k = 0; k < factors; ++k)
                    if (k != j) others *= factor[static_cast<std::size_t>(k)];
                const double w = weights[static_cast<std::size_t>(i)];
                J(i, 2 * j) = others * s2[static_cast<std::size_t>(j)] * w;
                J(i, 2 * j + 1) = others * p[2 * j] * ds[static_cast<std::size_t>(j)] * w;
            }
        }
        return J;
    }

    Eigen::VectorXd clamp(Eigen::VectorXd p) const { return p.cwiseMax(lower).cwiseMin(upper); }
};

struct LmOutcome {
    Eigen::VectorXd params;
    double cost = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    bool converged = false;
};

// Damped Gauss-Newton with Marquardt scaling; steps are projected onto the
// parameter box.
inline LmOutcome levenberg_marquardt(const Problem& prob, Eigen::VectorXd p, int max_iterations)
{
    p = prob.clamp(p);
    Eigen::VectorXd r = prob.residuals(p);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    LmOutcome out;
    for (int it = 0; it < max_iterations; ++it) {
        out.iterations = static_cast<std::size_t>(it + 1);
        const Eigen::MatrixXd J = prob.jacobian(p);
        const Eigen::MatrixXd A = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        if (g.cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, cost)) {
            out.converged = true;
            break;
        }
        bool improved = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            Eigen::MatrixXd D = A;
            for (Eigen::Index k = 0; k < D.rows(); ++k) D(k, k) += lambda * std::max(A(k, k), 1e-12);
            const Eigen::VectorXd step = D.ldlt().solve(g);
            const Eigen::VectorXd trial = prob.clamp(p + step);
            const Eigen::VectorXd rt = prob.residuals(trial);
            const double ct = rt.squaredNorm();
            if (std::isfinite(ct) && ct < cost) {
                const double rel = (cost - ct) / std::max(cost, std::numeric_limits<double>::min());
                const double move = (trial - p).cwiseAbs().maxCoeff();
                p = trial;
                r = rt;
                cost = ct;
                lambda = std::max(lambda / 5.0, 1e-12);
                improved = true;
                if (rel < 1e-15 || move < 1e-13) out.converged = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!improved || out.converged) {
            out.converged = true;
            break;
        }
    }
    out.params = p;
    out.cost = cost;
    return out;
}

inline constexpr double kHalfPowerSinc2 = 1.3915573781515795;  // sinc^2(x) = 1/2

// Scale and height of the central peak: bandwidth from the first local
// minimum past the half-height point, falling back to the half-height
// lag itself.
inline std::pair<double, double> peak_guess(const std::vector<double>& lags, const std::vector<double>& values)
{
    std::size_t centre = 0;
    for (std::size_t i = 1; i < lags.size(); ++i)
        if (std::abs(lags[i]) < std::abs(lags[centre])) centre = i;
    const double peak = values[centre];
    const double excess = peak - 1.0;

    // walk outward on the side with more points
    const bool right = (lags.size() - 1 - centre) >= centre;
    auto at = [&](std::size_t step) -> std::optional<std::size_t> {
        if (right) return centre + step < lags.size() ? std::optional<std::size_t>(centre + step) : std::nullopt;
        return step <= centre ? std::optional<std::size_t>(centre - step) : std::nullopt;
    };
    std::optional<double> half_lag;
    std::size_t step = 1;
    for (; at(step); ++step) {
        const auto i = *at(step);
        if (values[i] - 1.0 <= 0.5 * excess) {
            half_lag = std::abs(lags[i]);
            break;
        }
    }
    if (!half_lag) return {excess, 2.0 * kHalfPowerSinc2 / std::abs(lags[*at(step - 1)])};
    for (std::size_t k = step + 1; at(k + 1); ++k) {
        const auto i = *at(k);
        if (values[i] <= values[*at(k - 1)] && values[i] <= values[*at(k + 1)])
            return {excess, 2.0 * std::numbers::pi / std::abs(lags[i])};
    }
    return {excess, 2.0 * kHalfPowerSinc2 / *half_lag};
}

}  // namespace detail

/// Fits `curve` with the given model. Per-point standard errors weight the
/// fit when present; otherwise all points get unit weight and the
/// covariance is scaled by the residual variance. Five deterministic starts
/// spread the bandwidths around the peak-width estimate; the lowest cost
/// wins, ties going to the earlier start.
inline FitResult fit_g2(const G2Curve& curve, const FitModel& model, const FitOptions& opt = {})
{
    curve.validate();
    detail::require(model.factors >= 1, "fit_g2: model needs at least one factor");
    const std::size_t n = curve.size();
    const auto n_params = static_cast<std::size_t>(2 * model.factors);
    detail::require(n >= 10 && n > n_params, "fit_g2: need at least 10 points");

    const auto [vmin, vmax] = std::minmax_element(curve.values.begin(), curve.values.end());
    if (*vmax - *vmin <= 1e-12 * std::max(1.0, std::abs(*vmax))) throw FitError("no structure", "constant curve");

    double min_spacing = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n; ++i) min_spacing = std::min(min_spacing, curve.lags[i] - curve.lags[i - 1]);
    const double span = std::max(std::abs(curve.lags.front()), std::abs(curve.lags.back()));
    detail::require(span > 0.0, "fit_g2: lags must extend away from zero");

    const bool weighted = curve.has_errors();
    std::vector<double> weights(n, 1.0);
    if (weighted) {
        double smallest = std::numeric_limits<double>::infinity();
        for (double s : curve.std_error)
            if (s > 0.0) smallest = std::min(smallest, s);
        for (std::size_t i = 0; i < n; ++i) weights[i] = 1.0 / (curve.std_error[i] > 0.0 ? curve.std_error[i] : smallest);
    }

    const double bw_lo = 2.0 * std::numbers::pi / (50.0 * span);
    const double bw_hi = 4.0 * std::numbers::pi / min_spacing;
    detail::Problem prob{curve.lags, curve.values, weights, model.factors, Eigen::VectorXd(n_params), Eigen::VectorXd(n_params)};
    for (int j = 0; j < model.factors; ++j) {
        prob.lower[2 * j] = opt.amplitude_min;
        prob.upper[2 * j] = opt.amplitude_max;
        prob.lower[2 * j + 1] = std::log(bw_lo);
        prob.upper[2 * j + 1] = std::log(bw_hi);
    }

    const auto [excess, bw_guess] = detail::peak_guess(curve.lags, curve.values);
    const double beta_guess = std::pow(std::max(1.0 + excess, 1.05), 1.0 / model.factors) - 1.0;
    constexpr std::array<double, 5> spreads{0.7, 2.2, 3.4, 1.2, 4.5};
    constexpr std::array<double, 5> shifts{0.0, -0.3, -1.0, 0.25, -1.8};

    detail::LmOutcome best;
    int best_start = -1;
    const int starts = std::max(1, opt.starts);
    for (int s = 0; s < starts; ++s) {
        Eigen::VectorXd p(static_cast<Eigen::Index>(n_params));
        const double spread = spreads[static_cast<std::size_t>(s) % spreads.size()];
        const double shift = shifts[static_cast<std::size_t>(s) % shifts.size()];
        for (int j = 0; j < model.factors; ++j) {
            double beta = beta_guess;
            double bw = bw_guess;
            if (model.factors == 1) {
                bw *= std::exp(0.5 * shift);
            } else {
                const double centre = 0.5 * (model.factors - 1);
                bw *= std::exp(shift + spread * (j - centre) / std::max(1.0, centre * 2.0) * 2.0);
            }
            if (opt.initial_amplitudes && s == 0) beta = opt.initial_amplitudes->at(static_cast<std::size_t>(j));
            if (opt.initial_bandwidths && s == 0) bw = opt.initial_bandwidths->at(static_cast<std::size_t>(j));
            p[2 * j] = beta;
            p[2 * j + 1] = std::log(std::clamp(bw, bw_lo, bw_hi));
        }
        auto outcome = detail::levenberg_marquardt(prob, p, opt.max_iterations);
        if (outcome.cost < best.cost) {
            best = outcome;
            best_start = s;
        }
    }
    if (best_start < 0 || !std::isfinite(best.cost)) throw FitError("fit did not produce a finite cost", "all starts failed");

    // sort factors by bandwidth for a canonical order
    std::vector<int> order(static_cast<std::size_t>(model.factors));
    for (int j = 0; j < model.factors; ++j) order[static_cast<std::size_t>(j)] = j;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return best.params[2 * a + 1] < best.params[2 * b + 1]; });

    const Eigen::MatrixXd J = prob.jacobian(best.params);
    Eigen::MatrixXd cov_log = (J.transpose() * J).completeOrthogonalDecomposition().pseudoInverse();
    const double dof = static_cast<double>(n - n_params);
    if (!weighted) cov_log *= best.cost / dof;

    FitResult result;
    result.model = model;
    result.points = n;
    result.iterations = best.iterations;
    result.start_index = best_start;
    result.weighted = weighted;
    result.chi_square = best.cost;
    result.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_params), static_cast<Eigen::Index>(n_params));
    // jacobian of (beta, bw) with respect to (beta, ln bw), in sorted order
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_params), static_cast<Eigen::Index>(n_params));
    for (int k = 0; k < model.factors; ++k) {
        const int j = order[static_cast<std::size_t>(k)];
        const double beta = best.params[2 * j];
        const double bw = std::exp(best.params[2 * j + 1]);
        T(2 * k, 2 * j) = 1.0;
        T(2 * k + 1, 2 * j + 1) = bw;
        result.amplitudes.push_back(beta);
        result.bandwidths.push_back(bw);
        result.coherence_times.push_back(2.0 * std::numbers::pi / bw);
    }
    result.covariance = T * cov_log * T.transpose();
    result.g2_zero = 1.0;
    for (double b : result.amplitudes) result.g2_zero *= 1.0 + b;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params));
    for (int k = 0; k < model.factors; ++k) {
        const auto sk = static_cast<std::size_t>(k);
        const double se_beta = std::sqrt(std::max(0.0, result.covariance(2 * k, 2 * k)));
        const double se_bw = std::sqrt(std::max(0.0, result.covariance(2 * k + 1, 2 * k + 1)));
        result.amplitude_errors.push_back(se_beta);
        result.bandwidth_errors.push_back(se_bw);
        result.coherence_time_errors.push_back(result.coherence_times[sk] * se_bw / result.bandwidths[sk]);
        grad[2 * k] = result.g2_zero / (1.0 + result.amplitudes[sk]);
    }
    result.g2_zero_error = std::sqrt(std::max(0.0, double(grad.transpose() * result.covariance * grad)));

    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = curve.values[i] - result.evaluate(curve.lags[i]);
        ss += d * d;
    }
    result.residual_rms = std::sqrt(ss / static_cast<double>(n));

    if (!best.converged) {
        std::ostringstream diag;
        diag << "iterations=" << best.iterations << " cost=" << best.cost << " start=" << best_start;
        throw FitError("fit did not converge", diag.str(), result);
    }
    return result;
}

/// Fit of `full` with errors from a delete-one jackknife over
/// `leave_one_out` (the same measurement with each of K time blocks removed).
/// Unlike the Jacobian covariance, this captures noise that is correlated
/// across lags, such as intensity fluctuations of the source, which shift
/// the whole peak together. Each jackknife fit starts from the full fit.
inline FitResult fit_g2_jackknife(const G2Curve& full, const std::vector<G2Curve>& leave_one_out, const FitModel& model,
                                  const FitOptions& opt = {})
{
    detail::require(leave_one_out.size() >= 2, "fit_g2_jackknife: need at least two blocks");
    FitResult result = fit_g2(full, model, opt);
    const auto n_params = static_cast<Eigen::Index>(2 * model.factors);
    FitOptions local = opt;
    local.starts = 1;
    local.initial_amplitudes = result.amplitudes;
    local.initial_bandwidths = result.bandwidths;

    const auto k = leave_one_out.size();
    std::vector<Eigen::VectorXd> params;
    std::vector<double> zeros;
    for (const auto& curve : leave_one_out) {
        FitResult r;
        try {
            r = fit_g2(curve, model, local);
        } catch (const FitError& e) {
            if (!e.best_so_far()) throw;
            r = *e.best_so_far();
        }
        Eigen::VectorXd p(n_params);
        for (int j = 0; j < model.factors; ++j) {
            p[2 * j] = r.amplitudes[static_cast<std::size_t>(j)];
            p[2 * j + 1] = r.bandwidths[static_cast<std::size_t>(j)];
        }
        params.push_back(p);
        zeros.push_back(r.g2_zero);
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n_params);
    double zero_mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mean += params[i];
        zero_mean += zeros[i];
    }
    mean /= static_cast<double>(k);
    zero_mean /= static_cast<double>(k);
    const double scale = static_cast<double>(k - 1) / static_cast<double>(k);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n_params, n_params);
    double zero_var = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const Eigen::VectorXd d = params[i] - mean;
        cov += scale * d * d.transpose();
        zero_var += scale * (zeros[i] - zero_mean) * (zeros[i] - zero_mean);
    }

    result.covariance = cov;
    for (int j = 0; j < model.factors; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        result.amplitude_errors[sj] = std::sqrt(cov(2 * j, 2 * j));
        result.bandwidth_errors[sj] = std::sqrt(cov(2 * j + 1, 2 * j + 1));
        result.coherence_time_errors[sj] = result.coherence_times[sj] * result.bandwidth_errors[sj] / result.bandwidths[sj];
    }
    result.g2_zero_error = std::sqrt(zero_var);
    result.error_method = "jackknife";
    result.jackknife_blocks = k;
    return result;
}

/// Linear interpolation of a curve (values and errors) at `tau`; nullopt
/// outside the curve's lag range.
inline std::optional<std::pair<double, double>> interpolate(const G2Curve& c, double tau)
{
    if (c.size() == 0 || tau < c.lags.front() || tau > c.lags.back()) return std::nullopt;
    auto it = std::lower_bound(c.lags.begin(), c.lags.end(), tau);
    auto i = static_cast<std::size_t>(it - c.lags.begin());
    if (c.lags[i] == tau) return std::pair{c.values[i], c.std_error[i]};
    const double w = (tau - c.lags[i - 1]) / (c.lags[i] - c.lags[i - 1]);
    return std::pair{c.values[i - 1] + w * (c.values[i] - c.values[i - 1]),
                     c.std_error[i - 1] + w * (c.std_error[i] - c.std_error[i - 1])};
}

/// Comparison of a two-stage curve with the product of two single-stage
/// curves, evaluated on the two-stage curve's lags (single-stage curves are
/// linearly interpolated onto them).
struct ProductCheck {
    double rms_gap = 0.0;           ///< RMS of ab - a*b (measured curves)
    double pooled_std_error = 0.0;  ///< sqrt(mean(s_ab^2 + b^2 s_a^2 + a^2 s_b^2))
    double fitted_rms_gap = 0.0;    ///< RMS of ab - fit_a*fit_b (product of single-stage fits)
    double shoulder_residual = 0.0; ///< mean of ab - fit_a*fit_b where the product is between 25% and 75% of its peak excess
    std::vector<double> lags;
    std::vector<double> direct_residuals;
    std::vector<double> fitted_residuals;
    std::optional<FitResult> fit_a, fit_b;
    std::string report;
};

inline ProductCheck product_curve_check(const G2Curve& a, const G2Curve& b, const G2Curve& ab)
{
    a.validate();
    b.validate();
    ab.validate();
    ProductCheck out;
    std::vector<double> va, vb, sa, sb, vab, sab;
    for (std::size_t i = 0; i < ab.size(); ++i) {
        const auto ia = interpolate(a, ab.lags[i]);
        const auto ib = interpolate(b, ab.lags[i]);
        if (!ia || !ib) continue;
        out.lags.push_back(ab.lags[i]);
        va.push_back(ia->first);
        sa.push_back(ia->second);
        vb.push_back(ib->first);
        sb.push_back(ib->second);
        vab.push_back(ab.values[i]);
        sab.push_back(ab.std_error[i]);
    }
    detail::require(!out.lags.empty(), "product_curve_check: curves share no lag range");

    const auto m = static_cast<double>(out.lags.size());
    double gap2 = 0.0, pooled = 0.0;
    for (std::size_t i = 0; i < out.lags.size(); ++i) {
        const double d = vab[i] - va[i] * vb[i];
        out.direct_residuals.push_back(d);
        gap2 += d * d;
        pooled += sab[i] * sab[i] + vb[i] * vb[i] * sa[i] * sa[i] + va[i] * va[i] * sb[i] * sb[i];
    }
    out.rms_gap = std::sqrt(gap2 / m);
    out.pooled_std_error = std::sqrt(pooled / m);

    std::ostringstream rep;
    rep.precision(6);
    rep << "points: " << out.lags.size() << "\n"
        << "rms_gap: " << out.rms_gap << "\n"
        << "pooled_std_error: " << out.pooled_std_error << "\n";
    try {
        out.fit_a = fit_g2(a, FitModel::single());
        out.fit_b = fit_g2(b, FitModel::single());
        double fgap2 = 0.0, shoulder = 0.0;
        std::size_t shoulder_n = 0;
        const double peak = out.fit_a->g2_zero * out.fit_b->g2_zero - 1.0;
        for (std::size_t i = 0; i < out.lags.size(); ++i) {
            const double line = out.fit_a->evaluate(out.lags[i]) * out.fit_b->evaluate(out.lags[i]);
            const double d = vab[i] - line;
            out.fitted_residuals.push_back(d);
            fgap2 += d * d;
            const double frac = (line - 1.0) / peak;
            if (frac > 0.25 && frac < 0.75) {
                shoulder += d;
                ++shoulder_n;
            }
        }
        out.fitted_rms_gap = std::sqrt(fgap2 / m);
        out.shoulder_residual = shoulder_n ? shoulder / static_cast<double>(shoulder_n) : 0.0;
        rep << "fitted_rms_gap: " << out.fitted_rms_gap << "\n"
            << "shoulder_residual: " << out.shoulder_residual << "\n"
            << "shape: "
            << (std::abs(out.shoulder_residual) <= 2.0 * out.pooled_std_error ? "consistent with product"
                : out.shoulder_residual > 0.0 ? "measured curve wider than product"
                                              : "measured curve narrower than product")
            << "\n";
    } catch (const NumericalError& e) {
        rep << "fitted_rms_gap: unavailable (" << e.what() << ")\n";
    }
    out.report = rep.str();
    return out;
}

}  // namespace superbunch::fitting
