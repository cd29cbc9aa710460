#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "superbunch/analytics.hpp"
#include "superbunch/detection.hpp"
#include "superbunch/fitting.hpp"
#include "superbunch/speckle.hpp"

using namespace superbunch;
using namespace superbunch::fitting;

namespace {

constexpr double kTc = 1e-6;
constexpr double kBw = 2.0 * std::numbers::pi / kTc;

G2Curve model_curve(const std::vector<double>& betas, const std::vector<double>& bws, double max_lag, std::size_t n)
{
    G2Curve c;
    c.lags = symmetric_lag_grid(max_lag, n);
    for (double tau : c.lags) {
        double g = 1.0;
        for (std::size_t j = 0; j < betas.size(); ++j) {
            const double s = analytics::sinc(0.5 * bws[j] * tau);
            g *= 1.0 + betas[j] * s * s;
        }
        c.values.push_back(g);
    }
    c.std_error.assign(c.lags.size(), 0.0);
    return c;
}

struct SimulatedRun {
    G2Curve curve;
    std::vector<G2Curve> leave_one_out;
};

// Two-stage cascade through the detection chain, 20 jackknife blocks.
SimulatedRun simulate_two_stage(std::uint64_t seed, double dark_fraction)
{
    CascadeSpec spec;
    spec.stages = {SpectralStage::from_coherence_time(2 * kTc), SpectralStage::from_coherence_time(kTc)};
    const double rate = 1e6;
    const auto trace = speckle::cascade_intensity_trace(spec, {0.2, kTc / 20.0, 256, seed, 0});
    const auto [s1, s2] = detection::sample_timetags(trace, {rate, 0.5, 0.0, dark_fraction * 0.5 * rate, seed, 0});
    const auto blocks = detection::coincidence_histogram_blocks(s1, s2, kTc / 20.0, 21 * kTc, 20);
    const auto window = detection::BaselineWindow::for_coherence_time(2 * kTc);
    return {detection::normalize_histogram(detection::combine_blocks(blocks), window),
            detection::leave_one_out_curves(blocks, window)};
}

}  // namespace

TEST(FitModel, Names)
{
    EXPECT_EQ(FitModel::single().name(), "single");
    EXPECT_EQ(FitModel::product(3).name(), "product-3");
    EXPECT_EQ(FitModel::parse("product-2").factors, 2);
    EXPECT_EQ(FitModel::parse("single").factors, 1);
    EXPECT_THROW(FitModel::parse("product-"), std::invalid_argument);
    EXPECT_THROW(FitModel::parse("product-9"), std::invalid_argument);
    EXPECT_THROW(FitModel::parse("gauss"), std::invalid_argument);
}

TEST(FitG2, SingleRoundTrip)
{
    const auto curve = analytics::analytic_curve(CascadeSpec::rotating_equal(1, kBw), symmetric_lag_grid(3 * kTc, 61));
    const auto fit = fit_g2(curve, FitModel::single());
    EXPECT_NEAR(fit.amplitudes[0], 1.0, 1e-6);
    EXPECT_NEAR(fit.bandwidths[0] / kBw, 1.0, 1e-6);
    EXPECT_NEAR(fit.coherence_times[0] / kTc, 1.0, 1e-6);
    EXPECT_FALSE(fit.weighted);
    EXPECT_EQ(fit.error_method, "jacobian");
}

TEST(FitG2, ProductRoundTripSeparatedScales)
{
    CascadeSpec spec;
    spec.stages = {{5.0 * kBw, true}, {kBw, true}};
    const auto curve = analytics::analytic_curve(spec, symmetric_lag_grid(3 * kTc, 241));
    const auto fit = fit_g2(curve, FitModel::product(2));
    ASSERT_EQ(fit.bandwidths.size(), 2u);
    EXPECT_NEAR(fit.bandwidths[0] / kBw, 1.0, 1e-4);
    EXPECT_NEAR(fit.bandwidths[1] / (5.0 * kBw), 1.0, 1e-4);
    EXPECT_NEAR(fit.g2_zero, 4.0, 1e-4);
}

TEST(FitG2, RoundTripOverValidBox)
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> beta(0.2, 1.5);
    std::uniform_real_distribution<double> log_ratio(std::log(1.0 / 20.0), std::log(20.0));
    int ok = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::vector<double> betas{beta(rng), beta(rng)};
        const std::vector<double> bws{kBw, kBw * std::exp(log_ratio(rng))};
        const double slow = std::min(bws[0], bws[1]);
        const auto curve = model_curve(betas, bws, 3.0 * 2.0 * std::numbers::pi / slow, 801);
        const auto fit = fit_g2(curve, FitModel::product(2));
        // match factors by bandwidth order
        const bool swap = bws[0] > bws[1];
        const std::vector<double> eb{swap ? betas[1] : betas[0], swap ? betas[0] : betas[1]};
        const std::vector<double> ew{std::min(bws[0], bws[1]), std::max(bws[0], bws[1])};
        bool good = true;
        for (std::size_t j = 0; j < 2; ++j) {
            good = good && std::abs(fit.amplitudes[j] / eb[j] - 1.0) < 1e-4;
            good = good && std::abs(fit.bandwidths[j] / ew[j] - 1.0) < 1e-4;
        }
        EXPECT_TRUE(good) << "trial " << trial << " beta=" << betas[0] << "," << betas[1] << " bw=" << bws[0] << ","
                          << bws[1];
        ok += good;
    }
    EXPECT_EQ(ok, 100);
}

TEST(FitG2, ScaleConsistency)
{
    const std::vector<double> betas{0.8, 1.1};
    const std::vector<double> bws{kBw, 2.7 * kBw};
    const auto curve = model_curve(betas, bws, 3 * kTc, 121);
    auto noisy = curve;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (auto& v : noisy.values) v += noise(rng);
    noisy.std_error.assign(noisy.size(), 0.01);

    const double s = 1e3;
    auto scaled = noisy;
    for (auto& t : scaled.lags) t *= s;
    FitOptions base;
    base.initial_amplitudes = std::vector<double>{1.0, 1.0};
    base.initial_bandwidths = std::vector<double>{0.8 * kBw, 3.0 * kBw};
    FitOptions div = base;
    div.initial_bandwidths = std::vector<double>{0.8 * kBw / s, 3.0 * kBw / s};

    const auto a = fit_g2(noisy, FitModel::product(2), base);
    const auto b = fit_g2(scaled, FitModel::product(2), div);
    for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_NEAR(a.amplitudes[j], b.amplitudes[j], 1e-7);
        EXPECT_NEAR(a.bandwidths[j] / (s * b.bandwidths[j]), 1.0, 1e-7);
    }
    EXPECT_NEAR(a.residual_rms, b.residual_rms, 1e-9);
    EXPECT_NEAR(a.chi_square, b.chi_square, 1e-6 * a.chi_square);
}

TEST(FitG2, ReportedPeakMatchesModel)
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 0.02);
    for (int factors = 1; factors <= 3; ++factors) {
        std::vector<double> betas(static_cast<std::size_t>(factors), 0.9);
        std::vector<double> bws;
        for (int j = 0; j < factors; ++j) bws.push_back(kBw * (1.0 + 0.8 * j));
        auto curve = model_curve(betas, bws, 3 * kTc, 121);
        for (auto& v : curve.values) v += noise(rng);
        curve.std_error.assign(curve.size(), 0.02);
        const auto fit = fit_g2(curve, FitModel::product(factors));
        EXPECT_NEAR(fit.g2_zero, fit.evaluate(0.0), 1e-9);
        for (double bw : fit.bandwidths) EXPECT_GT(bw, 0.0);
        EXPECT_GE(fit.residual_rms, 0.0);
        EXPECT_TRUE(fit.weighted);
        EXPECT_EQ(fit.covariance.rows(), 2 * factors);
    }
}

TEST(FitG2, FlatNoiseGivesNoBunching)
{
    std::mt19937_64 rng(13);
    std::normal_distribution<double> noise(0.0, 0.01);
    G2Curve curve;
    curve.lags = symmetric_lag_grid(10 * kTc, 201);
    for (std::size_t i = 0; i < curve.size(); ++i) curve.values.push_back(1.0 + noise(rng));
    curve.std_error.assign(curve.size(), 0.01);
    const auto fit = fit_g2(curve, FitModel::single());
    EXPECT_LE(std::abs(fit.amplitudes[0]), 1.96 * fit.amplitude_errors[0])
        << "beta=" << fit.amplitudes[0] << " +- " << fit.amplitude_errors[0];
}

TEST(FitG2, ConstantCurveHasNoStructure)
{
    G2Curve curve;
    curve.lags = symmetric_lag_grid(5 * kTc, 21);
    curve.values.assign(21, 1.0);
    curve.std_error.assign(21, 0.0);
    try {
        fit_g2(curve, FitModel::single());
        FAIL() << "expected FitError";
    } catch (const FitError& e) {
        EXPECT_NE(std::string(e.what()).find("no structure"), std::string::npos);
    }
}

TEST(FitG2, NonConvergenceCarriesBestSoFar)
{
    const auto curve = analytics::analytic_curve(CascadeSpec::rotating_equal(2, kBw), symmetric_lag_grid(3 * kTc, 61));
    FitOptions opt;
    opt.max_iterations = 1;
    opt.starts = 1;
    opt.initial_amplitudes = std::vector<double>{0.3, 0.3};
    opt.initial_bandwidths = std::vector<double>{0.3 * kBw, 4.0 * kBw};
    try {
        fit_g2(curve, FitModel::product(2), opt);
        FAIL() << "expected FitError";
    } catch (const FitError& e) {
        ASSERT_TRUE(e.best_so_far().has_value());
        EXPECT_EQ(e.best_so_far()->amplitudes.size(), 2u);
        EXPECT_FALSE(e.diagnostics().empty());
    }
}

TEST(FitG2, Preconditions)
{
    const auto curve = analytics::analytic_curve(CascadeSpec::rotating_equal(1, kBw), symmetric_lag_grid(3 * kTc, 9));
    EXPECT_THROW(fit_g2(curve, FitModel::single()), ContractViolation);
}

TEST(FitG2Jackknife, SimulatedTwoStageConsistentWithFour)
{
    const auto run = simulate_two_stage(21, 0.0);
    const auto fit = fit_g2_jackknife(run.curve, run.leave_one_out, FitModel::product(2));
    EXPECT_EQ(fit.error_method, "jackknife");
    EXPECT_EQ(fit.jackknife_blocks, 20u);
    EXPECT_GT(fit.g2_zero_error, 0.0);
    EXPECT_LE(std::abs(fit.g2_zero - 4.0), 1.96 * fit.g2_zero_error)
        << "g2(0)=" << fit.g2_zero << " +- " << fit.g2_zero_error;
}

TEST(FitG2Jackknife, DarkCountsPullPeakBelowFour)
{
    const auto run = simulate_two_stage(21, 0.2);
    const auto fit = fit_g2_jackknife(run.curve, run.leave_one_out, FitModel::product(2));
    EXPECT_LT(fit.g2_zero + 1.96 * fit.g2_zero_error, 4.0) << "g2(0)=" << fit.g2_zero << " +- " << fit.g2_zero_error;
}

TEST(FitG2Jackknife, ErrorsIncludeCorrelatedIntensityNoise)
{
    // the Jacobian covariance sees only counting noise; the jackknife is larger
    const auto run = simulate_two_stage(22, 0.0);
    const auto plain = fit_g2(run.curve, FitModel::product(2));
    const auto jk = fit_g2_jackknife(run.curve, run.leave_one_out, FitModel::product(2));
    EXPECT_EQ(plain.g2_zero, jk.g2_zero);
    EXPECT_GT(jk.g2_zero_error, plain.g2_zero_error);
}

TEST(FitG2Jackknife, BlocksSumToFullHistogram)
{
    CascadeSpec spec;
    spec.stages = {SpectralStage::from_coherence_time(kTc)};
    const auto trace = speckle::cascade_intensity_trace(spec, {0.01, kTc / 20, 256, 3, 0});
    const auto [s1, s2] = detection::sample_timetags(trace, {1e6, 0.5, 0.0, 0.0, 3, 0});
    const auto full = detection::coincidence_histogram(s1, s2, kTc / 20, 10 * kTc);
    const auto blocks = detection::coincidence_histogram_blocks(s1, s2, kTc / 20, 10 * kTc, 7);
    EXPECT_EQ(detection::combine_blocks(blocks).counts, full.counts);
    EXPECT_THROW(detection::coincidence_histogram_blocks(s1, s2, kTc / 20, 10 * kTc, 1), ContractViolation);
}

TEST(ProductCurveCheck, AnalyticGapIsZero)
{
    CascadeSpec a, b, ab;
    a.stages = {{kBw, true}};
    b.stages = {{2.0 * kBw, true}};
    ab.stages = {{kBw, true}, {2.0 * kBw, true}};
    const auto lags = symmetric_lag_grid(3 * kTc, 61);
    const auto check = product_curve_check(analytics::analytic_curve(a, lags), analytics::analytic_curve(b, lags),
                                           analytics::analytic_curve(ab, lags));
    EXPECT_EQ(check.rms_gap, 0.0);
    EXPECT_EQ(check.lags.size(), 61u);
    ASSERT_TRUE(check.fit_a && check.fit_b);
    EXPECT_LT(check.fitted_rms_gap, 1e-6);
}

TEST(ProductCurveCheck, SimulatedGapWithinPooledError)
{
    CascadeSpec a, b, ab;
    a.stages = {SpectralStage::from_coherence_time(2 * kTc)};
    b.stages = {SpectralStage::from_coherence_time(kTc)};
    ab.stages = {a.stages[0], b.stages[0]};
    auto run = [&](const CascadeSpec& spec, std::uint64_t seed) {
        const auto trace = speckle::cascade_intensity_trace(spec, {0.2, kTc / 20.0, 256, seed, 0});
        const auto [s1, s2] = detection::sample_timetags(trace, {1e6, 0.5, 0.0, 0.0, seed, 0});
        const auto h = detection::coincidence_histogram(s1, s2, kTc / 20.0, 21 * kTc);
        return detection::normalize_histogram(h, detection::BaselineWindow::for_coherence_time(2 * kTc));
    };
    const auto check = product_curve_check(run(a, 31), run(b, 32), run(ab, 33));
    EXPECT_LT(check.rms_gap, 3.0 * check.pooled_std_error) << check.report;
}

TEST(ProductCurveCheck, NarrowedCurveReportsSign)
{
    CascadeSpec a, b, ab;
    a.stages = {{kBw, true}};
    b.stages = {{2.0 * kBw, true}};
    ab.stages = {{1.3 * kBw, true}, {2.6 * kBw, true}};  // 30% narrower than the product
    const auto lags = symmetric_lag_grid(3 * kTc, 61);
    auto with_errors = [](G2Curve c) {
        c.std_error.assign(c.size(), 1e-3);
        return c;
    };
    const auto check = product_curve_check(with_errors(analytics::analytic_curve(a, lags)),
                                           with_errors(analytics::analytic_curve(b, lags)),
                                           with_errors(analytics::analytic_curve(ab, lags)));
    EXPECT_GT(check.rms_gap, 0.05);
    EXPECT_LT(check.shoulder_residual, 0.0);
    EXPECT_NE(check.report.find("narrower"), std::string::npos) << check.report;
}

TEST(ProductCurveCheck, DisjointRanges)
{
    const auto spec = CascadeSpec::rotating_equal(1, kBw);
    const auto a = analytics::analytic_curve(spec, symmetric_lag_grid(kTc, 11));
    G2Curve far;
    for (int i = 0; i < 11; ++i) {
        far.lags.push_back(5 * kTc + i * kTc);
        far.values.push_back(1.0);
        far.std_error.push_back(0.0);
    }
    EXPECT_THROW(product_curve_check(a, a, far), ContractViolation);
}
