#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "superbunch/analytics.hpp"

using namespace superbunch;
using namespace superbunch::analytics;

namespace {

constexpr double kPi = std::numbers::pi;

// Frozen from high-precision evaluation of K0.
struct K0Ref {
    double x;
    double value;
};
constexpr K0Ref kK0[] = {
    {1e-6, 13.931442073626419459},   {0.001, 7.0236888005623813228},  {0.1, 2.4270690247020165578},
    {0.5, 0.92441907122766586178},   {1.0, 0.42102443824070833334},   {2.0, 0.11389387274953343565},
    {2.5, 0.062347553200366186029},  {5.0, 0.0036910983340425942747}, {10.0, 1.7780062316167651811e-5},
    {50.0, 3.4101677497894955139e-23}, {100.0, 4.6566282291759020189e-45}, {300.0, 3.7236948548891432633e-132},
    {700.0, 4.669776431685376881e-306},
};

CascadeSpec random_spec(std::mt19937_64& eng, int max_stages = 5)
{
    std::uniform_int_distribution<int> count(0, max_stages);
    std::uniform_real_distribution<double> logbw(std::log(1e5), std::log(1e8));
    std::bernoulli_distribution rotating(0.75);
    CascadeSpec spec;
    const int n = count(eng);
    for (int i = 0; i < n; ++i) spec.stages.push_back({std::exp(logbw(eng)), rotating(eng)});
    return spec;
}

}  // namespace

TEST(G2Single, PeakIsTwo)
{
    EXPECT_EQ(g2_single(0.0, 1.0), 2.0);
    EXPECT_EQ(g2_single(0.0, 3.7e6), 2.0);
}

TEST(G2Single, FirstZeroGivesOne)
{
    const double bw = 2.9e6;
    EXPECT_NEAR(g2_single(2.0 * kPi / bw, bw), 1.0, 1e-15);
}

TEST(G2Single, HalfZeroValue)
{
    const double bw = 5.8e6;
    const double tau = kPi / bw;
    EXPECT_NEAR(g2_single(tau, bw), 1.405284734569351085775518, 1e-14);
    EXPECT_NEAR(g2_single(tau, bw), oracle::g2_single_by_frequency_integral(tau, bw), 1e-9);
}

TEST(G2Single, MatchesFrequencyIntegralOnGrid)
{
    const double bw = 1.0;
    for (double tau = -20.0; tau <= 20.0; tau += 0.37)
        EXPECT_NEAR(g2_single(tau, bw), oracle::g2_single_by_frequency_integral(tau, bw), 1e-9) << tau;
}

TEST(G2Single, ContinuousAtZero)
{
    const double bw = 1e6;
    EXPECT_NEAR(g2_single(1e-14, bw), 2.0, 1e-12);
    EXPECT_NEAR(g2_single(-1e-14, bw), 2.0, 1e-12);
}

TEST(G2Single, RejectsNonPositiveBandwidth)
{
    EXPECT_THROW(g2_single(0.0, 0.0), std::domain_error);
    EXPECT_THROW(g2_single(1.0, -2.0), std::domain_error);
}

TEST(G2Cascade, Examples)
{
    EXPECT_EQ(g2_cascade(0.0, CascadeSpec::rotating_equal(2, 1e6)), 4.0);
    EXPECT_EQ(g2_cascade(0.0, CascadeSpec::rotating_equal(3, 1e6)), 8.0);
    CascadeSpec all_static;
    all_static.stages = {{1e6, false}, {2e6, false}};
    EXPECT_EQ(g2_cascade(0.0, all_static), 1.0);
    EXPECT_EQ(g2_cascade(1e-6, all_static), 1.0);
    EXPECT_EQ(g2_cascade(0.0, CascadeSpec{}), 1.0);
}

TEST(G2Cascade, ProductOfSingleStageFactors)
{
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> lag(-5e-5, 5e-5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto spec = random_spec(eng);
        const double tau = lag(eng);
        double expected = 1.0;
        for (const auto& s : spec.stages)
            if (s.rotating) expected *= g2_single(tau, s.bandwidth);
        EXPECT_EQ(g2_cascade(tau, spec), expected);
        EXPECT_EQ(g2_cascade(0.0, spec), g2_zero(static_cast<int>(spec.rotating_count())));
    }
}

TEST(G2Cascade, EvenPeakedAndDecaying)
{
    std::mt19937_64 eng(12);
    for (int trial = 0; trial < 50; ++trial) {
        auto spec = random_spec(eng);
        if (spec.rotating_count() == 0) continue;
        double min_bw = 1e300;
        for (const auto& s : spec.stages)
            if (s.rotating) min_bw = std::min(min_bw, s.bandwidth);
        const double tc = 2.0 * kPi / min_bw;
        const double peak = g2_cascade(0.0, spec);
        for (int k = 1; k <= 400; ++k) {
            const double tau = k * tc / 40.0;
            EXPECT_EQ(g2_cascade(tau, spec), g2_cascade(-tau, spec));
            EXPECT_LE(g2_cascade(tau, spec), peak);
        }
        EXPECT_NEAR(g2_cascade(100.0 * tc, spec), 1.0, 1e-3);
    }
}

TEST(G2Cascade, StageOrderAndStaticStagesDoNotMatter)
{
    std::mt19937_64 eng(13);
    for (int trial = 0; trial < 100; ++trial) {
        auto spec = random_spec(eng);
        auto shuffled = spec;
        std::shuffle(shuffled.stages.begin(), shuffled.stages.end(), eng);
        CascadeSpec without_static;
        for (const auto& s : spec.stages)
            if (s.rotating) without_static.stages.push_back(s);
        for (double tau : {0.0, 3e-7, -1.1e-6, 4.2e-5}) {
            EXPECT_NEAR(g2_cascade(tau, spec), g2_cascade(tau, shuffled), 1e-13 * g2_cascade(tau, spec));
            EXPECT_EQ(g2_cascade(tau, spec), g2_cascade(tau, without_static));
        }
    }
}

TEST(G2Zero, ExactPowersOfTwo)
{
    EXPECT_EQ(g2_zero(0), 1.0);
    EXPECT_EQ(g2_zero(1), 2.0);
    EXPECT_EQ(g2_zero(2), 4.0);
    EXPECT_EQ(g2_zero(62), 4611686018427387904.0);
    EXPECT_THROW(g2_zero(63), std::range_error);
    EXPECT_THROW(g2_zero(-1), std::domain_error);
}

TEST(AnalyticCurve, MatchesPointwiseEvaluation)
{
    const auto spec = CascadeSpec::rotating_equal(2, 3e6);
    const auto lags = symmetric_lag_grid(5e-6, 21);
    const auto curve = analytic_curve(spec, lags);
    ASSERT_EQ(curve.size(), 21u);
    EXPECT_EQ(curve.values[10], 4.0);
    for (std::size_t i = 0; i < lags.size(); ++i) {
        EXPECT_EQ(curve.values[i], g2_cascade(lags[i], spec));
        EXPECT_EQ(curve.std_error[i], 0.0);
    }
}

TEST(PdfExponential, Examples)
{
    EXPECT_EQ(pdf_exponential(0.0, 1.0), 1.0);
    EXPECT_NEAR(integrate_log([](double x) { return pdf_exponential(x, 1.0); }, 1e-12, 60.0), 1.0, 1e-10);
    EXPECT_NEAR(integrate_log([](double x) { return x * x * pdf_exponential(x, 2.5); }, 1e-12, 200.0), 2.0 * 2.5 * 2.5,
                1e-9);
    EXPECT_THROW(pdf_exponential(-1.0, 1.0), std::domain_error);
    EXPECT_THROW(pdf_exponential(1.0, 0.0), std::domain_error);
}

TEST(BesselK0, FrozenReferenceValues)
{
    for (const auto& r : kK0) EXPECT_NEAR(bessel_k0(r.x), r.value, 1e-10 * r.value) << "x=" << r.x;
}

TEST(BesselK0, AgreesWithIntegralRepresentation)
{
    for (double x : {1e-3, 0.3, 1.0, 1.9, 2.1, 4.0, 10.0, 30.0, 120.0})
        EXPECT_NEAR(bessel_k0(x), oracle::k0_trapezoid(x), 1e-10 * oracle::k0_trapezoid(x)) << "x=" << x;
}

TEST(BesselK0, DivergesMonotonicallyAtZero)
{
    double prev = bessel_k0(1.0);
    for (double x = 0.5; x > 1e-12; x *= 0.5) {
        const double v = bessel_k0(x);
        EXPECT_GT(v, prev);
        prev = v;
    }
    EXPECT_GT(prev, 25.0);
}

TEST(BesselK0, RejectsNonPositive)
{
    EXPECT_THROW(bessel_k0(0.0), std::domain_error);
    EXPECT_THROW(bessel_k0(-1.0), std::domain_error);
}

TEST(PdfCompound, ClosedFormsForOneAndTwoStages)
{
    EXPECT_EQ(pdf_compound(0.7, 1.3, 1), pdf_exponential(0.7, 1.3));
    EXPECT_EQ(pdf_compound(0.7, 1.3, 2), 2.0 / 1.3 * bessel_k0(2.0 * std::sqrt(0.7 / 1.3)));
}

TEST(PdfCompound, TwoStageNormalizationAndSecondMoment)
{
    for (double mean : {1.0, 0.25, 40.0}) {
        EXPECT_NEAR(compound_moment_by_quadrature(0, 2, mean), 1.0, 1e-6) << mean;
    }
    EXPECT_NEAR(compound_moment_by_quadrature(2, 2, 1.0), 4.0, 4e-6);
}

TEST(PdfCompound, ThreeStageSecondMoment)
{
    EXPECT_NEAR(compound_moment_by_quadrature(2, 3, 1.0), 8.0, 1e-3);
}

TEST(PdfCompound, QuadratureMomentsMatchClosedForm)
{
    for (int n = 1; n <= 3; ++n) {
        EXPECT_NEAR(compound_moment_by_quadrature(0, n, 1.7), 1.0, 1e-6) << "n=" << n;
        for (int q = 1; q <= 3; ++q) {
            const double expected = moment(q, n, 1.7);
            EXPECT_NEAR(compound_moment_by_quadrature(q, n, 1.7), expected, 1e-3 * expected) << "q=" << q << " n=" << n;
        }
    }
}

TEST(PdfCompound, ThreeStageIsExponentialMixtureOfTwoStage)
{
    // Independent check of the nesting at one point: direct quadrature in x.
    const double I = 0.4;
    const double direct = integrate_log([&](double x) { return pdf_k0(I, x) * std::exp(-x) ; }, 1e-12, 80.0, 1e-11);
    EXPECT_NEAR(pdf_compound(I, 1.0, 3), direct, 1e-8 * direct);
}

TEST(PdfCompound, Errors)
{
    EXPECT_THROW(pdf_compound(1.0, 1.0, 0), std::domain_error);
    EXPECT_THROW(pdf_compound(0.0, 1.0, 2), std::domain_error);
    EXPECT_THROW(pdf_compound(1.0, -1.0, 2), std::domain_error);
}

TEST(IntegrateLog, ReportsNonConvergence)
{
    try {
        integrate_log([](double x) { return std::sin(1e6 * x) * 1e3; }, 1e-3, 1e3, 1e-14);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_FALSE(e.diagnostics().empty());
    }
}

TEST(Moment, Examples)
{
    EXPECT_EQ(moment(2, 2, 1.0), 4.0);
    EXPECT_EQ(moment(1, 5, 3.5), 3.5);
    EXPECT_EQ(moment(3, 2, 1.0), 36.0);
    EXPECT_EQ(moment(2, 0, 2.0), 4.0);
    EXPECT_EQ(moment(3, 3, 1.0), 216.0);
}

TEST(Moment, ThirtySixAgreesWithSampling)
{
    const auto [mean, se] = oracle::product_of_exponentials_moment(3, 2, 10'000'000, 99);
    EXPECT_NEAR(mean, moment(3, 2, 1.0), 3.0 * se);
}

TEST(Moment, LargeExactAndOverflow)
{
    // (20!)^3 is beyond 64 bits: falls back to floating point.
    EXPECT_NEAR(moment(20, 3, 1.0), std::pow(2432902008176640000.0, 3), 1e-12 * std::pow(2432902008176640000.0, 3));
    EXPECT_THROW(moment(20, 20, 1.0), std::range_error);
    EXPECT_THROW(moment(21, 1, 1.0), std::range_error);
    EXPECT_THROW(moment(0, 1, 1.0), std::domain_error);
    EXPECT_THROW(moment(1, -1, 1.0), std::domain_error);
}

TEST(MomentTable, Invariants)
{
    const auto t = moment_table(2.5, 4, 5);
    for (int n = 0; n <= 5; ++n) EXPECT_EQ(t.at(1, n), 2.5);
    for (int q = 1; q <= 4; ++q)
        for (int n = 0; n <= 5; ++n) {
            double f = 1.0;
            for (int k = 2; k <= q; ++k) f *= k;
            EXPECT_NEAR(t.at(q, n), std::pow(2.5, q) * std::pow(f, n), 1e-12 * t.at(q, n));
        }
}
