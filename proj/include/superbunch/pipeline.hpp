#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "superbunch/analytics.hpp"
#include "superbunch/config.hpp"
#include "superbunch/detection.hpp"
#include "superbunch/errors.hpp"
#include "superbunch/fitting.hpp"
#include "superbunch/io.hpp"
#include "superbunch/paths.hpp"
#include "superbunch/random.hpp"
#include "superbunch/speckle.hpp"
#include "superbunch/stats.hpp"

// Orchestration of the modules into reproducible runs. Each mode writes its
// artifacts under the configured output directory; file names are fixed per
// mode so that repeated runs can be compared byte for byte.
//
// Automatic ("0") settings, in terms of the longest and shortest stage
// coherence times T and t over all configured stages (rotating or not):
//   grid.max_lag          3 T
//   simulation.dt         t / 20
//   simulation.duration   cascade: 2000 T; detect/fig4/crosscheck: max(2000 T, 2e5 / mean_rate)
//   detection.bin_width   t / 20
//   detection.max_lag     10.5 T
//   fit baseline          [8, 10] x longest rotating coherence time of the run

namespace superbunch::pipeline {

enum class Mode { analytic, paths_mc, cascade, detect, fit, fig4, crosscheck };

inline Mode parse_mode(const std::string& s)
{
    if (s == "analytic") return Mode::analytic;
    if (s == "paths-mc") return Mode::paths_mc;
    if (s == "cascade") return Mode::cascade;
    if (s == "detect") return Mode::detect;
    if (s == "fit") return Mode::fit;
    if (s == "fig4") return Mode::fig4;
    if (s == "crosscheck") return Mode::crosscheck;
    throw std::invalid_argument("unknown mode '" + s + "'");
}

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr std::uint64_t kScenarioStream = 0x46494734ULL;
inline constexpr std::uint64_t kDetectorStream = 0x44455445ULL;

/// Concrete values for every automatic setting.
struct Resolved {
    double longest = 0.0;
    double shortest = 0.0;
    double grid_max_lag = 0.0;
    double dt = 0.0;
    double cascade_duration = 0.0;
    double detect_duration = 0.0;
    double bin_width = 0.0;
    double max_lag = 0.0;
};

inline Resolved resolve(const config::ExperimentConfig& c)
{
    if (c.cascade.stages.empty()) throw ConfigError("cascade.stages", "at least one stage is required");
    Resolved r;
    r.longest = 0.0;
    r.shortest = std::numeric_limits<double>::infinity();
    for (const auto& s : c.cascade.stages) {
        r.longest = std::max(r.longest, s.coherence_time());
        r.shortest = std::min(r.shortest, s.coherence_time());
    }
    r.grid_max_lag = c.grid_max_lag > 0.0 ? c.grid_max_lag : 3.0 * r.longest;
    r.dt = c.dt > 0.0 ? c.dt : r.shortest / 20.0;
    r.cascade_duration = c.duration > 0.0 ? c.duration : 2000.0 * r.longest;
    r.detect_duration = c.duration > 0.0 ? c.duration : std::max(2000.0 * r.longest, 2e5 / c.mean_rate);
    r.bin_width = c.bin_width > 0.0 ? c.bin_width : r.shortest / 20.0;
    r.max_lag = c.max_lag > 0.0 ? c.max_lag : 10.5 * r.longest;
    return r;
}

inline fitting::FitModel fit_model_for(const config::ExperimentConfig& c, const CascadeSpec& spec)
{
    if (c.fit_model != "auto") return fitting::FitModel::parse(c.fit_model);
    const auto n = static_cast<int>(spec.rotating_count());
    return n <= 1 ? fitting::FitModel::single() : fitting::FitModel::product(n);
}

inline detection::BaselineWindow baseline_for(const config::ExperimentConfig& c, const CascadeSpec& spec, const Resolved& r)
{
    const double t = spec.rotating_count() ? spec.longest_coherence_time() : r.longest;
    auto w = detection::BaselineWindow::for_coherence_time(t);
    if (c.baseline_lower > 0.0) w.lower = c.baseline_lower;
    if (c.baseline_upper > 0.0) w.upper = c.baseline_upper;
    return w;
}

/// Trace -> tags -> histogram -> normalized curve for one cascade.
struct DetectionRun {
    speckle::IntensityTrace trace;
    detection::TimeTagStream channel1, channel2;
    detection::CoincidenceHistogram histogram;
    std::vector<detection::CoincidenceHistogram> blocks;  ///< time slices for jackknife errors, empty if disabled
    detection::BaselineWindow window;
    G2Curve curve;
};

inline speckle::SynthesisParams synthesis_params(const config::ExperimentConfig& c, double duration, const Resolved& r,
                                                 std::uint64_t seed)
{
    return {duration, r.dt, c.modes, seed, c.workers};
}

inline detection::DetectorSettings detector_settings(const config::ExperimentConfig& c, std::uint64_t seed, double dark_rate)
{
    return {c.mean_rate, c.split_ratio, c.dead_time, dark_rate, derive_seed(seed, kDetectorStream), c.workers};
}

inline DetectionRun detect_from_trace(const config::ExperimentConfig& c, const CascadeSpec& spec,
                                      speckle::IntensityTrace trace, std::uint64_t seed, double dark_rate)
{
    const Resolved r = resolve(c);
    DetectionRun run;
    run.trace = std::move(trace);
    std::tie(run.channel1, run.channel2) = detection::sample_timetags(run.trace, detector_settings(c, seed, dark_rate));
    if (c.jackknife_blocks >= 2) {
        run.blocks = detection::coincidence_histogram_blocks(run.channel1, run.channel2, r.bin_width, r.max_lag,
                                                             c.jackknife_blocks, c.workers);
        run.histogram = detection::combine_blocks(run.blocks);
    } else {
        run.histogram = detection::coincidence_histogram(run.channel1, run.channel2, r.bin_width, r.max_lag, c.workers);
    }
    run.window = baseline_for(c, spec, r);
    run.curve = detection::normalize_histogram(run.histogram, run.window);
    return run;
}

/// Jackknife errors over the run's time blocks when available, otherwise
/// the Jacobian covariance (counting noise only).
inline fitting::FitResult fit_detection(const DetectionRun& run, const fitting::FitModel& model)
{
    if (run.blocks.empty()) return fitting::fit_g2(run.curve, model);
    return fitting::fit_g2_jackknife(run.curve, detection::leave_one_out_curves(run.blocks, run.window), model);
}

inline DetectionRun run_detection(const config::ExperimentConfig& c, const CascadeSpec& spec, std::uint64_t seed,
                                  double dark_rate)
{
    const Resolved r = resolve(c);
    auto trace = speckle::cascade_intensity_trace(spec, synthesis_params(c, r.detect_duration, r, seed));
    return detect_from_trace(c, spec, std::move(trace), seed, dark_rate);
}

/// The three Fig. 4 scenarios plus the dark-count variant of the two-stage run.
struct Fig4Scenario {
    std::string name;
    CascadeSpec spec;
    double dark_rate = 0.0;
    G2Curve curve;
    detection::CoincidenceHistogram histogram;
    fitting::FitResult fit;
};

struct Fig4Result {
    std::vector<Fig4Scenario> scenarios;  ///< a, b, c, c_dark
    fitting::FitResult two_stage_single_fit;
    fitting::ProductCheck product_check;

    const Fig4Scenario& at(const std::string& name) const
    {
        for (const auto& s : scenarios)
            if (s.name == name) return s;
        throw std::out_of_range("no scenario " + name);
    }
};

/// Requires a two-stage cascade. Scenario seeds are independent; the
/// dark-count run reuses the two-stage trace and photon stream so that only
/// the dark counts differ.
inline Fig4Result run_fig4(const config::ExperimentConfig& c)
{
    if (c.cascade.stages.size() != 2) throw ConfigError("cascade.stages", "fig4 needs exactly two stages");
    auto with = [&](bool first, bool second) {
        CascadeSpec s = c.cascade;
        s.stages[0].rotating = first;
        s.stages[1].rotating = second;
        return s;
    };
    const double signal_per_channel = c.mean_rate * std::min(c.split_ratio, 1.0 - c.split_ratio);
    Fig4Result out;
    out.scenarios = {{"a", with(false, true), c.dark_rate, {}, {}, {}},
                     {"b", with(true, false), c.dark_rate, {}, {}, {}},
                     {"c", with(true, true), c.dark_rate, {}, {}, {}},
                     {"c_dark", with(true, true), c.dark_rate + c.fig4_dark_fraction * signal_per_channel, {}, {}, {}}};

    std::optional<speckle::IntensityTrace> two_stage_trace;
    for (std::size_t i = 0; i < out.scenarios.size(); ++i) {
        auto& sc = out.scenarios[i];
        const std::uint64_t seed = derive_seed(c.seed, kScenarioStream, std::min<std::size_t>(i, 2));
        DetectionRun run;
        if (sc.name == "c_dark" && two_stage_trace) {
            run = detect_from_trace(c, sc.spec, std::move(*two_stage_trace), seed, sc.dark_rate);
        } else {
            run = run_detection(c, sc.spec, seed, sc.dark_rate);
            if (sc.name == "c") two_stage_trace = run.trace;
        }
        sc.fit = fit_detection(run, fit_model_for(c, sc.spec));
        if (sc.name == "c") out.two_stage_single_fit = fit_detection(run, fitting::FitModel::single());
        sc.curve = std::move(run.curve);
        sc.histogram = std::move(run.histogram);
    }
    out.product_check = fitting::product_curve_check(out.at("a").curve, out.at("b").curve, out.at("c").curve);
    return out;
}

/// Curves from every estimator on a common lag grid (the sample-rounded
/// grid of the correlator), plus pairwise agreement.
struct CrosscheckResult {
    G2Curve analytic, paths_mc, cascade, detect;
    struct Pair {
        std::string name;
        stats::CurveAgreement agreement;
        bool consistent = false;
    };
    std::vector<Pair> pairs;

    bool consistent() const
    {
        return std::all_of(pairs.begin(), pairs.end(), [](const Pair& p) { return p.consistent; });
    }
};

/// Nearest-bin lookup of a histogram-derived curve at the given lags.
inline G2Curve sample_curve_at(const G2Curve& c, const std::vector<double>& lags)
{
    G2Curve out;
    for (double tau : lags) {
        auto it = std::lower_bound(c.lags.begin(), c.lags.end(), tau);
        std::size_t i = static_cast<std::size_t>(it - c.lags.begin());
        if (i == c.size() || (i > 0 && tau - c.lags[i - 1] < c.lags[i] - tau)) --i;
        out.lags.push_back(tau);
        out.values.push_back(c.values[i]);
        out.std_error.push_back(c.std_error[i]);
    }
    return out;
}

inline CrosscheckResult run_crosscheck(const config::ExperimentConfig& c)
{
    const Resolved r = resolve(c);
    CrosscheckResult out;
    const std::uint64_t seed = derive_seed(c.seed, kScenarioStream, 100);
    auto run = run_detection(c, c.cascade, seed, c.dark_rate);
    out.cascade = speckle::correlate(run.trace, r.grid_max_lag, c.grid_points,
                                     {0.0, 200, derive_seed(seed, speckle::kBootstrapStream), c.workers});
    const auto& lags = out.cascade.lags;
    out.analytic = analytics::analytic_curve(c.cascade, lags);
    out.paths_mc = paths::g2_mc_curve(c.cascade, lags, {c.realizations, derive_seed(c.seed, paths::kPathStream), c.workers, false});
    out.detect = sample_curve_at(run.curve, lags);

    auto add = [&](const std::string& name, const G2Curve& a, const G2Curve& b) {
        const auto agreement = stats::compare_curves(a, b);
        out.pairs.push_back({name, agreement, agreement.rms_deviation <= 3.0 * agreement.pooled_std_error});
    };
    add("paths-mc vs analytic", out.paths_mc, out.analytic);
    add("cascade vs analytic", out.cascade, out.analytic);
    add("detect vs analytic", out.detect, out.analytic);
    add("paths-mc vs cascade", out.paths_mc, out.cascade);
    add("detect vs cascade", out.detect, out.cascade);
    return out;
}

namespace detail {

inline std::string fmt_fit_line(const std::string& label, const fitting::FitResult& f)
{
    std::ostringstream s;
    s.precision(4);
    s << label << ": model=" << f.model.name() << " g2_zero=" << f.g2_zero << " +- " << f.g2_zero_error
      << " coherence_times_us=";
    for (std::size_t i = 0; i < f.coherence_times.size(); ++i) s << (i ? "," : "") << f.coherence_times[i] * 1e6;
    return s.str();
}

}  // namespace detail

struct RunOptions {
    std::optional<std::filesystem::path> input;  ///< fit mode: curve CSV
};

/// Runs one mode and writes its artifacts. Throws module exceptions; use
/// run_and_report for exit-code mapping.
inline std::vector<std::filesystem::path> run_pipeline(const config::ExperimentConfig& c, Mode mode,
                                                       const RunOptions& opt, std::ostream& log)
{
    config::validate(c);
    const Resolved r = resolve(c);
    const std::filesystem::path dir = c.output_directory;
    const io::Header h = config::header_for(c);
    std::vector<std::filesystem::path> files;
    auto out = [&](const std::string& name) {
        files.push_back(dir / name);
        return files.back();
    };
    const std::string trace_ext = c.format == io::Format::csv ? ".csv" : ".bin";
    const auto grid = symmetric_lag_grid(r.grid_max_lag, c.grid_points);

    switch (mode) {
    case Mode::analytic: {
        const auto curve = analytics::analytic_curve(c.cascade, grid);
        io::write_curve_csv(out("analytic_curve.csv"), curve, h);
        log << "analytic: g2(0) = " << analytics::g2_cascade(0.0, c.cascade) << "\n";
        break;
    }
    case Mode::paths_mc: {
        const auto curve = paths::g2_mc_curve(c.cascade, grid, {c.realizations, derive_seed(c.seed, paths::kPathStream), c.workers, false});
        io::write_curve_csv(out("paths_mc_curve.csv"), curve, h);
        const auto mid = curve.size() / 2;
        log << "paths-mc: g2(" << curve.lags[mid] << ") = " << curve.values[mid] << " +- " << curve.std_error[mid] << "\n";
        break;
    }
    case Mode::cascade: {
        const auto trace = speckle::cascade_intensity_trace(c.cascade, synthesis_params(c, r.cascade_duration, r, c.seed));
        const auto curve = speckle::correlate(trace, r.grid_max_lag, c.grid_points,
                                              {0.0, 200, derive_seed(c.seed, speckle::kBootstrapStream), c.workers});
        io::write_trace(out("cascade_trace" + trace_ext), trace, c.format, h);
        io::write_curve_csv(out("cascade_curve.csv"), curve, h);
        const auto mid = curve.size() / 2;
        log << "cascade: " << trace.samples.size() << " samples, g2(" << curve.lags[mid] << ") = " << curve.values[mid]
            << " +- " << curve.std_error[mid] << "\n";
        break;
    }
    case Mode::detect: {
        const auto run = run_detection(c, c.cascade, c.seed, c.dark_rate);
        io::write_tags(out("detect_tags" + trace_ext), run.channel1, run.channel2, c.format, h);
        io::write_histogram_csv(out("detect_histogram.csv"), run.histogram, h);
        io::write_curve_csv(out("detect_curve.csv"), run.curve, h);
        log << "detect: " << run.channel1.size() << " + " << run.channel2.size() << " tags, "
            << run.histogram.total() << " coincidences\n";
        break;
    }
    case Mode::fit: {
        if (!opt.input) throw ConfigError("--input", "fit mode needs an input curve CSV");
        const auto curve = io::read_curve_csv(*opt.input);
        const auto fit = fitting::fit_g2(curve, fit_model_for(c, c.cascade));
        io::write_fit(out("fit.txt"), fit, h);
        io::write_fit_residuals(out("fit_residuals.csv"), curve, fit, h);
        log << detail::fmt_fit_line("fit", fit) << "\n";
        break;
    }
    case Mode::fig4: {
        const auto result = run_fig4(c);
        std::ostringstream summary;
        for (const auto& sc : result.scenarios) {
            io::write_histogram_csv(out("fig4_" + sc.name + "_histogram.csv"), sc.histogram, h);
            io::write_curve_csv(out("fig4_" + sc.name + "_curve.csv"), sc.curve, h);
            io::write_fit(out("fig4_" + sc.name + "_fit.txt"), sc.fit, h);
            io::write_fit_residuals(out("fig4_" + sc.name + "_residuals.csv"), sc.curve, sc.fit, h);
            summary << detail::fmt_fit_line(sc.name, sc.fit) << " dark_rate=" << sc.dark_rate << "\n";
        }
        io::write_fit(out("fig4_c_single_fit.txt"), result.two_stage_single_fit, h);
        summary << detail::fmt_fit_line("c (single-sinc model)", result.two_stage_single_fit) << "\n";
        io::write_text(out("fig4_product_check.txt"), result.product_check.report, h);
        {
            auto f = io::detail::open_out(out("fig4_product_residuals.csv"));
            f << h.line() << "\nlag_s,direct_residual,fitted_residual\n";
            const auto& pc = result.product_check;
            for (std::size_t i = 0; i < pc.lags.size(); ++i)
                f << io::fmt(pc.lags[i]) << ',' << io::fmt(pc.direct_residuals[i]) << ','
                  << io::fmt(i < pc.fitted_residuals.size() ? pc.fitted_residuals[i] : 0.0) << '\n';
        }
        io::write_text(out("fig4_summary.txt"), summary.str(), h);
        log << summary.str() << result.product_check.report;
        break;
    }
    case Mode::crosscheck: {
        const auto result = run_crosscheck(c);
        io::write_curve_csv(out("crosscheck_analytic.csv"), result.analytic, h);
        io::write_curve_csv(out("crosscheck_paths_mc.csv"), result.paths_mc, h);
        io::write_curve_csv(out("crosscheck_cascade.csv"), result.cascade, h);
        io::write_curve_csv(out("crosscheck_detect.csv"), result.detect, h);
        std::ostringstream rep;
        rep.precision(4);
        for (const auto& p : result.pairs)
            rep << p.name << ": rms=" << p.agreement.rms_deviation << " pooled_stderr=" << p.agreement.pooled_std_error
                << (p.consistent ? " ok" : " INCONSISTENT") << "\n";
        io::write_text(out("crosscheck_report.txt"), rep.str(), h);
        log << rep.str();
        if (!result.consistent()) throw NumericalError("crosscheck failed", "estimators disagree beyond 3 pooled standard errors");
        break;
    }
    }
    return files;
}

/// run_pipeline with the exit-code contract: 0 success, 2 configuration or
/// precondition error, 3 numerical or fit error, 1 anything else (I/O).
inline int run_and_report(const config::ExperimentConfig& c, Mode mode, const RunOptions& opt, std::ostream& log,
                          std::ostream& err)
{
    try {
        run_pipeline(c, mode, opt, log);
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ContractViolation& e) {
        err << "invalid parameters: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::domain_error& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::range_error& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace superbunch::pipeline
