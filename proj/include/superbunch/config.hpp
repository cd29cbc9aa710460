#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "superbunch/errors.hpp"
#include "superbunch/fitting.hpp"
#include "superbunch/io.hpp"
#include "superbunch/types.hpp"

// Experiment configuration: one JSON document with nested sections. Every
// field is optional; absent fields keep their defaults, and numeric fields
// documented as "0 = auto" are derived from the cascade at run time.
//
// {
//   "cascade":    { "stages": [ {"coherence_time": 2.15e-6, "rotating": true}, ... ],
//                   "central_frequency": 2.415e15 },
//   "grid":       { "max_lag": 0, "points": 21 },
//   "simulation": { "duration": 0, "dt": 0, "modes": 256, "seed": 1, "realizations": 100000 },
//   "detection":  { "mean_rate": 1e6, "split_ratio": 0.5, "dead_time": 0, "dark_rate": 0,
//                   "bin_width": 0, "max_lag": 0, "fig4_dark_fraction": 0.2 },
//   "fit":        { "model": "auto", "baseline_lower": 0, "baseline_upper": 0, "jackknife_blocks": 20 },
//   "output":     { "directory": "out", "format": "csv" },
//   "runtime":    { "workers": 0 }
// }
//
// A stage may give "bandwidth" (rad/s) instead of "coherence_time"; it is
// always serialized as "bandwidth". Precedence: defaults < file < flags.

namespace superbunch::config {

using json = nlohmann::json;

struct ExperimentConfig {
    CascadeSpec cascade = default_cascade();

    double grid_max_lag = 0.0;        ///< 0 = 3 x longest stage coherence time
    std::size_t grid_points = 21;

    double duration = 0.0;            ///< 0 = mode-dependent, see pipeline
    double dt = 0.0;                  ///< 0 = shortest stage coherence time / 20
    std::size_t modes = 256;
    std::uint64_t seed = 1;
    std::size_t realizations = 100000;

    double mean_rate = 1e6;           ///< total detected rate before the splitter, counts/s
    double split_ratio = 0.5;
    double dead_time = 0.0;
    double dark_rate = 0.0;           ///< per detector, counts/s
    double bin_width = 0.0;           ///< 0 = shortest stage coherence time / 20
    double max_lag = 0.0;             ///< 0 = 10.5 x longest stage coherence time
    double fig4_dark_fraction = 0.2;  ///< dark rate of the fig4 dark-count run, as a fraction of the per-channel signal rate

    std::string fit_model = "auto";   ///< auto | single | product-N
    double baseline_lower = 0.0;      ///< 0 = 8 x longest coherence time of the run
    double baseline_upper = 0.0;      ///< 0 = 10 x longest coherence time of the run
    std::size_t jackknife_blocks = 20;  ///< fit errors of detection runs; 0 = Jacobian (counting noise only)

    std::string output_directory = "out";
    io::Format format = io::Format::csv;

    unsigned workers = 0;

    /// Two rotating stages with coherence times 2.15 us and 1.08 us.
    static CascadeSpec default_cascade()
    {
        CascadeSpec spec;
        spec.stages = {SpectralStage::from_coherence_time(2.15e-6), SpectralStage::from_coherence_time(1.08e-6)};
        return spec;
    }

    friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return to_json(a) == to_json(b); }

    static json to_json(const ExperimentConfig& c);
};

namespace detail {

inline void fail(const std::string& field, const std::string& message) { throw ConfigError(field, message); }

inline void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed)
{
    if (!obj.is_object()) fail(path, "must be an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown field");
}

inline double number(const json& obj, const std::string& key, const std::string& path, double fallback)
{
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path + "." + key, "must be finite");
    return d;
}

inline std::uint64_t unsigned_integer(const json& obj, const std::string& key, const std::string& path, std::uint64_t fallback)
{
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        fail(path + "." + key, "must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::string string(const json& obj, const std::string& key, const std::string& path, const std::string& fallback)
{
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(path + "." + key, "must be a string");
    return v.get<std::string>();
}

inline bool boolean(const json& obj, const std::string& key, const std::string& path, bool fallback)
{
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) fail(path + "." + key, "must be true or false");
    return v.get<bool>();
}

inline json section(const json& root, const std::string& name, const std::set<std::string>& allowed)
{
    if (!root.contains(name)) return json::object();
    const json& s = root.at(name);
    check_keys(s, name, allowed);
    return s;
}

}  // namespace detail

/// Field-level validation; throws ConfigError naming the offending field.
inline void validate(const ExperimentConfig& c)
{
    using detail::fail;
    for (std::size_t i = 0; i < c.cascade.stages.size(); ++i) {
        const auto& s = c.cascade.stages[i];
        if (!(s.bandwidth > 0.0) || !std::isfinite(s.bandwidth))
            fail("cascade.stages[" + std::to_string(i) + "].bandwidth", "must be positive and finite");
    }
    if (!(c.cascade.central_frequency > 0.0)) fail("cascade.central_frequency", "must be positive");
    if (c.grid_max_lag < 0.0) fail("grid.max_lag", "must be >= 0 (0 = auto)");
    if (c.grid_points < 2) fail("grid.points", "must be >= 2");
    if (c.duration < 0.0) fail("simulation.duration", "must be >= 0 (0 = auto)");
    if (c.dt < 0.0) fail("simulation.dt", "must be >= 0 (0 = auto)");
    if (c.modes < 64) fail("simulation.modes", "must be >= 64");
    if (c.realizations < 1000) fail("simulation.realizations", "must be >= 1000");
    if (!(c.mean_rate > 0.0)) fail("detection.mean_rate", "must be positive");
    if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) fail("detection.split_ratio", "must lie in (0, 1)");
    if (c.dead_time < 0.0) fail("detection.dead_time", "must be >= 0");
    if (c.dark_rate < 0.0) fail("detection.dark_rate", "must be >= 0");
    if (c.bin_width < 0.0) fail("detection.bin_width", "must be >= 0 (0 = auto)");
    if (c.max_lag < 0.0) fail("detection.max_lag", "must be >= 0 (0 = auto)");
    if (c.fig4_dark_fraction < 0.0) fail("detection.fig4_dark_fraction", "must be >= 0");
    if (c.fit_model != "auto") {
        try {
            (void)fitting::FitModel::parse(c.fit_model);
        } catch (const std::invalid_argument&) {
            fail("fit.model", "must be auto, single or product-N");
        }
    }
    if (c.baseline_lower < 0.0) fail("fit.baseline_lower", "must be >= 0 (0 = auto)");
    if (c.baseline_upper < 0.0) fail("fit.baseline_upper", "must be >= 0 (0 = auto)");
    if (c.jackknife_blocks == 1) fail("fit.jackknife_blocks", "must be 0 or >= 2");
    if (c.baseline_upper > 0.0 && c.baseline_upper < c.baseline_lower)
        fail("fit.baseline_upper", "must be >= fit.baseline_lower");
    if (c.output_directory.empty()) fail("output.directory", "must not be empty");
}

inline ExperimentConfig from_json(const json& root)
{
    using namespace detail;
    check_keys(root, "", {"cascade", "grid", "simulation", "detection", "fit", "output", "runtime"});
    ExperimentConfig c;

    const json cas = section(root, "cascade", {"stages", "central_frequency"});
    if (cas.contains("stages")) {
        const auto& stages = cas.at("stages");
        if (!stages.is_array()) fail("cascade.stages", "must be an array");
        c.cascade.stages.clear();
        for (std::size_t i = 0; i < stages.size(); ++i) {
            const std::string path = "cascade.stages[" + std::to_string(i) + "]";
            check_keys(stages[i], path, {"bandwidth", "coherence_time", "rotating"});
            const bool has_bw = stages[i].contains("bandwidth");
            const bool has_tc = stages[i].contains("coherence_time");
            if (has_bw == has_tc) fail(path, "give exactly one of bandwidth or coherence_time");
            SpectralStage s;
            if (has_bw) {
                s.bandwidth = number(stages[i], "bandwidth", path, 0.0);
            } else {
                const double tc = number(stages[i], "coherence_time", path, 0.0);
                if (!(tc > 0.0)) fail(path + ".coherence_time", "must be positive");
                s.bandwidth = 2.0 * std::numbers::pi / tc;
            }
            s.rotating = boolean(stages[i], "rotating", path, true);
            c.cascade.stages.push_back(s);
        }
    }
    c.cascade.central_frequency = number(cas, "central_frequency", "cascade", c.cascade.central_frequency);

    const json grid = section(root, "grid", {"max_lag", "points"});
    c.grid_max_lag = number(grid, "max_lag", "grid", c.grid_max_lag);
    c.grid_points = unsigned_integer(grid, "points", "grid", c.grid_points);

    const json sim = section(root, "simulation", {"duration", "dt", "modes", "seed", "realizations"});
    c.duration = number(sim, "duration", "simulation", c.duration);
    c.dt = number(sim, "dt", "simulation", c.dt);
    c.modes = unsigned_integer(sim, "modes", "simulation", c.modes);
    c.seed = unsigned_integer(sim, "seed", "simulation", c.seed);
    c.realizations = unsigned_integer(sim, "realizations", "simulation", c.realizations);

    const json det = section(root, "detection", {"mean_rate", "split_ratio", "dead_time", "dark_rate", "bin_width",
                                                 "max_lag", "fig4_dark_fraction"});
    c.mean_rate = number(det, "mean_rate", "detection", c.mean_rate);
    c.split_ratio = number(det, "split_ratio", "detection", c.split_ratio);
    c.dead_time = number(det, "dead_time", "detection", c.dead_time);
    c.dark_rate = number(det, "dark_rate", "detection", c.dark_rate);
    c.bin_width = number(det, "bin_width", "detection", c.bin_width);
    c.max_lag = number(det, "max_lag", "detection", c.max_lag);
    c.fig4_dark_fraction = number(det, "fig4_dark_fraction", "detection", c.fig4_dark_fraction);

    const json fit = section(root, "fit", {"model", "baseline_lower", "baseline_upper", "jackknife_blocks"});
    c.fit_model = string(fit, "model", "fit", c.fit_model);
    c.baseline_lower = number(fit, "baseline_lower", "fit", c.baseline_lower);
    c.baseline_upper = number(fit, "baseline_upper", "fit", c.baseline_upper);
    c.jackknife_blocks = unsigned_integer(fit, "jackknife_blocks", "fit", c.jackknife_blocks);

    const json out = section(root, "output", {"directory", "format"});
    c.output_directory = string(out, "directory", "output", c.output_directory);
    const std::string format = string(out, "format", "output", io::to_string(c.format));
    try {
        c.format = io::parse_format(format);
    } catch (const std::invalid_argument&) {
        fail("output.format", "must be csv or binary");
    }

    const json rt = section(root, "runtime", {"workers"});
    const auto workers = unsigned_integer(rt, "workers", "runtime", c.workers);
    if (workers > 4096) fail("runtime.workers", "must be <= 4096");
    c.workers = static_cast<unsigned>(workers);

    validate(c);
    return c;
}

inline json ExperimentConfig::to_json(const ExperimentConfig& c)
{
    json stages = json::array();
    for (const auto& s : c.cascade.stages) stages.push_back({{"bandwidth", s.bandwidth}, {"rotating", s.rotating}});
    return {
        {"cascade", {{"stages", stages}, {"central_frequency", c.cascade.central_frequency}}},
        {"grid", {{"max_lag", c.grid_max_lag}, {"points", c.grid_points}}},
        {"simulation",
         {{"duration", c.duration}, {"dt", c.dt}, {"modes", c.modes}, {"seed", c.seed}, {"realizations", c.realizations}}},
        {"detection",
         {{"mean_rate", c.mean_rate},
          {"split_ratio", c.split_ratio},
          {"dead_time", c.dead_time},
          {"dark_rate", c.dark_rate},
          {"bin_width", c.bin_width},
          {"max_lag", c.max_lag},
          {"fig4_dark_fraction", c.fig4_dark_fraction}}},
        {"fit", {{"model", c.fit_model}, {"baseline_lower", c.baseline_lower}, {"baseline_upper", c.baseline_upper},
                 {"jackknife_blocks", c.jackknife_blocks}}},
        {"output", {{"directory", c.output_directory}, {"format", io::to_string(c.format)}}},
        {"runtime", {{"workers", c.workers}}},
    };
}

inline std::string serialize(const ExperimentConfig& c) { return ExperimentConfig::to_json(c).dump(2) + "\n"; }

inline ExperimentConfig parse(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    return from_json(root);
}

inline ExperimentConfig load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

/// 64-bit FNV-1a of the canonical serialization of everything that can
/// change results; output location/format and worker count are excluded.
inline std::uint64_t config_hash(const ExperimentConfig& c)
{
    json j = ExperimentConfig::to_json(c);
    j.erase("output");
    j.erase("runtime");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline io::Header header_for(const ExperimentConfig& c) { return {config_hash(c), c.seed}; }

}  // namespace superbunch::config
