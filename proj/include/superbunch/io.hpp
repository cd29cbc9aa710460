#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "superbunch/detection.hpp"
#include "superbunch/fitting.hpp"
#include "superbunch/speckle.hpp"
#include "superbunch/types.hpp"

// File formats. Every text file starts with
//   # superbunch config_hash=<16 hex digits> seed=<n>
// and readers skip lines beginning with '#'. Binary files carry the same
// line in a "<file>.meta" sidecar. Floats are written with 17 significant
// digits so that a CSV round trip is exact.
//
//   curve / histogram CSV   lag_s,value,stderr
//   trace CSV               "# dt=<s>" then time_s,intensity
//   tags CSV                time_s,channel
//   fit text                key: value lines
//   fit residual CSV        lag_s,data,model,residual
//
//   trace binary  "SBIT" u32 version  f64 dt  u64 count  f64[count]
//   tags binary   "SBTT" u32 version  u64 count  {f64 time, u8 channel}[count]
// Binary values are little-endian (host order on supported platforms).

namespace superbunch::io {

enum class Format { csv, binary };

inline Format parse_format(const std::string& s)
{
    if (s == "csv") return Format::csv;
    if (s == "binary") return Format::binary;
    throw std::invalid_argument("unknown format '" + s + "' (expected csv or binary)");
}

inline std::string to_string(Format f) { return f == Format::csv ? "csv" : "binary"; }

struct Header {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;

    std::string line() const
    {
        char buf[96];
        std::snprintf(buf, sizeof buf, "# superbunch config_hash=%016llx seed=%llu",
                      static_cast<unsigned long long>(config_hash), static_cast<unsigned long long>(seed));
        return buf;
    }
};

inline std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

inline std::ifstream open_in(const std::filesystem::path& path, bool binary = false)
{
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    return in;
}

// Data rows (comments and the column header skipped), split on commas.
inline std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path, const std::string& first_column)
{
    auto in = open_in(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!cells.empty() && cells[0] == first_column) continue;
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline double to_double(const std::string& s, const std::filesystem::path& path)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("'" + path.string() + "': malformed number '" + s + "'");
    }
}

template <class T>
void put(std::ofstream& out, const T& v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& in, const std::filesystem::path& path)
{
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("'" + path.string() + "': truncated binary file");
    return v;
}

inline void write_meta(const std::filesystem::path& path, const Header& h)
{
    auto out = open_out(path.string() + ".meta");
    out << h.line() << "\n";
}

inline constexpr std::uint32_t kBinaryVersion = 1;

}  // namespace detail

inline void write_curve_csv(const std::filesystem::path& path, const G2Curve& c, const Header& h)
{
    auto out = detail::open_out(path);
    out << h.line() << "\nlag_s,value,stderr\n";
    for (std::size_t i = 0; i < c.size(); ++i)
        out << fmt(c.lags[i]) << ',' << fmt(c.values[i]) << ',' << fmt(c.std_error[i]) << '\n';
}

inline G2Curve read_curve_csv(const std::filesystem::path& path)
{
    G2Curve c;
    for (const auto& row : detail::read_rows(path, "lag_s")) {
        if (row.size() < 2) throw std::runtime_error("'" + path.string() + "': expected lag_s,value[,stderr]");
        c.lags.push_back(detail::to_double(row[0], path));
        c.values.push_back(detail::to_double(row[1], path));
        c.std_error.push_back(row.size() >= 3 ? detail::to_double(row[2], path) : 0.0);
    }
    c.validate();
    return c;
}

/// Histogram export uses the curve schema with raw counts as values and
/// sqrt(counts) as their error.
inline void write_histogram_csv(const std::filesystem::path& path, const detection::CoincidenceHistogram& hist,
                                const Header& h)
{
    auto out = detail::open_out(path);
    out << h.line() << "\nlag_s,value,stderr\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        const auto n = static_cast<double>(hist.counts[i]);
        out << fmt(hist.lags[i]) << ',' << fmt(n) << ',' << fmt(std::sqrt(n)) << '\n';
    }
}

inline void write_trace(const std::filesystem::path& path, const speckle::IntensityTrace& t, Format f, const Header& h)
{
    if (f == Format::csv) {
        auto out = detail::open_out(path);
        out << h.line() << "\n# dt=" << fmt(t.dt) << "\ntime_s,intensity\n";
        for (std::size_t i = 0; i < t.samples.size(); ++i)
            out << fmt(static_cast<double>(i) * t.dt) << ',' << fmt(t.samples[i]) << '\n';
        return;
    }
    auto out = detail::open_out(path, true);
    out.write("SBIT", 4);
    detail::put(out, detail::kBinaryVersion);
    detail::put(out, t.dt);
    detail::put(out, static_cast<std::uint64_t>(t.samples.size()));
    out.write(reinterpret_cast<const char*>(t.samples.data()), static_cast<std::streamsize>(t.samples.size() * sizeof(double)));
    detail::write_meta(path, h);
}

inline speckle::IntensityTrace read_trace(const std::filesystem::path& path, Format f)
{
    if (f == Format::csv) {
        auto in = detail::open_in(path);
        double dt = 0.0;
        std::string line;
        while (std::getline(in, line))
            if (line.rfind("# dt=", 0) == 0) {
                dt = detail::to_double(line.substr(5), path);
                break;
            }
        std::vector<double> xs;
        for (const auto& row : detail::read_rows(path, "time_s")) {
            if (row.size() != 2) throw std::runtime_error("'" + path.string() + "': expected time_s,intensity");
            xs.push_back(detail::to_double(row[1], path));
        }
        if (!(dt > 0.0)) throw std::runtime_error("'" + path.string() + "': missing '# dt=' line");
        return speckle::make_trace(dt, std::move(xs));
    }
    auto in = detail::open_in(path, true);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SBIT", 4) != 0) throw std::runtime_error("'" + path.string() + "': not a trace file");
    if (detail::get<std::uint32_t>(in, path) != detail::kBinaryVersion)
        throw std::runtime_error("'" + path.string() + "': unsupported version");
    const auto dt = detail::get<double>(in, path);
    const auto n = detail::get<std::uint64_t>(in, path);
    std::vector<double> xs(n);
    in.read(reinterpret_cast<char*>(xs.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::runtime_error("'" + path.string() + "': truncated binary file");
    return speckle::make_trace(dt, std::move(xs));
}

/// Both channels merged in time order (channel 1 first on exact ties).
inline void write_tags(const std::filesystem::path& path, const detection::TimeTagStream& s1,
                       const detection::TimeTagStream& s2, Format f, const Header& h)
{
    std::vector<std::pair<double, std::uint8_t>> rows;
    rows.reserve(s1.size() + s2.size());
    std::size_t i = 0, j = 0;
    while (i < s1.size() || j < s2.size()) {
        if (j == s2.size() || (i < s1.size() && s1.tags[i] <= s2.tags[j]))
            rows.emplace_back(s1.tags[i++], static_cast<std::uint8_t>(s1.channel));
        else
            rows.emplace_back(s2.tags[j++], static_cast<std::uint8_t>(s2.channel));
    }
    if (f == Format::csv) {
        auto out = detail::open_out(path);
        out << h.line() << "\ntime_s,channel\n";
        for (const auto& [t, c] : rows) out << fmt(t) << ',' << static_cast<int>(c) << '\n';
        return;
    }
    auto out = detail::open_out(path, true);
    out.write("SBTT", 4);
    detail::put(out, detail::kBinaryVersion);
    detail::put(out, static_cast<std::uint64_t>(rows.size()));
    for (const auto& [t, c] : rows) {
        detail::put(out, t);
        detail::put(out, c);
    }
    detail::write_meta(path, h);
}

/// Tags split back into channel 1 and channel 2 streams (duration is the
/// last tag time; dead time and dark rate are not stored).
inline std::pair<detection::TimeTagStream, detection::TimeTagStream> read_tags(const std::filesystem::path& path, Format f)
{
    detection::TimeTagStream s1, s2;
    s1.channel = 1;
    s2.channel = 2;
    auto push = [&](double t, int c) {
        if (c == 1)
            s1.tags.push_back(t);
        else if (c == 2)
            s2.tags.push_back(t);
        else
            throw std::runtime_error("'" + path.string() + "': channel must be 1 or 2");
    };
    if (f == Format::csv) {
        for (const auto& row : detail::read_rows(path, "time_s")) {
            if (row.size() != 2) throw std::runtime_error("'" + path.string() + "': expected time_s,channel");
            push(detail::to_double(row[0], path), static_cast<int>(detail::to_double(row[1], path)));
        }
    } else {
        auto in = detail::open_in(path, true);
        char magic[4];
        in.read(magic, 4);
        if (!in || std::memcmp(magic, "SBTT", 4) != 0) throw std::runtime_error("'" + path.string() + "': not a tag file");
        if (detail::get<std::uint32_t>(in, path) != detail::kBinaryVersion)
            throw std::runtime_error("'" + path.string() + "': unsupported version");
        const auto n = detail::get<std::uint64_t>(in, path);
        for (std::uint64_t k = 0; k < n; ++k) {
            const auto t = detail::get<double>(in, path);
            push(t, detail::get<std::uint8_t>(in, path));
        }
    }
    const double end = std::max(s1.tags.empty() ? 0.0 : s1.tags.back(), s2.tags.empty() ? 0.0 : s2.tags.back());
    s1.duration = s2.duration = end;
    return {std::move(s1), std::move(s2)};
}

inline std::string fit_summary(const fitting::FitResult& r)
{
    std::ostringstream out;
    auto list = [&](const char* key, const std::vector<double>& v) {
        out << key << ":";
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : " ") << fmt(v[i]);
        out << "\n";
    };
    out << "model: " << r.model.name() << "\n";
    out << "g2_zero: " << fmt(r.g2_zero) << "\n";
    out << "g2_zero_stderr: " << fmt(r.g2_zero_error) << "\n";
    out << "error_method: " << r.error_method;
    if (r.jackknife_blocks) out << " (" << r.jackknife_blocks << " blocks)";
    out << "\n";
    list("amplitudes", r.amplitudes);
    list("amplitude_stderr", r.amplitude_errors);
    list("bandwidths_rad_per_s", r.bandwidths);
    list("bandwidth_stderr", r.bandwidth_errors);
    list("coherence_times_s", r.coherence_times);
    list("coherence_time_stderr", r.coherence_time_errors);
    out << "residual_rms: " << fmt(r.residual_rms) << "\n";
    out << "chi_square: " << fmt(r.chi_square) << "\n";
    out << "points: " << r.points << "\n";
    out << "weighted: " << (r.weighted ? "true" : "false") << "\n";
    out << "iterations: " << r.iterations << "\n";
    out << "start_index: " << r.start_index << "\n";
    out << "covariance:";
    for (Eigen::Index i = 0; i < r.covariance.rows(); ++i)
        for (Eigen::Index j = 0; j < r.covariance.cols(); ++j) out << ((i || j) ? "," : " ") << fmt(r.covariance(i, j));
    out << "\n";
    return out.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& body, const Header& h)
{
    auto out = detail::open_out(path);
    out << h.line() << "\n" << body;
}

inline void write_fit(const std::filesystem::path& path, const fitting::FitResult& r, const Header& h)
{
    write_text(path, fit_summary(r), h);
}

inline void write_fit_residuals(const std::filesystem::path& path, const G2Curve& c, const fitting::FitResult& r,
                                const Header& h)
{
    auto out = detail::open_out(path);
    out << h.line() << "\nlag_s,data,model,residual\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double m = r.evaluate(c.lags[i]);
        out << fmt(c.lags[i]) << ',' << fmt(c.values[i]) << ',' << fmt(m) << ',' << fmt(c.values[i] - m) << '\n';
    }
}

}  // namespace superbunch::io
