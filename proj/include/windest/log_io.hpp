#pragma once

// Plain-text file formats: numeric CSV channels with unit-bearing headers,
// flat key=value parameter files, and the LSTM weight / loss-curve files.
// Every reader reports problems as "<file>:<line>: <message>".

#include "windest/flight_log.hpp"
#include "windest/flight_sim.hpp"
#include "windest/lstm.hpp"
#include "windest/pipeline.hpp"

#include <Eigen/Dense>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace windest {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, int line, const std::string& message)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), source_(source), line_(line)
    {
    }

    const std::string& source() const { return source_; }
    int line() const { return line_; }

private:
    std::string source_;
    int line_;
};

/// Directory for outputs when no path is given: $WINDEST_OUT_DIR, else ".".
inline std::filesystem::path default_output_dir()
{
    const char* env = std::getenv("WINDEST_OUT_DIR");
    return env != nullptr && *env != '\0' ? std::filesystem::path(env) : std::filesystem::path(".");
}

namespace csv {

inline constexpr int kDigits = 15;

inline std::string format(double x, int digits = kDigits)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

/// Shortest text that parses back to the same double.
inline std::string format_exact(double x)
{
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

/// Parses a finite double; throws ParseError naming the field.
inline double parse_number(std::string_view field, const std::string& source, int line, std::string_view column)
{
    double v = 0.0;
    const char* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw ParseError(source, line, "column '" + std::string(column) + "': not a finite number: '" +
                                           std::string(field) + "'");
    }
    return v;
}

struct Table {
    std::string source;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<int> lines;  // source line of each row
};

/// Reads a numeric table whose header must equal `expected` (empty: accept any).
inline Table read(std::istream& in, const std::string& source, const std::vector<std::string>& expected = {})
{
    Table t;
    t.source = source;
    std::string line;
    int n = 0;
    if (!std::getline(in, line)) {
        throw ParseError(source, 1, "missing header");
    }
    ++n;
    for (std::string_view c : split(line)) {
        t.columns.emplace_back(c);
    }
    if (!expected.empty() && t.columns != expected) {
        std::string want;
        for (const auto& c : expected) {
            want += (want.empty() ? "" : ",") + c;
        }
        throw ParseError(source, 1, "unexpected header; expected '" + want + "'");
    }
    while (std::getline(in, line)) {
        ++n;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split(line);
        if (fields.size() != t.columns.size()) {
            throw ParseError(source, n, "expected " + std::to_string(t.columns.size()) + " fields, found " +
                                            std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            row.push_back(parse_number(fields[i], source, n, t.columns[i]));
        }
        t.rows.push_back(std::move(row));
        t.lines.push_back(n);
    }
    return t;
}

inline void write(std::ostream& out, const std::vector<std::string>& columns,
                  const std::vector<std::vector<double>>& rows, int digits = kDigits)
{
    for (std::size_t i = 0; i < columns.size(); ++i) {
        out << (i ? "," : "") << columns[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << format(row[i], digits);
        }
        out << '\n';
    }
}

inline std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string() + " for reading");
    }
    return in;
}

inline std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    return out;
}

inline Table read_file(const std::filesystem::path& path, const std::vector<std::string>& expected = {})
{
    std::ifstream in = open_in(path);
    return read(in, path.string(), expected);
}

/// Rejects non-increasing first-column timestamps.
inline void require_increasing_time(const Table& t)
{
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        if (!(t.rows[i][0] > t.rows[i - 1][0])) {
            throw ParseError(t.source, t.lines[i], "timestamps must be strictly increasing");
        }
    }
}

inline void push(std::vector<double>& row, const Vec3& v)
{
    row.insert(row.end(), {v.x(), v.y(), v.z()});
}

inline void push(std::vector<double>& row, const UnitQuaternion& q)
{
    row.insert(row.end(), {q.w(), q.x(), q.y(), q.z()});
}

inline Vec3 vec3(const std::vector<double>& row, std::size_t i)
{
    return {row[i], row[i + 1], row[i + 2]};
}

inline UnitQuaternion quat(const Table& t, std::size_t r, std::size_t i)
{
    const auto& row = t.rows[r];
    const double norm = Eigen::Vector4d(row[i], row[i + 1], row[i + 2], row[i + 3]).norm();
    if (std::abs(norm - 1.0) > 1e-6) {
        throw ParseError(t.source, t.lines[r], "quaternion is not unit norm");
    }
    return {row[i], row[i + 1], row[i + 2], row[i + 3]};
}

}  // namespace csv

// ---------------------------------------------------------------- flight log schemas

namespace schema {

inline const std::vector<std::string> kTruth{
    "t[s]",       "px[m]",      "py[m]",      "pz[m]",      "qw[-]",      "qx[-]",       "qy[-]",      "qz[-]",
    "vx[m/s]",    "vy[m/s]",    "vz[m/s]",    "wx[rad/s]",  "wy[rad/s]",  "wz[rad/s]",   "ax[m/s^2]",  "ay[m/s^2]",
    "az[m/s^2]",  "wind_x[m/s]", "wind_y[m/s]", "wind_z[m/s]", "touch_x[N]", "touch_y[N]", "touch_z[N]", "drag_x[N]",
    "drag_y[N]",  "drag_z[N]",  "thrust[N]",  "phase[-]",   "segment[-]", "steady[-]"};

inline const std::vector<std::string> kOdometry{"t[s]",    "px[m]",     "py[m]",     "pz[m]",     "qw[-]",
                                                "qx[-]",   "qy[-]",     "qz[-]",     "vx[m/s]",   "vy[m/s]",
                                                "vz[m/s]", "wx[rad/s]", "wy[rad/s]", "wz[rad/s]"};

inline const std::vector<std::string> kImu{"t[s]",      "ax[m/s^2]", "ay[m/s^2]", "az[m/s^2]",
                                           "gx[rad/s]", "gy[rad/s]", "gz[rad/s]"};

inline const std::vector<std::string> kThrottle{"t[s]", "u0[-]", "u1[-]", "u2[-]", "u3[-]", "u4[-]", "u5[-]"};

inline const std::vector<std::string> kCommands{"t[s]", "thrust[N]", "tau_x[N*m]", "tau_y[N*m]", "tau_z[N*m]"};

inline const std::vector<std::string> kEstimate{
    "t[s]",           "touch_x[N]",     "touch_y[N]",     "touch_z[N]",     "wind_x[m/s]",    "wind_y[m/s]",
    "wind_z[m/s]",    "airflow_x[m/s]", "airflow_y[m/s]", "airflow_z[m/s]", "drag_x[N]",      "drag_y[N]",
    "drag_z[N]",      "vx[m/s]",        "vy[m/s]",        "vz[m/s]",        "touch_sx[N]",    "touch_sy[N]",
    "touch_sz[N]",    "wind_sx[m/s]",   "wind_sy[m/s]",   "wind_sz[m/s]",   "sensors[-]"};

inline const std::vector<std::string> kLossCurve{"epoch[-]", "train_loss[m^2/s^2]", "validation_loss[m^2/s^2]"};

/// Raw field components per sensor: b<i>x, b<i>y, b<i>z.
inline std::vector<std::string> whiskers(std::size_t sensors)
{
    std::vector<std::string> c{"t[s]"};
    for (std::size_t i = 0; i < sensors; ++i) {
        for (const char* axis : {"x", "y", "z"}) {
            c.push_back("b" + std::to_string(i) + axis + "[uT]");
        }
    }
    return c;
}

}  // namespace schema

namespace detail {

inline int integral_field(const csv::Table& t, std::size_t r, std::size_t i, int lo, int hi)
{
    const double v = t.rows[r][i];
    if (v != std::floor(v) || v < lo || v > hi) {
        throw ParseError(t.source, t.lines[r], "column '" + t.columns[i] + "' must be an integer in [" +
                                                   std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return static_cast<int>(v);
}

}  // namespace detail

inline void write_truth(std::ostream& out, const std::vector<TruthSample>& v)
{
    std::vector<std::vector<double>> rows;
    for (const TruthSample& s : v) {
        std::vector<double> r{s.t};
        csv::push(r, s.state.position);
        csv::push(r, s.state.attitude);
        csv::push(r, s.state.velocity);
        csv::push(r, s.state.rate);
        csv::push(r, s.acceleration);
        csv::push(r, s.wind);
        csv::push(r, s.touch);
        csv::push(r, s.drag);
        r.insert(r.end(), {s.thrust, static_cast<double>(s.phase), static_cast<double>(s.segment), s.steady ? 1.0 : 0.0});
        rows.push_back(std::move(r));
    }
    csv::write(out, schema::kTruth, rows);
}

inline std::vector<TruthSample> read_truth(std::istream& in, const std::string& source)
{
    const csv::Table t = csv::read(in, source, schema::kTruth);
    csv::require_increasing_time(t);
    std::vector<TruthSample> v;
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        const auto& r = t.rows[k];
        TruthSample s;
        s.t = r[0];
        s.state.position = csv::vec3(r, 1);
        s.state.attitude = csv::quat(t, k, 4);
        s.state.velocity = csv::vec3(r, 8);
        s.state.rate = csv::vec3(r, 11);
        s.acceleration = csv::vec3(r, 14);
        s.wind = csv::vec3(r, 17);
        s.touch = csv::vec3(r, 20);
        s.drag = csv::vec3(r, 23);
        s.thrust = r[26];
        s.phase = static_cast<FlightPhase>(detail::integral_field(t, k, 27, 0, 4));
        s.segment = detail::integral_field(t, k, 28, 0, 1 << 20);
        s.steady = detail::integral_field(t, k, 29, 0, 1) == 1;
        v.push_back(s);
    }
    return v;
}

inline void write_odometry(std::ostream& out, const std::vector<OdometrySample>& v)
{
    std::vector<std::vector<double>> rows;
    for (const OdometrySample& s : v) {
        std::vector<double> r{s.t};
        csv::push(r, s.position);
        csv::push(r, s.attitude);
        csv::push(r, s.velocity);
        csv::push(r, s.rate);
        rows.push_back(std::move(r));
    }
    csv::write(out, schema::kOdometry, rows);
}

inline std::vector<OdometrySample> read_odometry(std::istream& in, const std::string& source)
{
    const csv::Table t = csv::read(in, source, schema::kOdometry);
    csv::require_increasing_time(t);
    std::vector<OdometrySample> v;
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        const auto& r = t.rows[k];
        v.push_back({r[0], csv::vec3(r, 1), csv::quat(t, k, 4), csv::vec3(r, 8), csv::vec3(r, 11)});
    }
    return v;
}

inline void write_imu(std::ostream& out, const std::vector<ImuSample>& v)
{
    std::vector<std::vector<double>> rows;
    for (const ImuSample& s : v) {
        std::vector<double> r{s.t};
        csv::push(r, s.accel);
        csv::push(r, s.gyro);
        rows.push_back(std::move(r));
    }
    csv::write(out, schema::kImu, rows);
}

inline std::vector<ImuSample> read_imu(std::istream& in, const std::string& source)
{
    const csv::Table t = csv::read(in, source, schema::kImu);
    csv::require_increasing_time(t);
    std::vector<ImuSample> v;
    for (const auto& r : t.rows) {
        v.push_back({r[0], csv::vec3(r, 1), csv::vec3(r, 4)});
    }
    return v;
}

inline void write_whiskers(std::ostream& out, const std::vector<WhiskerSample>& v)
{
    const std::size_t n = v.empty() ? kSensorCount : v.front().field.size();
    std::vector<std::vector<double>> rows;
    for (const WhiskerSample& s : v) {
        if (s.field.size() != n) {
            throw std::invalid_argument("write_whiskers: sensor count changes between samples");
        }
        std::vector<double> r{s.t};
        for (const MagneticField& b : s.field) {
            r.insert(r.end(), {b.bx, b.by, b.bz});
        }
        rows.push_back(std::move(r));
    }
    csv::write(out, schema::whiskers(n), rows);
}

inline std::vector<WhiskerSample> read_whiskers(std::istream& in, const std::string& source)
{
    const csv::Table t = csv::read(in, source);
    if (t.columns.size() < 4 || (t.columns.size() - 1) % 3 != 0 ||
        t.columns != schema::whiskers((t.columns.size() - 1) / 3)) {
        throw ParseError(source, 1, "unexpected header; expected t[s] followed by b<i>x[uT],b<i>y[uT],b<i>z[uT]");
    }
    csv::require_increasing_time(t);
    const std::size_t n = (t.columns.size() - 1) / 3;
    std::vector<WhiskerSample> v;
    for (const auto& r : t.rows) {
        WhiskerSample s;
        s.t = r[0];
        for (std::size_t i = 0; i < n; ++i) {
            s.field.push_back({r[1 + 3 * i], r[2 + 3 * i], r[3 + 3 * i]});
        }
        v.push_back(std::move(s));
    }
    return v;
}

inline void write_throttle(std::ostream& out, const std::vector<ThrottleSample>& v)
{
    std::vector<std::vector<double>> rows;
    for (const ThrottleSample& s : v) {
        std::vector<double> r{s.t};
        r.insert(r.end(), s.throttle.begin(), s.throttle.end());
        rows.push_back(std::move(r));
    }
    csv::write(out, schema::kThrottle, rows);
}

inline std::vector<ThrottleSample> read_throttle(std::istream& in, const std::string& source)
{
    const csv::Table t = csv::read(in, source, schema::kThrottle);
    csv::require_increasing_time(t);
    std::vector<ThrottleSample> v;
    for (const auto& r : t.rows) {
        ThrottleSample s;
        s.t = r[0];
        std::copy(r.begin() + 1, r.end(), s.throttle.begin());
        v.push_back(s);
    }
    return v;
}

inline void write_commands(std::ostream& out, const std::vector<CommandSample>& v)
{
    std::vector<std::vector<double>> rows;
    for (const CommandSample& s : v) {
        std::vector<double> r{s.t, s.wrench.thrust};
        csv::push(r, s.wrench.torque);
        rows.push_back(std::move(r));
    }
    csv::write(out, schema::kCommands, rows);
}

inline std::vector<CommandSample> read_commands(std::istream& in, const std::string& source)
{
    const csv::Table t = csv::read(in, source, schema::kCommands);
    csv::require_increasing_time(t);
    std::vector<CommandSample> v;
    for (const auto& r : t.rows) {
        v.push_back({r[0], WrenchInput{r[1], csv::vec3(r, 2)}});
    }
    return v;
}

// ---------------------------------------------------------------- key=value files

/// Flat `key = value` file. Blank lines and lines starting with '#' are ignored.
/// Every key remembers its line so later type errors point at the source.
class KeyValueFile {
public:
    static KeyValueFile parse(std::istream& in, const std::string& source)
    {
        KeyValueFile f;
        f.source_ = source;
        std::string line;
        int n = 0;
        while (std::getline(in, line)) {
            ++n;
            const std::string_view s = csv::trim(line);
            if (s.empty() || s.front() == '#') {
                continue;
            }
            const std::size_t eq = s.find('=');
            if (eq == std::string_view::npos) {
                throw ParseError(source, n, "expected 'key = value'");
            }
            const std::string key(csv::trim(s.substr(0, eq)));
            const std::string value(csv::trim(s.substr(eq + 1)));
            if (key.empty()) {
                throw ParseError(source, n, "empty key");
            }
            if (f.entries_.count(key) != 0) {
                throw ParseError(source, n, "duplicate key '" + key + "'");
            }
            f.entries_[key] = {value, n};
            f.order_.push_back(key);
        }
        return f;
    }

    static KeyValueFile load(const std::filesystem::path& path)
    {
        std::ifstream in = csv::open_in(path);
        return parse(in, path.string());
    }

    const std::string& source() const { return source_; }
    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const std::vector<std::string>& keys() const { return order_; }

    int line(const std::string& key) const { return entries_.at(key).line; }

    std::string get_string(const std::string& key, const std::string& fallback) const
    {
        used_.insert(key);
        const auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second.value;
    }

    std::string require_string(const std::string& key) const
    {
        if (!has(key)) {
            throw ParseError(source_, 0, "missing key '" + key + "'");
        }
        return get_string(key, "");
    }

    double get_double(const std::string& key, double fallback) const
    {
        used_.insert(key);
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            return fallback;
        }
        return csv::parse_number(it->second.value, source_, it->second.line, key);
    }

    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const
    {
        used_.insert(key);
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            return fallback;
        }
        const std::string& s = it->second.value;
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
            throw ParseError(source_, it->second.line, "key '" + key + "': not a non-negative integer: '" + s + "'");
        }
        return v;
    }

    /// Three comma-separated numbers.
    Vec3 get_vec3(const std::string& key, const Vec3& fallback) const
    {
        used_.insert(key);
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            return fallback;
        }
        const auto parts = csv::split(it->second.value);
        if (parts.size() != 3) {
            throw ParseError(source_, it->second.line, "key '" + key + "': expected three comma-separated numbers");
        }
        return {csv::parse_number(parts[0], source_, it->second.line, key),
                csv::parse_number(parts[1], source_, it->second.line, key),
                csv::parse_number(parts[2], source_, it->second.line, key)};
    }

    /// Throws on the first key that no getter asked for.
    void reject_unused() const
    {
        for (const std::string& k : order_) {
            if (used_.count(k) == 0) {
                throw ParseError(source_, entries_.at(k).line, "unknown key '" + k + "'");
            }
        }
    }

    /// Re-raises a domain error from a value as a line-numbered diagnostic.
    [[noreturn]] void fail(const std::string& key, const std::string& message) const
    {
        const auto it = entries_.find(key);
        throw ParseError(source_, it == entries_.end() ? 0 : it->second.line, message);
    }

private:
    struct Entry {
        std::string value;
        int line = 0;
    };

    std::string source_;
    std::map<std::string, Entry> entries_;
    std::vector<std::string> order_;
    mutable std::set<std::string> used_;
};

class KeyValueWriter {
public:
    explicit KeyValueWriter(std::ostream& out) : out_(out) {}

    void comment(const std::string& text) { out_ << "# " << text << '\n'; }
    void put(const std::string& key, const std::string& value) { out_ << key << " = " << value << '\n'; }
    void put(const std::string& key, double value) { put(key, csv::format_exact(value)); }
    void put(const std::string& key, const Vec3& v)
    {
        put(key, csv::format_exact(v.x()) + ", " + csv::format_exact(v.y()) + ", " + csv::format_exact(v.z()));
    }

private:
    std::ostream& out_;
};

// ---------------------------------------------------------------- flight log directory

inline constexpr const char* kLogMetaFile = "log.cfg";

/// Writes truth.csv, odometry.csv, imu.csv, whiskers.csv, throttle.csv,
/// commands.csv and log.cfg into `dir`.
inline void write_flight_log(const std::filesystem::path& dir, const FlightLog& log)
{
    std::filesystem::create_directories(dir);
    {
        auto out = csv::open_out(dir / kLogMetaFile);
        KeyValueWriter w(out);
        w.put("name", log.name);
        w.put("seed", std::to_string(log.seed));
    }
    auto out = csv::open_out(dir / "truth.csv");
    write_truth(out, log.truth);
    out = csv::open_out(dir / "odometry.csv");
    write_odometry(out, log.odometry);
    out = csv::open_out(dir / "imu.csv");
    write_imu(out, log.imu);
    out = csv::open_out(dir / "whiskers.csv");
    write_whiskers(out, log.whiskers);
    out = csv::open_out(dir / "throttle.csv");
    write_throttle(out, log.throttle);
    out = csv::open_out(dir / "commands.csv");
    write_commands(out, log.commands);
}

/// Reads a log directory. truth.csv is optional (recorded flights have none).
inline FlightLog read_flight_log(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir)) {
        throw std::runtime_error(dir.string() + " is not a log directory");
    }
    FlightLog log;
    if (std::filesystem::exists(dir / kLogMetaFile)) {
        const KeyValueFile meta = KeyValueFile::load(dir / kLogMetaFile);
        log.name = meta.get_string("name", "");
        log.seed = meta.get_uint("seed", 0);
        meta.reject_unused();
    }
    auto read = [&](const char* file, auto reader) {
        const std::filesystem::path p = dir / file;
        std::ifstream in = csv::open_in(p);
        return reader(in, p.string());
    };
    if (std::filesystem::exists(dir / "truth.csv")) {
        log.truth = read("truth.csv", read_truth);
    }
    log.odometry = read("odometry.csv", read_odometry);
    log.imu = read("imu.csv", read_imu);
    log.whiskers = read("whiskers.csv", read_whiskers);
    log.throttle = read("throttle.csv", read_throttle);
    log.commands = read("commands.csv", read_commands);
    return log;
}

// ---------------------------------------------------------------- estimate stream

inline void write_estimates(std::ostream& out, const std::vector<EstimateSample>& v)
{
    std::vector<std::vector<double>> rows;
    for (const EstimateSample& e : v) {
        std::vector<double> r{e.t};
        csv::push(r, e.touch);
        csv::push(r, e.wind);
        csv::push(r, e.airflow_B);
        csv::push(r, e.drag);
        csv::push(r, e.velocity);
        csv::push(r, e.touch_std);
        csv::push(r, e.wind_std);
        r.push_back(e.sensors);
        rows.push_back(std::move(r));
    }
    csv::write(out, schema::kEstimate, rows);
}

inline std::vector<EstimateSample> read_estimates(std::istream& in, const std::string& source)
{
    const csv::Table t = csv::read(in, source, schema::kEstimate);
    csv::require_increasing_time(t);
    std::vector<EstimateSample> v;
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        const auto& r = t.rows[k];
        EstimateSample e;
        e.t = r[0];
        e.touch = csv::vec3(r, 1);
        e.wind = csv::vec3(r, 4);
        e.airflow_B = csv::vec3(r, 7);
        e.drag = csv::vec3(r, 10);
        e.velocity = csv::vec3(r, 13);
        e.touch_std = csv::vec3(r, 16);
        e.wind_std = csv::vec3(r, 19);
        e.sensors = detail::integral_field(t, k, 22, 0, 1 << 16);
        v.push_back(e);
    }
    return v;
}

// ---------------------------------------------------------------- parameter file

/// Vehicle, sensor and filter parameters as flat keys:
///   mass, inertia (diagonal), mu1, mu2, gravity, sensor<i>.coefficient,
///   process.<block>, odometry.<channel>, initial.<block>, angle_noise,
///   pseudo_noise_floor, driver_alpha, ut.alpha/beta/kappa, gate.enabled/probability.
inline void write_params(std::ostream& out, const EstimatorConfig& cfg)
{
    KeyValueWriter w(out);
    const FilterModel& m = cfg.filter;
    w.put("mass", m.vehicle.mass);
    w.put("inertia", Vec3(m.vehicle.inertia.diagonal()));
    w.put("mu1", m.vehicle.mu1);
    w.put("mu2", m.vehicle.mu2);
    w.put("gravity", m.vehicle.gravity);
    for (std::size_t i = 0; i < m.rig.size(); ++i) {
        w.put("sensor" + std::to_string(i) + ".coefficient", m.rig[i].coefficient);
    }
    w.put("process.position", m.process.position);
    w.put("process.attitude", m.process.attitude);
    w.put("process.velocity", m.process.velocity);
    w.put("process.rate", m.process.rate);
    w.put("process.touch", m.process.touch);
    w.put("process.wind", m.process.wind);
    w.put("odometry.position", cfg.odometry.position);
    w.put("odometry.attitude", cfg.odometry.attitude);
    w.put("odometry.velocity", cfg.odometry.velocity);
    w.put("odometry.rate", cfg.odometry.rate);
    w.put("initial.position", cfg.initial.position);
    w.put("initial.attitude", cfg.initial.attitude);
    w.put("initial.velocity", cfg.initial.velocity);
    w.put("initial.rate", cfg.initial.rate);
    w.put("initial.touch", cfg.initial.touch);
    w.put("initial.wind", cfg.initial.wind);
    w.put("angle_noise", cfg.angle_noise);
    w.put("pseudo_noise_floor", cfg.pseudo_noise_floor);
    w.put("driver_alpha", cfg.driver_alpha);
    w.put("ut.alpha", m.ut.alpha);
    w.put("ut.beta", m.ut.beta);
    w.put("ut.kappa", m.ut.kappa);
    w.put("gate.enabled", m.gate.enabled ? "1" : "0");
    w.put("gate.probability", m.gate.probability);
}

inline EstimatorConfig params_from_keys(const KeyValueFile& f, EstimatorConfig cfg = {})
{
    FilterModel& m = cfg.filter;
    m.vehicle.mass = f.get_double("mass", m.vehicle.mass);
    m.vehicle.inertia = f.get_vec3("inertia", m.vehicle.inertia.diagonal()).asDiagonal();
    m.vehicle.mu1 = f.get_double("mu1", m.vehicle.mu1);
    m.vehicle.mu2 = f.get_double("mu2", m.vehicle.mu2);
    m.vehicle.gravity = f.get_double("gravity", m.vehicle.gravity);
    for (std::size_t i = 0; i < m.rig.size(); ++i) {
        const std::string key = "sensor" + std::to_string(i) + ".coefficient";
        m.rig[i].coefficient = f.get_double(key, m.rig[i].coefficient);
        try {
            m.rig[i].validate();
        } catch (const std::invalid_argument& e) {
            f.fail(key, e.what());
        }
    }
    ProcessNoise& q = m.process;
    q.position = f.get_double("process.position", q.position);
    q.attitude = f.get_double("process.attitude", q.attitude);
    q.velocity = f.get_double("process.velocity", q.velocity);
    q.rate = f.get_double("process.rate", q.rate);
    q.touch = f.get_double("process.touch", q.touch);
    q.wind = f.get_double("process.wind", q.wind);
    cfg.odometry.position = f.get_double("odometry.position", cfg.odometry.position);
    cfg.odometry.attitude = f.get_double("odometry.attitude", cfg.odometry.attitude);
    cfg.odometry.velocity = f.get_double("odometry.velocity", cfg.odometry.velocity);
    cfg.odometry.rate = f.get_double("odometry.rate", cfg.odometry.rate);
    cfg.initial.position = f.get_double("initial.position", cfg.initial.position);
    cfg.initial.attitude = f.get_double("initial.attitude", cfg.initial.attitude);
    cfg.initial.velocity = f.get_double("initial.velocity", cfg.initial.velocity);
    cfg.initial.rate = f.get_double("initial.rate", cfg.initial.rate);
    cfg.initial.touch = f.get_double("initial.touch", cfg.initial.touch);
    cfg.initial.wind = f.get_double("initial.wind", cfg.initial.wind);
    cfg.angle_noise = f.get_double("angle_noise", cfg.angle_noise);
    cfg.pseudo_noise_floor = f.get_double("pseudo_noise_floor", cfg.pseudo_noise_floor);
    cfg.driver_alpha = f.get_double("driver_alpha", cfg.driver_alpha);
    m.ut.alpha = f.get_double("ut.alpha", m.ut.alpha);
    m.ut.beta = f.get_double("ut.beta", m.ut.beta);
    m.ut.kappa = f.get_double("ut.kappa", m.ut.kappa);
    const std::uint64_t gate = f.get_uint("gate.enabled", m.gate.enabled ? 1 : 0);
    if (gate > 1) {
        f.fail("gate.enabled", "gate.enabled must be 0 or 1");
    }
    m.gate.enabled = gate == 1;
    m.gate.probability = f.get_double("gate.probability", m.gate.probability);
    f.reject_unused();

    try {
        m.vehicle.validate();
        (void)q.matrix();
    } catch (const std::invalid_argument& e) {
        throw ParseError(f.source(), 0, e.what());
    }
    if (!(cfg.angle_noise > 0.0)) {
        f.fail("angle_noise", "angle_noise must be positive");
    }
    if (!(cfg.driver_alpha > 0.0 && cfg.driver_alpha < 1.0)) {
        f.fail("driver_alpha", "driver_alpha must be in (0, 1)");
    }
    if (!(m.gate.probability > 0.0 && m.gate.probability < 1.0)) {
        f.fail("gate.probability", "gate.probability must be in (0, 1)");
    }
    return cfg;
}

inline EstimatorConfig read_params(const std::filesystem::path& path)
{
    return params_from_keys(KeyValueFile::load(path));
}

// ---------------------------------------------------------------- scenario file

/// Scenario file: `preset` picks the base scenario; other keys override it.
///   seed, duration, thrust_scale, divergence_radius,
///   trajectory.{hover_point, circle_center, line_start, line_end, radius, max_speed, passes, joystick_speed, joystick_duration, hover_duration},
///   noise.<field>, wind.ambient,
///   gust<i>.{origin, direction, half_angle, speed, distance, decay, on, off},
///   touch<i>.{start, end, from, to}
inline Scenario scenario_from_keys(const KeyValueFile& f, std::uint64_t seed_override = 0)
{
    const std::string preset = f.get_string("preset", "hover");
    std::uint64_t seed = f.get_uint("seed", 1);
    if (seed_override != 0) {
        seed = seed_override;
    }
    Scenario sc;
    try {
        sc = scenario_preset(preset, seed);
    } catch (const std::invalid_argument& e) {
        f.fail("preset", e.what());
    }
    sc.name = f.get_string("name", sc.name);
    sc.duration = f.get_double("duration", sc.duration);
    sc.thrust_scale = f.get_double("thrust_scale", sc.thrust_scale);
    sc.divergence_radius = f.get_double("divergence_radius", sc.divergence_radius);
    TrajectorySpec& tr = sc.trajectory;
    tr.hover_point = f.get_vec3("trajectory.hover_point", tr.hover_point);
    tr.circle_center = f.get_vec3("trajectory.circle_center", tr.circle_center);
    tr.line_start = f.get_vec3("trajectory.line_start", tr.line_start);
    tr.line_end = f.get_vec3("trajectory.line_end", tr.line_end);
    tr.radius = f.get_double("trajectory.radius", tr.radius);
    tr.max_speed = f.get_double("trajectory.max_speed", tr.max_speed);
    tr.passes = static_cast<int>(f.get_uint("trajectory.passes", static_cast<std::uint64_t>(tr.passes)));
    tr.joystick_speed = f.get_double("trajectory.joystick_speed", tr.joystick_speed);
    tr.joystick_duration = f.get_double("trajectory.joystick_duration", tr.joystick_duration);
    tr.hover_duration = f.get_double("trajectory.hover_duration", tr.hover_duration);
    NoiseSpec& n = sc.noise;
    n.position = f.get_double("noise.position", n.position);
    n.velocity = f.get_double("noise.velocity", n.velocity);
    n.attitude = f.get_double("noise.attitude", n.attitude);
    n.rate = f.get_double("noise.rate", n.rate);
    n.accel = f.get_double("noise.accel", n.accel);
    n.accel_bias = f.get_vec3("noise.accel_bias", n.accel_bias);
    n.gyro = f.get_double("noise.gyro", n.gyro);
    n.angle = f.get_double("noise.angle", n.angle);
    n.calibration_offset = f.get_double("noise.calibration_offset", n.calibration_offset);
    n.outlier_probability = f.get_double("noise.outlier_probability", n.outlier_probability);
    n.outlier_magnitude = f.get_double("noise.outlier_magnitude", n.outlier_magnitude);
    n.interference_throttle = f.get_double("noise.interference_throttle", n.interference_throttle);
    n.interference_accel = f.get_double("noise.interference_accel", n.interference_accel);
    sc.wind.ambient = f.get_vec3("wind.ambient", sc.wind.ambient);
    for (std::size_t i = 0;; ++i) {
        const std::string p = "gust" + std::to_string(i) + ".";
        if (!f.has(p + "origin")) {
            break;
        }
        GustSource g;
        g.origin = f.get_vec3(p + "origin", g.origin);
        g.direction = f.get_vec3(p + "direction", g.direction);
        if (g.direction.norm() > 0.0) {
            g.direction.normalize();
        }
        g.half_angle = f.get_double(p + "half_angle", g.half_angle);
        g.speed_ref = f.get_double(p + "speed", g.speed_ref);
        g.distance_ref = f.get_double(p + "distance", g.distance_ref);
        g.decay = f.get_double(p + "decay", g.decay);
        g.on_time = f.get_double(p + "on", g.on_time);
        g.off_time = f.get_double(p + "off", g.off_time);
        try {
            g.validate();
        } catch (const std::invalid_argument& e) {
            f.fail(p + "origin", e.what());
        }
        sc.wind.gusts.push_back(g);
    }
    for (std::size_t i = 0;; ++i) {
        const std::string p = "touch" + std::to_string(i) + ".";
        if (!f.has(p + "start")) {
            break;
        }
        TouchSegment s;
        s.start = f.get_double(p + "start", 0.0);
        s.end = f.get_double(p + "end", s.start);
        s.from = f.get_vec3(p + "from", Vec3::Zero());
        s.to = f.get_vec3(p + "to", s.from);
        if (!(s.end > s.start)) {
            f.fail(p + "end", "touch segment must end after it starts");
        }
        sc.touch.segments.push_back(s);
    }
    f.reject_unused();
    if (!(sc.thrust_scale > 0.0)) {
        f.fail("thrust_scale", "thrust_scale must be positive");
    }
    if (sc.duration < 0.0) {
        f.fail("duration", "duration must be positive");
    }
    return sc;
}

// ---------------------------------------------------------------- LSTM weights and loss curve

inline constexpr const char* kWeightsMagic = "windest-lstm-weights";
inline constexpr int kWeightsVersion = 1;

/// CSV with a version line, then one labelled row per block:
///   windest-lstm-weights,1
///   shape,<input>,<hidden>,<layers>,<output>
///   sequence_length,<n>
///   validation_rms,<x>,<y>,<z>
///   feature_mean,<20 values>
///   feature_scale,<20 values>
///   params,<all parameters in flat order>
/// Values use 17 significant digits so weights reload bit-exactly.
inline void write_weights(std::ostream& out, const LstmModel& m)
{
    auto row = [&](const std::string& label, const auto& values) {
        out << label;
        for (Eigen::Index i = 0; i < values.size(); ++i) {
            out << ',' << csv::format(values(i), 17);
        }
        out << '\n';
    };
    const LstmShape& s = m.params.shape();
    out << kWeightsMagic << ',' << kWeightsVersion << '\n';
    out << "shape," << s.input << ',' << s.hidden << ',' << s.layers << ',' << s.output << '\n';
    out << "sequence_length," << m.sequence_length << '\n';
    row("validation_rms", m.validation_rms);
    row("feature_mean", m.feature_mean);
    row("feature_scale", m.feature_scale);
    row("params", m.params.flat());
}

inline LstmModel read_weights(std::istream& in, const std::string& source)
{
    std::string line;
    int n = 0;
    auto next = [&](const std::string& label) {
        if (!std::getline(in, line)) {
            throw ParseError(source, n + 1, "missing row '" + label + "'");
        }
        ++n;
        auto fields = csv::split(line);
        if (fields.front() != label) {
            throw ParseError(source, n, "expected row '" + label + "'");
        }
        std::vector<double> v;
        for (std::size_t i = 1; i < fields.size(); ++i) {
            v.push_back(csv::parse_number(fields[i], source, n, label));
        }
        return v;
    };
    auto count = [&](const std::vector<double>& v, std::size_t want, const std::string& label) {
        if (v.size() != want) {
            throw ParseError(source, n, "row '" + label + "' needs " + std::to_string(want) + " values, found " +
                                            std::to_string(v.size()));
        }
    };
    const auto version = next(kWeightsMagic);
    if (version.size() != 1 || version[0] != kWeightsVersion) {
        throw ParseError(source, 1, "unsupported weights version");
    }
    const auto shape = next("shape");
    count(shape, 4, "shape");
    LstmShape s{static_cast<int>(shape[0]), static_cast<int>(shape[1]), static_cast<int>(shape[2]),
                static_cast<int>(shape[3])};
    if (s.input != kFeatureSize || s.output != 3 || s.hidden < 1 || s.layers < 1) {
        throw ParseError(source, n, "shape must have 20 inputs, 3 outputs and positive hidden size and depth");
    }
    LstmModel m;
    m.params = LstmParams(s);
    const auto seq = next("sequence_length");
    count(seq, 1, "sequence_length");
    if (!(seq[0] >= 1.0) || seq[0] != std::floor(seq[0])) {
        throw ParseError(source, n, "sequence_length must be a positive integer");
    }
    m.sequence_length = static_cast<int>(seq[0]);
    const auto rms = next("validation_rms");
    count(rms, 3, "validation_rms");
    m.validation_rms = Vec3(rms[0], rms[1], rms[2]);
    const auto mean = next("feature_mean");
    count(mean, kFeatureSize, "feature_mean");
    m.feature_mean = Eigen::Map<const FeatureVector>(mean.data());
    const auto scale = next("feature_scale");
    count(scale, kFeatureSize, "feature_scale");
    m.feature_scale = Eigen::Map<const FeatureVector>(scale.data());
    if ((m.feature_scale.array() <= 0.0).any()) {
        throw ParseError(source, n, "feature_scale entries must be positive");
    }
    const auto flat = next("params");
    count(flat, static_cast<std::size_t>(s.parameter_count()), "params");
    m.params.flat() = Eigen::Map<const Eigen::VectorXd>(flat.data(), s.parameter_count());
    return m;
}

inline void write_loss_curve(std::ostream& out, const std::vector<EpochRecord>& curve)
{
    std::vector<std::vector<double>> rows;
    for (const EpochRecord& e : curve) {
        rows.push_back({static_cast<double>(e.epoch), e.train_loss, e.validation_loss});
    }
    csv::write(out, schema::kLossCurve, rows);
}

inline std::vector<EpochRecord> read_loss_curve(std::istream& in, const std::string& source)
{
    const csv::Table t = csv::read(in, source, schema::kLossCurve);
    std::vector<EpochRecord> v;
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        v.push_back({detail::integral_field(t, k, 0, 0, 1 << 30), t.rows[k][1], t.rows[k][2]});
    }
    return v;
}

template <class Writer, class Value>
void save_file(const std::filesystem::path& path, Writer write, const Value& value)
{
    std::ofstream out = csv::open_out(path);
    write(out, value);
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

template <class Reader>
auto load_file(const std::filesystem::path& path, Reader read)
{
    std::ifstream in = csv::open_in(path);
    return read(in, path.string());
}

}  // namespace windest
