#pragma once

// Whisker driver (outlier rejection against a low-pass reference), startup
// calibration of angle offsets, and zero-order-hold alignment of the
// multi-rate channels onto the 50 Hz whisker clock.

#include "windest/airflow_sensor.hpp"
#include "windest/flight_log.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace windest {

struct LowPassState {
    Vec3 filtered = Vec3::Zero();
    double alpha = 0.3;       // smoothing factor in (0, 1)
    double threshold = 50.0;  // field units
    bool initialized = false;

    void validate() const
    {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw std::invalid_argument("LowPassState: alpha must be in (0, 1)");
        }
        if (!(threshold > 0.0)) {
            throw std::invalid_argument("LowPassState: threshold must be positive");
        }
    }
};

inline Vec3 field_vec(const MagneticField& b)
{
    return {b.bx, b.by, b.bz};
}

/// Rejects a reading if any component differs from the low-pass value by more
/// than the threshold. The low-pass filter is updated with every reading.
inline std::pair<std::optional<MagneticField>, LowPassState> driver_step(const MagneticField& raw, LowPassState lp)
{
    const Vec3 b = field_vec(raw);
    if (!lp.initialized) {
        lp.filtered = b;
        lp.initialized = true;
        return {raw, lp};
    }
    const bool outlier = ((b - lp.filtered).cwiseAbs().array() > lp.threshold).any();
    lp.filtered = (1.0 - lp.alpha) * lp.filtered + lp.alpha * b;
    if (outlier) {
        return {std::nullopt, lp};
    }
    return {raw, lp};
}

/// Readings rejected after a sustained step of size `step` before the driver
/// accepts again: ceil(ln(threshold / step) / ln(1 - alpha)); zero if step <= threshold.
inline int driver_rejections(double step, double threshold, double alpha)
{
    if (step <= threshold) {
        return 0;
    }
    return static_cast<int>(std::ceil(std::log(threshold / step) / std::log(1.0 - alpha)));
}

inline constexpr double kDriverAlpha = 0.3;
inline constexpr double kDriverSigmaMultiple = 6.0;
inline constexpr double kDriverThresholdFloor = 0.1;  // fraction of the rest field magnitude
inline constexpr double kCalibrationWindow = 1.0;     // s
inline constexpr double kMaxCalibrationOffset = 0.2;  // rad

/// Per-sensor startup statistics from the readings taken at rest.
struct SensorCalibration {
    std::vector<DeflectionAngles> offsets;  // subtracted from every reading
    std::vector<double> thresholds;         // driver thresholds, field units
};

/// Offsets are the mean deflections over the first `window` seconds; each
/// driver threshold is max(6 sigma, 10% of |b|) of that sensor's field components.
inline SensorCalibration calibrate_sensors(const std::vector<WhiskerSample>& samples, const SensorRig& rig,
                                           double window = kCalibrationWindow)
{
    const std::size_t n = rig.size();
    std::vector<Vec3> sum(n, Vec3::Zero());
    std::vector<Vec3> sum_sq(n, Vec3::Zero());
    std::vector<Eigen::Vector2d> angle_sum(n, Eigen::Vector2d::Zero());
    std::vector<int> angle_count(n, 0);
    int count = 0;
    for (const WhiskerSample& s : samples) {
        if (s.t - samples.front().t >= window) {
            break;
        }
        if (s.field.size() != n) {
            throw std::invalid_argument("calibrate_sensors: reading count does not match the rig");
        }
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3 b = field_vec(s.field[i]);
            sum[i] += b;
            sum_sq[i] += b.cwiseAbs2();
            if (const auto th = deflection_from_field(s.field[i], rig[i].polarity)) {
                angle_sum[i] += th->vec();
                ++angle_count[i];
            }
        }
        ++count;
    }
    if (count < 2) {
        throw std::invalid_argument("calibrate_sensors: need at least two readings in the window");
    }
    SensorCalibration cal;
    for (std::size_t i = 0; i < n; ++i) {
        if (angle_count[i] == 0) {
            throw std::invalid_argument("calibrate_sensors: sensor has no valid reading at rest");
        }
        const Eigen::Vector2d mean = angle_sum[i] / angle_count[i];
        if (mean.cwiseAbs().maxCoeff() >= kMaxCalibrationOffset) {
            throw std::invalid_argument("calibrate_sensors: offset exceeds 0.2 rad");
        }
        cal.offsets.push_back({mean.x(), mean.y()});
        const Vec3 m = sum[i] / count;
        const Vec3 var = (sum_sq[i] / count - m.cwiseAbs2()).cwiseMax(0.0);
        cal.thresholds.push_back(
            std::max(kDriverSigmaMultiple * std::sqrt(var.maxCoeff()), kDriverThresholdFloor * m.norm()));
    }
    return cal;
}

/// Driver plus offset correction for the whole rig.
class WhiskerDriver {
public:
    WhiskerDriver(const SensorRig& rig, const SensorCalibration& cal, double alpha = kDriverAlpha)
        : rig_(rig), offsets_(cal.offsets)
    {
        if (cal.offsets.size() != rig.size() || cal.thresholds.size() != rig.size()) {
            throw std::invalid_argument("WhiskerDriver: calibration does not match the rig");
        }
        for (double th : cal.thresholds) {
            LowPassState lp;
            lp.alpha = alpha;
            lp.threshold = th;
            lp.validate();
            state_.push_back(lp);
        }
    }

    std::vector<std::optional<DeflectionAngles>> process(const WhiskerSample& s)
    {
        if (s.field.size() != rig_.size()) {
            throw std::invalid_argument("WhiskerDriver: reading count does not match the rig");
        }
        std::vector<std::optional<DeflectionAngles>> out(rig_.size());
        for (std::size_t i = 0; i < rig_.size(); ++i) {
            auto [accepted, lp] = driver_step(s.field[i], state_[i]);
            state_[i] = lp;
            if (!accepted) {
                ++rejected_;
                continue;
            }
            if (auto th = deflection_from_field(*accepted, rig_[i].polarity)) {
                th->theta_x -= offsets_[i].theta_x;
                th->theta_y -= offsets_[i].theta_y;
                out[i] = th;
            }
        }
        return out;
    }

    long rejected() const { return rejected_; }

private:
    SensorRig rig_;
    std::vector<DeflectionAngles> offsets_;
    std::vector<LowPassState> state_;
    long rejected_ = 0;
};

/// One row on the whisker clock with the latest sample of every other channel.
struct AlignedSample {
    double t = 0.0;
    WhiskerSample whiskers;
    OdometrySample odometry;
    ImuSample imu;
    ThrottleSample throttle;
    CommandSample command;
};

namespace detail {

template <class Sample>
void check_monotone(const std::vector<Sample>& v, const char* channel)
{
    if (v.empty()) {
        throw std::invalid_argument(std::string("resample_50hz: empty channel ") + channel);
    }
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i].t > v[i - 1].t)) {
            throw std::invalid_argument(std::string("resample_50hz: timestamps not increasing in ") + channel);
        }
    }
}

/// Index of the last sample with time <= t (caller guarantees one exists), advancing `i`.
template <class Sample>
std::size_t hold_index(const std::vector<Sample>& v, double t, std::size_t& i)
{
    while (i + 1 < v.size() && v[i + 1].t <= t + 1e-9) {
        ++i;
    }
    return i;
}

}  // namespace detail

/// Zero-order hold of odometry, IMU, throttle and command channels onto the
/// whisker timestamps inside the window covered by every channel.
inline std::vector<AlignedSample> resample_50hz(const FlightLog& log)
{
    detail::check_monotone(log.whiskers, "whiskers");
    detail::check_monotone(log.odometry, "odometry");
    detail::check_monotone(log.imu, "imu");
    detail::check_monotone(log.throttle, "throttle");
    detail::check_monotone(log.commands, "commands");
    const double start = std::max({log.odometry.front().t, log.imu.front().t, log.throttle.front().t,
                                   log.commands.front().t});
    const double end = std::min({log.odometry.back().t, log.imu.back().t, log.throttle.back().t,
                                 log.commands.back().t});
    std::vector<AlignedSample> out;
    std::size_t io = 0;
    std::size_t ii = 0;
    std::size_t it = 0;
    std::size_t ic = 0;
    for (const WhiskerSample& w : log.whiskers) {
        if (w.t < start - 1e-9 || w.t > end + 1e-9) {
            continue;
        }
        AlignedSample row;
        row.t = w.t;
        row.whiskers = w;
        row.odometry = log.odometry[detail::hold_index(log.odometry, w.t, io)];
        row.imu = log.imu[detail::hold_index(log.imu, w.t, ii)];
        row.throttle = log.throttle[detail::hold_index(log.throttle, w.t, it)];
        row.command = log.commands[detail::hold_index(log.commands, w.t, ic)];
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace windest
