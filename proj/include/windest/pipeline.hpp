#pragma once

// Log replay: drives the disturbance filter from a recorded flight, builds
// the LSTM dataset, and identifies drag and sensor coefficients from logs.

#include "windest/flight_log.hpp"
#include "windest/flight_sim.hpp"
#include "windest/lstm.hpp"
#include "windest/preprocess.hpp"
#include "windest/sysid.hpp"
#include "windest/ukf.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace windest {

enum class AirflowSource { Model, Lstm };

inline std::string to_string(AirflowSource s)
{
    return s == AirflowSource::Model ? "model" : "lstm";
}

inline AirflowSource parse_airflow_source(const std::string& s)
{
    if (s == "model") {
        return AirflowSource::Model;
    }
    if (s == "lstm") {
        return AirflowSource::Lstm;
    }
    throw std::invalid_argument("airflow source must be 'model' or 'lstm', got '" + s + "'");
}

/// Standard deviations of the odometry channels as seen by the filter.
struct OdometryNoise {
    double position = 0.005;
    double attitude = 0.2 * std::numbers::pi / 180.0;
    double velocity = 0.02;
    double rate = 0.01;

    Eigen::Matrix<double, 12, 12> matrix() const
    {
        Eigen::Matrix<double, 12, 1> d;
        d << Vec3::Constant(position * position), Vec3::Constant(attitude * attitude),
            Vec3::Constant(velocity * velocity), Vec3::Constant(rate * rate);
        return d.asDiagonal();
    }
};

/// Initial standard deviations around the first odometry sample.
struct InitialUncertainty {
    double position = 0.05;
    double attitude = 0.05;
    double velocity = 0.1;
    double rate = 0.1;
    double touch = 1.0;
    double wind = 1.0;
};

struct EstimatorConfig {
    FilterModel filter;
    OdometryNoise odometry;
    InitialUncertainty initial;
    double angle_noise = 0.02;         // rad, whisker update
    double pseudo_noise_floor = 0.05;  // m/s, lower bound on the LSTM pseudo-measurement std
    double driver_alpha = kDriverAlpha;
    AirflowSource source = AirflowSource::Model;
};

struct EstimateSample {
    double t = 0.0;
    Vec3 touch = Vec3::Zero();      // N, world
    Vec3 wind = Vec3::Zero();       // m/s, world
    Vec3 airflow_B = Vec3::Zero();  // m/s, body
    Vec3 drag = Vec3::Zero();       // N, world
    Vec3 velocity = Vec3::Zero();   // m/s, world
    Vec3 touch_std = Vec3::Zero();
    Vec3 wind_std = Vec3::Zero();
    int sensors = 0;                // whisker readings used (0 for the pseudo-measurement path)
};

struct EstimationRun {
    std::vector<EstimateSample> estimates;
    long rejected_readings = 0;
    long gated_updates = 0;
};

namespace detail {

inline BeliefState initial_belief(const OdometrySample& o, const InitialUncertainty& u)
{
    using namespace state_index;
    BeliefState b;
    b.reference = o.attitude;
    b.mean.setZero();
    b.mean.segment<3>(kPosition) = o.position;
    b.mean.segment<3>(kVelocity) = o.velocity;
    b.mean.segment<3>(kRate) = o.rate;
    StateVector d;
    d << Vec3::Constant(u.position), Vec3::Constant(u.attitude), Vec3::Constant(u.velocity), Vec3::Constant(u.rate),
        Vec3::Constant(u.touch), Vec3::Constant(u.wind);
    b.cov = d.cwiseAbs2().asDiagonal();
    b.time = o.t;
    return b;
}

inline EstimateSample snapshot(const BeliefState& b, const VehicleParams& vehicle, int sensors)
{
    using namespace state_index;
    const FilterOutput y = output(b, vehicle);
    EstimateSample e;
    e.t = b.time;
    e.touch = y.touch;
    e.wind = y.wind;
    e.airflow_B = y.airflow_B;
    e.drag = y.drag;
    e.velocity = b.velocity();
    e.touch_std = b.cov.diagonal().segment<3>(kTouch).cwiseMax(0.0).cwiseSqrt();
    e.wind_std = b.cov.diagonal().segment<3>(kWind).cwiseMax(0.0).cwiseSqrt();
    e.sensors = sensors;
    return e;
}

/// Predicts to time t in steps no longer than max_dt.
inline BeliefState advance(BeliefState b, double t, const WrenchInput& u, const FilterModel& model,
                           double max_dt = 0.01)
{
    while (t - b.time > 1e-9) {
        b = predict(b, u, std::min(max_dt, t - b.time), model);
    }
    return b;
}

inline std::vector<double> throttle_vector(const ThrottleSample& s)
{
    return {s.throttle.begin(), s.throttle.end()};
}

inline std::vector<SpinDirection> spin_vector(const RotorLayout& rotors = {})
{
    const auto s = rotors.spin();
    return {s.begin(), s.end()};
}

}  // namespace detail

/// Builds network inputs from aligned rows. Rejected or invalid whisker
/// readings hold the last accepted value (zero before the first).
class FeatureBuilder {
public:
    FeatureBuilder(const SensorRig& rig, const SensorCalibration& cal, double alpha = kDriverAlpha)
        : driver_(rig, cal, alpha), held_(rig.size()), spin_(detail::spin_vector())
    {
        if (rig.size() != static_cast<std::size_t>(kSensorCount)) {
            throw std::invalid_argument("FeatureBuilder: the network expects four sensors");
        }
    }

    FeatureVector operator()(const AlignedSample& row)
    {
        const auto theta = driver_.process(row.whiskers);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            if (theta[i]) {
                held_[i] = *theta[i];
            }
        }
        std::vector<double> u = detail::throttle_vector(row.throttle);
        for (double& x : u) {
            x = std::clamp(x, 0.0, 1.0);
        }
        return build_feature_vector(held_, row.imu.gyro, row.imu.accel, u, spin_);
    }

    long rejected() const { return driver_.rejected(); }

private:
    WhiskerDriver driver_;
    std::vector<DeflectionAngles> held_;
    std::vector<SpinDirection> spin_;
};

/// Relative airflow label for the no-wind training flights: -R^T v from odometry.
inline Vec3 airflow_label(const OdometrySample& o)
{
    return -quat_rotate(o.attitude.conjugate(), o.velocity);
}

/// Features and labels at 50 Hz for one log.
inline TrainingRun build_training_run(const FlightLog& log, const SensorRig& rig)
{
    const std::vector<AlignedSample> rows = resample_50hz(log);
    if (rows.empty()) {
        throw std::invalid_argument("build_training_run: no aligned rows");
    }
    FeatureBuilder features(rig, calibrate_sensors(log.whiskers, rig));
    TrainingRun run;
    run.features.resize(kFeatureSize, static_cast<Eigen::Index>(rows.size()));
    run.labels.resize(3, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto c = static_cast<Eigen::Index>(k);
        run.features.col(c) = features(rows[k]);
        run.labels.col(c) = airflow_label(rows[k].odometry);
    }
    return run;
}

/// Network output at 50 Hz on the aligned rows of a log.
struct AirflowTrack {
    std::vector<double> t;
    std::vector<Vec3> airflow_B;
};

inline AirflowTrack lstm_airflow_track(const FlightLog& log, const SensorRig& rig, const LstmModel& model)
{
    FeatureBuilder features(rig, calibrate_sensors(log.whiskers, rig));
    LstmAirflowEstimator net(model);
    AirflowTrack track;
    for (const AlignedSample& row : resample_50hz(log)) {
        track.t.push_back(row.t);
        track.airflow_B.push_back(net.push(features(row)));
    }
    return track;
}

/// Replays a log through the filter. Predictions use the commanded wrench
/// (200 Hz), odometry updates run at 100 Hz, and at 50 Hz either the whisker
/// update or the LSTM pseudo-measurement update. One estimate per 50 Hz tick.
inline EstimationRun run_estimator(const FlightLog& log, const EstimatorConfig& cfg, const LstmModel* lstm = nullptr)
{
    if (log.odometry.empty() || log.commands.empty() || log.whiskers.empty()) {
        throw std::invalid_argument("run_estimator: log needs odometry, commands and whiskers");
    }
    if (cfg.source == AirflowSource::Lstm && lstm == nullptr) {
        throw std::invalid_argument("run_estimator: the lstm source needs trained weights");
    }
    const FilterModel& model = cfg.filter;
    const SensorCalibration cal = calibrate_sensors(log.whiskers, model.rig);
    WhiskerDriver driver(model.rig, cal, cfg.driver_alpha);

    const Eigen::Index n2 = 2 * static_cast<Eigen::Index>(model.rig.size());
    const MatX angle_noise = MatX::Identity(n2, n2) * (cfg.angle_noise * cfg.angle_noise);
    const Eigen::Matrix<double, 12, 12> odo_noise = cfg.odometry.matrix();

    std::vector<AlignedSample> rows;
    std::optional<FeatureBuilder> features;
    std::optional<LstmAirflowEstimator> net;
    Eigen::Matrix3d pseudo_noise = Eigen::Matrix3d::Identity();
    if (cfg.source == AirflowSource::Lstm) {
        rows = resample_50hz(log);
        features.emplace(model.rig, cal, cfg.driver_alpha);
        net.emplace(*lstm);
        const Vec3 s = lstm->validation_rms.cwiseMax(cfg.pseudo_noise_floor);
        pseudo_noise = s.cwiseAbs2().asDiagonal();
    }

    EstimationRun run;
    BeliefState b = detail::initial_belief(log.odometry.front(), cfg.initial);
    WrenchInput u;
    std::size_t ic = 0;
    std::size_t io = 1;
    std::size_t ir = 0;
    auto tally = [&](const UpdateOutcome& r) {
        if (!r.accepted) {
            ++run.gated_updates;
        }
        return r.belief;
    };
    // Commands and odometry up to and including time t.
    auto catch_up = [&](double t) {
        while (true) {
            const double tc = ic < log.commands.size() ? log.commands[ic].t : INFINITY;
            const double to = io < log.odometry.size() ? log.odometry[io].t : INFINITY;
            const double next = std::min(tc, to);
            if (next > t + 1e-9) {
                break;
            }
            if (next > b.time) {
                b = detail::advance(b, next, u, model);
            }
            if (tc <= to) {
                u = log.commands[ic++].wrench;
                continue;
            }
            const OdometrySample& o = log.odometry[io++];
            b = tally(update_odometry(b, {o.position, o.attitude, o.velocity, o.rate, odo_noise}, model));
        }
        if (t > b.time) {
            b = detail::advance(b, t, u, model);
        }
    };

    for (const WhiskerSample& w : log.whiskers) {
        if (w.t < b.time - 1e-9) {
            continue;
        }
        catch_up(w.t);
        int used = 0;
        if (cfg.source == AirflowSource::Model) {
            const auto theta = driver.process(w);
            used = static_cast<int>(std::count_if(theta.begin(), theta.end(), [](const auto& x) { return x.has_value(); }));
            b = tally(update_airflow(b, theta, angle_noise, model));
        } else {
            while (ir < rows.size() && rows[ir].t < w.t - 1e-9) {
                net->push((*features)(rows[ir++]));
            }
            if (ir < rows.size() && std::abs(rows[ir].t - w.t) < 1e-9) {
                const Vec3 airflow = net->push((*features)(rows[ir++]));
                if (net->warm()) {
                    b = tally(update_airflow_pseudo(b, airflow, pseudo_noise, model));
                }
            }
        }
        run.estimates.push_back(detail::snapshot(b, model.vehicle, used));
    }
    run.rejected_readings = cfg.source == AirflowSource::Model ? driver.rejected() : features->rejected();
    return run;
}

// ---------------------------------------------------------------- identification from logs

struct LogIdentification {
    DragFit drag;
    std::vector<double> sensor_coefficients;
    std::size_t drag_samples = 0;
};

/// Drag samples from the steady constant-speed segments of a circle flight:
/// thrust from the command, acceleration from smoothed odometry velocity.
inline std::vector<DragSample> drag_samples_from_log(const FlightLog& log, const VehicleParams& vehicle,
                                                     int half_window = 5)
{
    if (log.truth.empty() || log.odometry.size() < static_cast<std::size_t>(2 * half_window + 1)) {
        throw IdentificationError("drag_samples_from_log: log too short");
    }
    std::vector<double> t;
    std::vector<Vec3> v;
    for (const OdometrySample& o : log.odometry) {
        t.push_back(o.t);
        v.push_back(o.velocity);
    }
    const std::vector<Vec3> accel = smoothed_derivative(t, v, half_window);
    std::vector<DragSample> out;
    std::size_t it = 0;
    std::size_t ic = 0;
    for (std::size_t k = static_cast<std::size_t>(half_window); k + static_cast<std::size_t>(half_window) < t.size(); ++k) {
        while (it + 1 < log.truth.size() && log.truth[it + 1].t <= t[k] + 1e-9) {
            ++it;
        }
        while (ic + 1 < log.commands.size() && log.commands[ic + 1].t <= t[k] + 1e-9) {
            ++ic;
        }
        const TruthSample& tr = log.truth[it];
        if (!tr.steady || tr.phase != FlightPhase::Execute) {
            continue;
        }
        const OdometrySample& o = log.odometry[k];
        const double speed = o.velocity.norm();
        if (speed < 0.5) {
            continue;
        }
        const Vec3 a_B = quat_rotate(o.attitude.conjugate(), accel[k] - gravity_vector(vehicle));
        const Vec3 dir_B = quat_rotate(o.attitude.conjugate(), o.velocity / speed);
        out.push_back(drag_sample(log.commands[ic].wrench.thrust, vehicle.mass, a_B, dir_B, speed));
    }
    return out;
}

/// Lumped whisker coefficients from a calm flight, using odometry velocity as
/// the relative airflow.
inline std::vector<double> sensor_coefficients_from_log(const FlightLog& log, const SensorRig& rig)
{
    const SensorCalibration cal = calibrate_sensors(log.whiskers, rig);
    WhiskerDriver driver(rig, cal);
    std::vector<std::vector<DeflectionAngles>> angles(rig.size());
    std::vector<std::vector<Vec3>> airflow(rig.size());
    for (const AlignedSample& row : resample_50hz(log)) {
        const auto theta = driver.process(row.whiskers);
        const Vec3 v_inf = airflow_label(row.odometry);
        for (std::size_t i = 0; i < rig.size(); ++i) {
            if (theta[i]) {
                angles[i].push_back(*theta[i]);
                airflow[i].push_back(sensor_airflow(v_inf, row.odometry.rate, rig[i]));
            }
        }
    }
    std::vector<double> c;
    for (std::size_t i = 0; i < rig.size(); ++i) {
        c.push_back(identify_sensor_coefficient(angles[i], airflow[i]));
    }
    return c;
}

inline LogIdentification identify_from_log(const FlightLog& log, const VehicleParams& vehicle, const SensorRig& rig)
{
    LogIdentification id;
    const std::vector<DragSample> samples = drag_samples_from_log(log, vehicle);
    id.drag_samples = samples.size();
    id.drag = fit_drag_polynomial(samples);
    id.sensor_coefficients = sensor_coefficients_from_log(log, rig);
    return id;
}

}  // namespace windest
