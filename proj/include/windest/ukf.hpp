#pragma once

// Unscented filter for pose, velocity, body rate, interaction force and wind.
//
// The filter state is an 18-vector [p, a, v, omega, f_touch, v_wind] where a is
// the attitude error (scaled MRP) around a reference quaternion. Sigma points
// for attitude are composed onto the reference; after prediction the reference
// follows the propagated central point, and after every update the attitude
// error mean is folded into the reference and zeroed.

#include "windest/airflow_sensor.hpp"
#include "windest/geom.hpp"
#include "windest/unscented.hpp"
#include "windest/vehicle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace windest {

namespace state_index {
inline constexpr int kPosition = 0;
inline constexpr int kAttitude = 3;
inline constexpr int kVelocity = 6;
inline constexpr int kRate = 9;
inline constexpr int kTouch = 12;
inline constexpr int kWind = 15;
inline constexpr int kDim = 18;
}  // namespace state_index

using StateVector = Eigen::Matrix<double, state_index::kDim, 1>;
using StateCovariance = Eigen::Matrix<double, state_index::kDim, state_index::kDim>;

struct BeliefState {
    UnitQuaternion reference;                          // q_WB reference
    StateVector mean = StateVector::Zero();
    StateCovariance cov = StateCovariance::Identity();
    double time = 0.0;

    Vec3 block(int start) const { return mean.segment<3>(start); }
    Vec3 position() const { return block(state_index::kPosition); }
    Vec3 velocity() const { return block(state_index::kVelocity); }
    Vec3 rate() const { return block(state_index::kRate); }
    Vec3 touch() const { return block(state_index::kTouch); }
    Vec3 wind() const { return block(state_index::kWind); }
    UnitQuaternion attitude() const { return compose_mrp(reference, block(state_index::kAttitude)); }
};

/// Continuous-time white-noise intensities per block (added as Q * dt).
struct ProcessNoise {
    double position = 1e-4;  // m^2/s
    double attitude = 1e-4;  // rad^2/s
    double velocity = 1e-2;  // (m/s)^2/s
    double rate = 1e-2;      // (rad/s)^2/s
    double touch = 1.0;      // N^2/s
    double wind = 0.5;       // (m/s)^2/s

    StateCovariance matrix() const
    {
        StateVector d;
        d << Vec3::Constant(position), Vec3::Constant(attitude), Vec3::Constant(velocity), Vec3::Constant(rate),
            Vec3::Constant(touch), Vec3::Constant(wind);
        if ((d.array() < 0.0).any()) {
            throw std::invalid_argument("ProcessNoise: intensities must be non-negative");
        }
        return d.asDiagonal();
    }
};

struct InnovationGate {
    bool enabled = false;
    double probability = 0.997;
};

struct FilterModel {
    VehicleParams vehicle;
    SensorRig rig = default_rig();
    ProcessNoise process;
    UtParams ut;
    InnovationGate gate;
};

struct OdometryMeasurement {
    Vec3 position = Vec3::Zero();
    UnitQuaternion attitude;
    Vec3 velocity = Vec3::Zero();
    Vec3 rate = Vec3::Zero();
    Eigen::Matrix<double, 12, 12> cov = Eigen::Matrix<double, 12, 12>::Identity();  // [p, a, v, omega]
};

struct UpdateOutcome {
    BeliefState belief;
    bool accepted = true;
    double nis = 0.0;  // normalized innovation squared
};

struct FilterOutput {
    Vec3 touch = Vec3::Zero();      // f_touch_W, N
    Vec3 wind = Vec3::Zero();       // v_wind_W, m/s
    Vec3 airflow_B = Vec3::Zero();  // v_inf_B, m/s
    Vec3 drag = Vec3::Zero();       // f_drag_W, N
};

/// Chi-square quantile (Wilson-Hilferty approximation); used only for gating.
inline double chi_square_quantile(double probability, int dof)
{
    // normal z-score by Newton iteration on the CDF
    double z = 0.0;
    for (int i = 0; i < 60; ++i) {
        const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
        const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        z -= (cdf - probability) / pdf;
    }
    const double k = dof;
    const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    return k * t * t * t;
}

namespace detail {

struct PointState {
    VehicleState vehicle;
    Vec3 touch;
    Vec3 wind;
};

inline PointState point_state(const UnitQuaternion& reference, const StateVector& x)
{
    using namespace state_index;
    PointState s;
    s.vehicle.position = x.segment<3>(kPosition);
    s.vehicle.attitude = compose_mrp(reference, x.segment<3>(kAttitude));
    s.vehicle.velocity = x.segment<3>(kVelocity);
    s.vehicle.rate = x.segment<3>(kRate);
    s.touch = x.segment<3>(kTouch);
    s.wind = x.segment<3>(kWind);
    return s;
}

inline StateVector pack(const PointState& s, const UnitQuaternion& reference)
{
    using namespace state_index;
    StateVector x;
    x.segment<3>(kPosition) = s.vehicle.position;
    x.segment<3>(kAttitude) = mrp_error(s.vehicle.attitude, reference);
    x.segment<3>(kVelocity) = s.vehicle.velocity;
    x.segment<3>(kRate) = s.vehicle.rate;
    x.segment<3>(kTouch) = s.touch;
    x.segment<3>(kWind) = s.wind;
    return x;
}

inline BeliefState reset_attitude(BeliefState b)
{
    using namespace state_index;
    b.reference = compose_mrp(b.reference, b.mean.segment<3>(kAttitude));
    b.mean.segment<3>(kAttitude).setZero();
    return b;
}

inline StateCovariance symmetrize(const StateCovariance& p)
{
    return 0.5 * (p + p.transpose());
}

}  // namespace detail

/// Sigma-point prediction over dt with the commanded wrench held constant.
inline BeliefState predict(const BeliefState& belief, const WrenchInput& u, double dt, const FilterModel& model)
{
    if (!(dt > 0.0) || dt > 0.1) {
        throw std::invalid_argument("predict: dt must be in (0, 0.1]");
    }
    const SigmaPointSet sp = make_sigma_points(belief.mean, belief.cov, model.ut);

    std::vector<detail::PointState> propagated;
    propagated.reserve(static_cast<std::size_t>(sp.size()));
    for (Eigen::Index i = 0; i < sp.size(); ++i) {
        detail::PointState s = detail::point_state(belief.reference, sp.points.col(i));
        s.vehicle = euler_step(s.vehicle, u, DisturbanceInput{s.wind, s.touch}, model.vehicle, dt);
        propagated.push_back(s);
    }

    BeliefState out;
    out.reference = propagated.front().vehicle.attitude;
    MatX points(state_index::kDim, sp.size());
    for (Eigen::Index i = 0; i < sp.size(); ++i) {
        points.col(i) = detail::pack(propagated[static_cast<std::size_t>(i)], out.reference);
    }
    const VecX mean = weighted_mean(points, sp.mean_weights);
    out.mean = mean;
    out.cov = detail::symmetrize(weighted_cross_covariance(points, mean, points, mean, sp.cov_weights)) +
              model.process.matrix() * dt;
    out.time = belief.time + dt;
    return detail::reset_attitude(out);
}

namespace detail {

inline bool gate_rejects(const InnovationGate& gate, double nis, Eigen::Index dim)
{
    return gate.enabled && nis > chi_square_quantile(gate.probability, static_cast<int>(dim));
}

/// Unscented update with a measurement function of the full point state.
template <class H>
UpdateOutcome unscented_update(const BeliefState& belief, const VecX& z, const MatX& noise, H&& h,
                               const FilterModel& model)
{
    const SigmaPointSet sp = make_sigma_points(belief.mean, belief.cov, model.ut);
    MatX ys(z.size(), sp.size());
    for (Eigen::Index i = 0; i < sp.size(); ++i) {
        ys.col(i) = h(point_state(belief.reference, sp.points.col(i)));
    }
    const VecX y_mean = weighted_mean(ys, sp.mean_weights);
    const MatX s = symmetrized(weighted_cross_covariance(ys, y_mean, ys, y_mean, sp.cov_weights)) + noise;
    const MatX pxy = weighted_cross_covariance(sp.points, VecX(belief.mean), ys, y_mean, sp.cov_weights);

    const Eigen::LDLT<MatX> s_ldlt(s);
    if (s_ldlt.info() != Eigen::Success || !s_ldlt.isPositive()) {
        throw NumericalError("innovation covariance is not positive definite");
    }
    const VecX innovation = z - y_mean;
    UpdateOutcome result{belief, true, innovation.dot(s_ldlt.solve(innovation))};
    if (gate_rejects(model.gate, result.nis, z.size())) {
        result.accepted = false;
        return result;
    }
    const MatX gain = s_ldlt.solve(pxy.transpose()).transpose();
    result.belief.mean += gain * innovation;
    result.belief.cov = symmetrize(belief.cov - gain * s * gain.transpose());
    result.belief = reset_attitude(result.belief);
    return result;
}

}  // namespace detail

/// Linear Kalman update on the position, attitude, velocity and rate blocks.
inline UpdateOutcome update_odometry(const BeliefState& belief, const OdometryMeasurement& z, const FilterModel& model)
{
    using namespace state_index;
    Eigen::Matrix<double, 12, 1> innovation;
    innovation.segment<3>(0) = z.position - belief.position();
    innovation.segment<3>(3) = mrp_error(z.attitude, belief.reference) - belief.mean.segment<3>(kAttitude);
    innovation.segment<3>(6) = z.velocity - belief.velocity();
    innovation.segment<3>(9) = z.rate - belief.rate();

    const Eigen::Matrix<double, 12, 12> s = belief.cov.topLeftCorner<12, 12>() + z.cov;
    const Eigen::LDLT<Eigen::Matrix<double, 12, 12>> s_ldlt(s);
    if (s_ldlt.info() != Eigen::Success || !s_ldlt.isPositive()) {
        throw NumericalError("odometry innovation covariance is not positive definite");
    }
    UpdateOutcome result{belief, true, innovation.dot(s_ldlt.solve(innovation))};
    if (detail::gate_rejects(model.gate, result.nis, 12)) {
        result.accepted = false;
        return result;
    }

    // K = P H^T S^-1 with H = [I_12 0]
    const Eigen::Matrix<double, kDim, 12> pht = belief.cov.leftCols<12>();
    const Eigen::Matrix<double, kDim, 12> gain = s_ldlt.solve(pht.transpose()).transpose();
    result.belief.mean += gain * innovation;

    // Joseph form keeps the covariance PSD under roundoff.
    StateCovariance ikh = StateCovariance::Identity();
    ikh.leftCols<12>() -= gain;
    result.belief.cov =
        detail::symmetrize(ikh * belief.cov * ikh.transpose() + gain * z.cov * gain.transpose());
    result.belief = detail::reset_attitude(result.belief);
    return result;
}

/// Stacked whisker deflections predicted for a point state; sensors with
/// `active[i] == false` are skipped.
inline VecX predict_rig_deflections(const detail::PointState& s, const SensorRig& rig, const std::vector<bool>& active)
{
    const Vec3 airflow_B = body_airflow(s.vehicle.attitude, s.wind, s.vehicle.velocity);
    VecX y(2 * std::count(active.begin(), active.end(), true));
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < rig.size(); ++i) {
        if (!active[i]) {
            continue;
        }
        const DeflectionAngles th = predict_deflection(sensor_airflow(airflow_B, s.vehicle.rate, rig[i]),
                                                       rig[i].coefficient);
        y(row++) = th.theta_x;
        y(row++) = th.theta_y;
    }
    return y;
}

/// Unscented update with one synchronous whisker sample. Missing (invalid)
/// readings are dropped together with their rows/columns of `noise` (2N x 2N).
inline UpdateOutcome update_airflow(const BeliefState& belief, const std::vector<std::optional<DeflectionAngles>>& theta,
                                    const MatX& noise, const FilterModel& model)
{
    const SensorRig& rig = model.rig;
    if (theta.size() != rig.size()) {
        throw std::invalid_argument("update_airflow: one reading per sensor expected");
    }
    const Eigen::Index full = 2 * static_cast<Eigen::Index>(rig.size());
    if (noise.rows() != full || noise.cols() != full) {
        throw std::invalid_argument("update_airflow: noise must be 2N x 2N");
    }
    std::vector<bool> active(rig.size());
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < rig.size(); ++i) {
        active[i] = theta[i].has_value();
        if (active[i]) {
            rows.push_back(2 * static_cast<Eigen::Index>(i));
            rows.push_back(2 * static_cast<Eigen::Index>(i) + 1);
        }
    }
    if (rows.empty()) {
        return {belief, false, 0.0};
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    VecX z(m);
    MatX r(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const auto& th = *theta[static_cast<std::size_t>(rows[a] / 2)];
        z(a) = rows[a] % 2 == 0 ? th.theta_x : th.theta_y;
        for (Eigen::Index b = 0; b < m; ++b) {
            r(a, b) = noise(rows[a], rows[b]);
        }
    }
    return detail::unscented_update(
        belief, z, r, [&](const detail::PointState& s) { return predict_rig_deflections(s, rig, active); }, model);
}

/// Unscented update with a body-frame relative-airflow pseudo-measurement.
inline UpdateOutcome update_airflow_pseudo(const BeliefState& belief, const Vec3& airflow_B, const Eigen::Matrix3d& noise,
                                           const FilterModel& model)
{
    return detail::unscented_update(
        belief, VecX(airflow_B), MatX(noise),
        [](const detail::PointState& s) { return VecX(body_airflow(s.vehicle.attitude, s.wind, s.vehicle.velocity)); },
        model);
}

inline FilterOutput output(const BeliefState& belief, const VehicleParams& params)
{
    FilterOutput y;
    y.touch = belief.touch();
    y.wind = belief.wind();
    y.airflow_B = body_airflow(belief.attitude(), belief.wind(), belief.velocity());
    y.drag = drag_force(relative_airflow_world(belief.wind(), belief.velocity()), params);
    return y;
}

/// Error of the belief w.r.t. a true state, in the filter's error coordinates.
inline StateVector estimation_error(const BeliefState& belief, const VehicleState& truth, const Vec3& touch,
                                    const Vec3& wind)
{
    using namespace state_index;
    StateVector e;
    e.segment<3>(kPosition) = truth.position - belief.position();
    e.segment<3>(kAttitude) = mrp_error(truth.attitude, belief.attitude());
    e.segment<3>(kVelocity) = truth.velocity - belief.velocity();
    e.segment<3>(kRate) = truth.rate - belief.rate();
    e.segment<3>(kTouch) = touch - belief.touch();
    e.segment<3>(kWind) = wind - belief.wind();
    return e;
}

inline double nees(const BeliefState& belief, const StateVector& error)
{
    return error.dot(belief.cov.ldlt().solve(error));
}

}  // namespace windest
