#pragma once

// Rigid-body multirotor model with isotropic drag, commanded wrench and
// interaction force. Disturbances produce no torque.

#include "windest/geom.hpp"

#include <stdexcept>

namespace windest {

inline constexpr int kRotorCount = 6;

enum class SpinDirection { Clockwise, CounterClockwise };

struct VehicleParams {
    double mass = 1.31;  // kg
    // Not an identified value: plausible diagonal inertia for a ~1.3 kg hexarotor.
    Mat3 inertia = Eigen::Vector3d(0.025, 0.025, 0.045).asDiagonal();
    double mu1 = 0.20;  // N s / m
    double mu2 = 0.07;  // N s^2 / m^2
    double gravity = 9.81;

    void validate() const
    {
        if (!(mass > 0.0)) {
            throw std::invalid_argument("VehicleParams: mass must be positive");
        }
        if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
            throw std::invalid_argument("VehicleParams: inertia must be symmetric");
        }
        if (Eigen::SelfAdjointEigenSolver<Mat3>(inertia).eigenvalues().minCoeff() <= 0.0) {
            throw std::invalid_argument("VehicleParams: inertia must be positive definite");
        }
        if (mu1 < 0.0 || mu2 < 0.0) {
            throw std::invalid_argument("VehicleParams: drag coefficients must be non-negative");
        }
    }
};

struct VehicleState {
    Vec3 position = Vec3::Zero();  // p_W, m
    Vec3 velocity = Vec3::Zero();  // v_W, m/s
    UnitQuaternion attitude;       // q_WB
    Vec3 rate = Vec3::Zero();      // omega_B, rad/s
};

struct WrenchInput {
    double thrust = 0.0;           // f_cmd along body z, N
    Vec3 torque = Vec3::Zero();    // tau_cmd_B, N m
};

struct DisturbanceInput {
    Vec3 wind = Vec3::Zero();      // v_wind_W, m/s
    Vec3 touch = Vec3::Zero();     // f_touch_W, N
};

struct StateDerivative {
    Vec3 velocity = Vec3::Zero();      // p_dot
    Vec3 rate = Vec3::Zero();          // body rate driving R_dot = R [omega x]
    Vec3 acceleration = Vec3::Zero();  // v_dot
    Vec3 angular_acceleration = Vec3::Zero();
};

inline constexpr double kDragSpeedEpsilon = 1e-9;

inline Vec3 relative_airflow_world(const Vec3& wind_W, const Vec3& velocity_W)
{
    return wind_W - velocity_W;
}

/// Isotropic drag (mu1 v + mu2 v^2) along the relative airflow.
inline Vec3 drag_force(const Vec3& airflow_W, const VehicleParams& params)
{
    const double speed = airflow_W.norm();
    if (speed < kDragSpeedEpsilon) {
        return Vec3::Zero();
    }
    return (params.mu1 + params.mu2 * speed) * airflow_W;
}

inline double drag_magnitude(double speed, const VehicleParams& params)
{
    return params.mu1 * speed + params.mu2 * speed * speed;
}

inline Vec3 gravity_vector(const VehicleParams& params)
{
    return {0.0, 0.0, -params.gravity};
}

/// World-frame acceleration from the translational row of the dynamics.
inline Vec3 translational_acceleration(const UnitQuaternion& attitude, const Vec3& velocity, double thrust,
                                       const DisturbanceInput& d, const VehicleParams& params)
{
    const Vec3 thrust_W = quat_rotate(attitude, Vec3(0.0, 0.0, thrust));
    const Vec3 drag = drag_force(relative_airflow_world(d.wind, velocity), params);
    return (thrust_W + drag + d.touch) / params.mass + gravity_vector(params);
}

inline Vec3 angular_acceleration(const Vec3& rate, const Vec3& torque, const VehicleParams& params)
{
    return params.inertia.ldlt().solve(torque - rate.cross(params.inertia * rate));
}

inline StateDerivative continuous_dynamics(const VehicleState& x, const WrenchInput& u, const DisturbanceInput& d,
                                           const VehicleParams& params)
{
    StateDerivative dx;
    dx.velocity = x.velocity;
    dx.rate = x.rate;
    dx.acceleration = translational_acceleration(x.attitude, x.velocity, u.thrust, d, params);
    dx.angular_acceleration = angular_acceleration(x.rate, u.torque, params);
    return dx;
}

namespace detail {

inline Eigen::Vector4d quat_derivative(const Eigen::Vector4d& q, const Vec3& omega)
{
    // q_dot = 0.5 q (x) (0, omega), scalar first
    const double w = q(0);
    const Vec3 v = q.tail<3>();
    Eigen::Vector4d dq;
    dq(0) = -0.5 * v.dot(omega);
    dq.tail<3>() = 0.5 * (w * omega + v.cross(omega));
    return dq;
}

struct FlatState {
    Vec3 p;
    Eigen::Vector4d q;
    Vec3 v;
    Vec3 w;
};

inline FlatState flat_derivative(const FlatState& s, const WrenchInput& u, const DisturbanceInput& d,
                                 const VehicleParams& params)
{
    const UnitQuaternion att(s.q(0), s.q(1), s.q(2), s.q(3));
    return {s.v, quat_derivative(s.q, s.w), translational_acceleration(att, s.v, u.thrust, d, params),
            angular_acceleration(s.w, u.torque, params)};
}

inline FlatState axpy(const FlatState& s, double h, const FlatState& k)
{
    return {s.p + h * k.p, s.q + h * k.q, s.v + h * k.v, s.w + h * k.w};
}

}  // namespace detail

/// Fixed-step RK4 with inputs held constant over the step; renormalizes the quaternion.
inline VehicleState integrate_step(const VehicleState& x, const WrenchInput& u, const DisturbanceInput& d,
                                   const VehicleParams& params, double dt)
{
    if (!(dt > 0.0) || dt > 0.05) {
        throw std::invalid_argument("integrate_step: dt must be in (0, 0.05]");
    }
    using detail::axpy;
    const detail::FlatState s0{x.position, x.attitude.wxyz(), x.velocity, x.rate};
    const auto k1 = detail::flat_derivative(s0, u, d, params);
    const auto k2 = detail::flat_derivative(axpy(s0, 0.5 * dt, k1), u, d, params);
    const auto k3 = detail::flat_derivative(axpy(s0, 0.5 * dt, k2), u, d, params);
    const auto k4 = detail::flat_derivative(axpy(s0, dt, k3), u, d, params);
    const detail::FlatState s1{
        s0.p + dt / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
        s0.q + dt / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q),
        s0.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
        s0.w + dt / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w),
    };
    VehicleState out;
    out.position = s1.p;
    out.attitude = UnitQuaternion(s1.q(0), s1.q(1), s1.q(2), s1.q(3));
    out.velocity = s1.v;
    out.rate = s1.w;
    return out;
}

/// Explicit Euler step used inside the filter's process model. Attitude uses the
/// exponential map for the (constant) rate over the step.
inline VehicleState euler_step(const VehicleState& x, const WrenchInput& u, const DisturbanceInput& d,
                               const VehicleParams& params, double dt)
{
    const StateDerivative dx = continuous_dynamics(x, u, d, params);
    VehicleState out;
    out.position = x.position + dt * dx.velocity;
    out.attitude = quat_integrate(x.attitude, x.rate, dt);
    out.velocity = x.velocity + dt * dx.acceleration;
    out.rate = x.rate + dt * dx.angular_acceleration;
    return out;
}

}  // namespace windest
