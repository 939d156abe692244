#pragma once

// Closed-loop hexarotor simulation: wind field, interaction-force profile,
// trajectory state machine, cascaded controller and sensor synthesis.

#include "windest/airflow_sensor.hpp"
#include "windest/flight_log.hpp"
#include "windest/geom.hpp"
#include "windest/vehicle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace windest {

// ---------------------------------------------------------------- wind and touch

struct GustSource {
    Vec3 origin = Vec3::Zero();
    Vec3 direction = Vec3::UnitX();
    double half_angle = 0.3;     // rad
    double speed_ref = 0.0;      // centerline speed at distance_ref, m/s
    double distance_ref = 1.0;   // m
    double decay = 1.0;          // centerline speed ~ (distance_ref / d)^decay
    double on_time = 0.0;        // s
    double off_time = std::numeric_limits<double>::infinity();

    void validate() const
    {
        if (std::abs(direction.norm() - 1.0) > 1e-9) {
            throw std::invalid_argument("GustSource: direction must be a unit vector");
        }
        if (!(half_angle > 0.0 && half_angle < std::numbers::pi / 2) || speed_ref < 0.0 || !(distance_ref > 0.0) ||
            decay < 0.0) {
            throw std::invalid_argument("GustSource: invalid cone or speed profile");
        }
    }
};

struct WindField {
    Vec3 ambient = Vec3::Zero();
    std::vector<GustSource> gusts;
};

/// Ambient wind plus every active gust cone. Inside a cone the speed is the
/// centerline profile times a cosine falloff that reaches zero at the cone edge.
inline Vec3 wind_at(const Vec3& p, double t, const WindField& field)
{
    Vec3 w = field.ambient;
    for (const GustSource& g : field.gusts) {
        if (t < g.on_time || t >= g.off_time) {
            continue;
        }
        const Vec3 d = p - g.origin;
        const double along = d.dot(g.direction);
        if (along <= 0.0) {
            continue;
        }
        const double off_axis = std::atan2((d - along * g.direction).norm(), along);
        if (off_axis >= g.half_angle) {
            continue;
        }
        const double reach = std::max(along, 0.1 * g.distance_ref);
        const double speed = g.speed_ref * std::pow(g.distance_ref / reach, g.decay) *
                             std::cos(0.5 * std::numbers::pi * off_axis / g.half_angle);
        w += speed * g.direction;
    }
    return w;
}

/// Piecewise-linear world-frame force; zero outside all segments.
struct TouchSegment {
    double start = 0.0;
    double end = 0.0;
    Vec3 from = Vec3::Zero();
    Vec3 to = Vec3::Zero();
};

struct TouchProfile {
    std::vector<TouchSegment> segments;

    Vec3 at(double t) const
    {
        for (const TouchSegment& s : segments) {
            if (t >= s.start && t < s.end) {
                const double a = (t - s.start) / (s.end - s.start);
                return s.from + a * (s.to - s.from);
            }
        }
        return Vec3::Zero();
    }
};

// ---------------------------------------------------------------- trajectory

enum class TrajectoryKind { Hover, Circle, Line, Joystick };

struct TrajectorySpec {
    TrajectoryKind kind = TrajectoryKind::Hover;
    Vec3 home = Vec3::Zero();       // takeoff and landing point
    double altitude = 1.5;          // m above home after takeoff
    double preroll = 1.0;           // s on the ground before takeoff
    double takeoff_duration = 3.0;
    double transit_speed = 1.0;     // m/s, average
    double landing_duration = 3.0;

    Vec3 hover_point = Vec3(0.0, 0.0, 1.5);
    double hover_duration = 20.0;
    double hover_segment_duration = 0.0;  // > 0 splits the hover into numbered segments

    Vec3 circle_center = Vec3(0.0, 0.0, 1.5);
    double radius = 4.0;
    std::vector<double> speeds{1.0, 2.0, 3.0, 4.0, 5.0};
    double segment_duration = 15.0;  // constant-speed hold per speed
    double ramp_duration = 3.0;      // speed change between holds
    double settle_time = 5.0;        // hold time before samples count as steady

    Vec3 line_start = Vec3(-4.5, 0.0, 1.5);
    Vec3 line_end = Vec3(4.5, 0.0, 1.5);
    double max_speed = 2.0;
    int passes = 4;
    double dwell = 1.0;  // s at each end

    double joystick_duration = 60.0;
    double joystick_speed = 4.0;     // peak horizontal speed, m/s
    double joystick_yaw = 0.8;       // rad amplitude
    std::uint64_t joystick_seed = 1;
};

struct Setpoint {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Vec3 acceleration = Vec3::Zero();
    double yaw = 0.0;
    FlightPhase phase = FlightPhase::Ground;
    int segment = 0;
    bool steady = false;
    Vec3 rate_ff = Vec3::Zero();       // body rate of the nominal attitude, rad/s
    Vec3 rate_ff_dot = Vec3::Zero();   // rad/s^2
};

namespace detail {

struct Smoothstep {
    double s = 0.0;
    double ds = 0.0;
    double dds = 0.0;
};

/// 35 x^4 - 84 x^5 + 70 x^6 - 20 x^7 (zero velocity, acceleration and jerk at
/// both ends) and its time derivatives for x = t / duration.
inline Smoothstep smootherstep(double t, double duration)
{
    const double x = std::clamp(t / duration, 0.0, 1.0);
    const double y = 1.0 - x;
    const double x2 = x * x;
    return {x2 * x2 * (35.0 - 84.0 * x + 70.0 * x2 - 20.0 * x2 * x), 140.0 * x2 * x * y * y * y / duration,
            420.0 * x2 * y * y * (1.0 - 2.0 * x) / (duration * duration)};
}

/// Integral of smootherstep over [0, x], in units of x.
inline double smootherstep_integral(double x)
{
    const double x5 = x * x * x * x * x;
    return x5 * (7.0 - 14.0 * x + 10.0 * x * x - 2.5 * x * x * x);
}

struct Move {
    double start = 0.0;
    double duration = 0.0;
    Vec3 from = Vec3::Zero();
    Vec3 to = Vec3::Zero();

    void eval(double t, Setpoint& sp) const
    {
        const Smoothstep q = smootherstep(t - start, duration);
        const Vec3 d = to - from;
        sp.position = from + q.s * d;
        sp.velocity = q.ds * d;
        sp.acceleration = q.dds * d;
    }
};

inline double move_duration(const Vec3& a, const Vec3& b, double average_speed)
{
    const double dist = (b - a).norm();
    return dist < 1e-9 ? 0.0 : std::max(2.0, dist / average_speed);
}

/// Speed profile along a path: holds and smootherstep ramps.
struct SpeedPiece {
    double start = 0.0;
    double duration = 0.0;
    double v0 = 0.0;
    double v1 = 0.0;
    double arc0 = 0.0;  // arc length at start
    int segment = 0;
    bool hold = false;
    int pass = 0;       // line pass index

    double arc_end() const { return arc0 + duration * (v0 + 0.5 * (v1 - v0)); }
};

struct PathState {
    double arc = 0.0;
    double speed = 0.0;
    double accel = 0.0;
    const SpeedPiece* piece = nullptr;
};

inline PathState eval_speed(const std::vector<SpeedPiece>& pieces, double t)
{
    const SpeedPiece* p = &pieces.front();
    for (const SpeedPiece& q : pieces) {
        if (t >= q.start) {
            p = &q;
        }
    }
    const double tau = std::clamp(t - p->start, 0.0, p->duration);
    const Smoothstep q = smootherstep(tau, p->duration);
    PathState s;
    s.piece = p;
    s.speed = p->v0 + (p->v1 - p->v0) * q.s;
    s.accel = (p->v1 - p->v0) * q.ds;
    s.arc = p->arc0 + p->v0 * tau + (p->v1 - p->v0) * p->duration * smootherstep_integral(tau / p->duration);
    return s;
}

inline void append_piece(std::vector<SpeedPiece>& pieces, double duration, double v0, double v1, int segment,
                         bool hold, int pass = 0)
{
    SpeedPiece p;
    p.start = pieces.empty() ? 0.0 : pieces.back().start + pieces.back().duration;
    p.arc0 = pieces.empty() ? 0.0 : pieces.back().arc_end();
    p.duration = duration;
    p.v0 = v0;
    p.v1 = v1;
    p.segment = segment;
    p.hold = hold;
    p.pass = pass;
    pieces.push_back(p);
}

struct Sine {
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;
};

}  // namespace detail

/// Flight state machine: ground, takeoff, transit to the start of the
/// trajectory, execution, return and landing at the takeoff point.
class Trajectory {
public:
    explicit Trajectory(const TrajectorySpec& spec) : spec_(spec)
    {
        const Vec3 top = spec.home + Vec3(0.0, 0.0, spec.altitude);
        takeoff_ = {spec.preroll, spec.takeoff_duration, spec.home, top};
        build_execution();
        const Vec3 start = execution_point(0.0);
        transit_ = {takeoff_.start + takeoff_.duration, detail::move_duration(top, start, spec.transit_speed), top,
                    start};
        execute_start_ = transit_.start + transit_.duration;
        const Vec3 end = execution_point(execute_duration_);
        return_ = {execute_start_ + execute_duration_, detail::move_duration(end, top, spec.transit_speed), end, top};
        descend_ = {return_.start + return_.duration, spec.landing_duration, top, spec.home};
        duration_ = descend_.start + descend_.duration + 1.0;
    }

    const TrajectorySpec& spec() const { return spec_; }
    double duration() const { return duration_; }
    double execute_start() const { return execute_start_; }
    double execute_duration() const { return execute_duration_; }

    Setpoint setpoint(double t) const
    {
        Setpoint sp;
        if (t < takeoff_.start) {
            sp.position = spec_.home;
            sp.phase = FlightPhase::Ground;
            return sp;
        }
        if (t < transit_.start) {
            takeoff_.eval(t, sp);
            sp.phase = FlightPhase::Takeoff;
            return sp;
        }
        if (t < execute_start_) {
            transit_.eval(t, sp);
            sp.phase = FlightPhase::Transit;
            return sp;
        }
        if (t < return_.start) {
            execute(t - execute_start_, sp);
            sp.phase = FlightPhase::Execute;
            return sp;
        }
        if (t < descend_.start) {
            return_.eval(t, sp);
        } else {
            descend_.eval(std::min(t, descend_.start + descend_.duration), sp);
        }
        sp.phase = FlightPhase::Landing;
        return sp;
    }

private:
    void build_execution()
    {
        switch (spec_.kind) {
        case TrajectoryKind::Hover:
            if (!(spec_.hover_duration > 0.0)) {
                throw std::invalid_argument("Trajectory: hover duration must be positive");
            }
            execute_duration_ = spec_.hover_duration;
            break;
        case TrajectoryKind::Circle: {
            if (!(spec_.radius > 0.0) || spec_.speeds.empty()) {
                throw std::invalid_argument("Trajectory: circle needs a radius and at least one speed");
            }
            double v = 0.0;
            for (std::size_t i = 0; i < spec_.speeds.size(); ++i) {
                const double target = spec_.speeds[i];
                if (!(target >= 0.0)) {
                    throw std::invalid_argument("Trajectory: speeds must be non-negative");
                }
                detail::append_piece(pieces_, spec_.ramp_duration, v, target, static_cast<int>(i), false);
                detail::append_piece(pieces_, spec_.segment_duration, target, target, static_cast<int>(i), true);
                v = target;
            }
            detail::append_piece(pieces_, spec_.ramp_duration, v, 0.0, static_cast<int>(spec_.speeds.size()) - 1,
                                 false);
            execute_duration_ = pieces_.back().start + pieces_.back().duration;
            break;
        }
        case TrajectoryKind::Line: {
            const double length = (spec_.line_end - spec_.line_start).norm();
            if (!(spec_.max_speed > 0.0) || spec_.passes < 1 || length <= spec_.max_speed * spec_.ramp_duration) {
                throw std::invalid_argument("Trajectory: line too short for the requested speed");
            }
            const double cruise = (length - spec_.max_speed * spec_.ramp_duration) / spec_.max_speed;
            for (int k = 0; k < spec_.passes; ++k) {
                detail::append_piece(pieces_, spec_.ramp_duration, 0.0, spec_.max_speed, k, false, k);
                detail::append_piece(pieces_, cruise, spec_.max_speed, spec_.max_speed, k, true, k);
                detail::append_piece(pieces_, spec_.ramp_duration, spec_.max_speed, 0.0, k, false, k);
                detail::append_piece(pieces_, spec_.dwell, 0.0, 0.0, k, false, k);
            }
            execute_duration_ = pieces_.back().start + pieces_.back().duration;
            break;
        }
        case TrajectoryKind::Joystick:
            build_joystick();
            execute_duration_ = spec_.joystick_duration;
            break;
        }
    }

    void build_joystick()
    {
        if (!(spec_.joystick_duration > 2.0 * spec_.ramp_duration)) {
            throw std::invalid_argument("Trajectory: joystick duration too short");
        }
        std::mt19937_64 rng(spec_.joystick_seed);
        auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
        const std::array<double, 3> amp{1.0, 0.6, 0.4};
        const std::array<std::array<double, 2>, 3> band{{{0.5, 1.0}, {1.2, 2.0}, {2.2, 3.2}}};
        for (int axis = 0; axis < 2; ++axis) {
            for (std::size_t k = 0; k < amp.size(); ++k) {
                sines_[axis].push_back({amp[k], uni(band[k][0], band[k][1]), uni(-std::numbers::pi, std::numbers::pi)});
            }
        }
        sines_[2].push_back({0.3, uni(0.8, 1.5), uni(-std::numbers::pi, std::numbers::pi)});
        yaw_sine_ = {spec_.joystick_yaw, uni(0.2, 0.4), uni(-std::numbers::pi, std::numbers::pi)};

        double peak = 0.0;
        for (double t = 0.0; t <= spec_.joystick_duration; t += 0.01) {
            Setpoint sp;
            joystick(t, sp);
            peak = std::max(peak, sp.velocity.head<2>().norm());
        }
        const double scale = spec_.joystick_speed / peak;
        for (int axis = 0; axis < 2; ++axis) {
            for (detail::Sine& s : sines_[axis]) {
                s.amplitude *= scale;
            }
        }
    }

    void joystick(double t, Setpoint& sp) const
    {
        const double d = spec_.joystick_duration;
        const double r = spec_.ramp_duration;
        detail::Smoothstep env{1.0, 0.0, 0.0};
        if (t < r) {
            env = detail::smootherstep(t, r);
        } else if (t > d - r) {
            const detail::Smoothstep q = detail::smootherstep(d - t, r);
            env = {q.s, -q.ds, q.dds};
        }
        sp.position = spec_.hover_point;
        sp.velocity.setZero();
        sp.acceleration.setZero();
        for (int axis = 0; axis < 3; ++axis) {
            double f = 0.0;
            double df = 0.0;
            double ddf = 0.0;
            for (const detail::Sine& s : sines_[axis]) {
                f += s.amplitude * (std::sin(s.omega * t + s.phase) - std::sin(s.phase));
                df += s.amplitude * s.omega * std::cos(s.omega * t + s.phase);
                ddf -= s.amplitude * s.omega * s.omega * std::sin(s.omega * t + s.phase);
            }
            sp.position(axis) += env.s * f;
            sp.velocity(axis) = env.ds * f + env.s * df;
            sp.acceleration(axis) = env.dds * f + 2.0 * env.ds * df + env.s * ddf;
        }
        sp.yaw = env.s * yaw_sine_.amplitude * std::sin(yaw_sine_.omega * t + yaw_sine_.phase);
        sp.steady = t >= r && t <= d - r;
    }

    Vec3 execution_point(double t) const
    {
        Setpoint sp;
        execute(t, sp);
        return sp.position;
    }

    void execute(double t, Setpoint& sp) const
    {
        switch (spec_.kind) {
        case TrajectoryKind::Hover:
            sp.position = spec_.hover_point;
            sp.steady = true;
            if (spec_.hover_segment_duration > 0.0) {
                sp.segment = static_cast<int>(std::floor(t / spec_.hover_segment_duration));
            }
            return;
        case TrajectoryKind::Circle: {
            const detail::PathState s = detail::eval_speed(pieces_, t);
            const double a = s.arc / spec_.radius;
            const Vec3 radial(std::cos(a), std::sin(a), 0.0);
            const Vec3 tangent(-std::sin(a), std::cos(a), 0.0);
            sp.position = spec_.circle_center + spec_.radius * radial;
            sp.velocity = s.speed * tangent;
            sp.acceleration = s.accel * tangent - (s.speed * s.speed / spec_.radius) * radial;
            sp.segment = s.piece->segment;
            sp.steady = s.piece->hold && t - s.piece->start >= spec_.settle_time;
            return;
        }
        case TrajectoryKind::Line: {
            const detail::PathState s = detail::eval_speed(pieces_, t);
            const double length = (spec_.line_end - spec_.line_start).norm();
            const Vec3 u = (spec_.line_end - spec_.line_start) / length;
            const int pass = s.piece->pass;
            const double along = s.arc - pass * length;
            const bool forward = pass % 2 == 0;
            const Vec3 origin = forward ? spec_.line_start : spec_.line_end;
            const Vec3 dir = forward ? u : Vec3(-u);
            sp.position = origin + along * dir;
            sp.velocity = s.speed * dir;
            sp.acceleration = s.accel * dir;
            sp.segment = pass;
            sp.steady = s.piece->hold && t - s.piece->start >= std::min(1.0, 0.5 * s.piece->duration);
            return;
        }
        case TrajectoryKind::Joystick:
            joystick(t, sp);
            return;
        }
    }

    TrajectorySpec spec_;
    detail::Move takeoff_;
    detail::Move transit_;
    detail::Move return_;
    detail::Move descend_;
    double execute_start_ = 0.0;
    double execute_duration_ = 0.0;
    double duration_ = 0.0;
    std::vector<detail::SpeedPiece> pieces_;
    std::array<std::vector<detail::Sine>, 3> sines_;
    detail::Sine yaw_sine_;
};

// ---------------------------------------------------------------- controller

/// Hexarotor in "+" layout; rotor i at angle 60 i deg. Even rotors spin counterclockwise.
struct RotorLayout {
    double arm = 0.25;          // m
    double yaw_coefficient = 0.016;  // m, reaction torque per newton of thrust
    double max_thrust = 6.0;    // N per rotor at full throttle

    std::array<SpinDirection, kRotorCount> spin() const
    {
        std::array<SpinDirection, kRotorCount> s{};
        for (int i = 0; i < kRotorCount; ++i) {
            s[static_cast<std::size_t>(i)] = i % 2 == 0 ? SpinDirection::CounterClockwise : SpinDirection::Clockwise;
        }
        return s;
    }

    Vec3 rotor_position(int i) const
    {
        const double a = i * std::numbers::pi / 3.0;
        return {arm * std::cos(a), arm * std::sin(a), 0.0};
    }

    /// Rows: total thrust, roll, pitch and yaw torque from the six rotor thrusts.
    Eigen::Matrix<double, 4, kRotorCount> allocation() const
    {
        Eigen::Matrix<double, 4, kRotorCount> a;
        const auto dirs = spin();
        for (int i = 0; i < kRotorCount; ++i) {
            const Vec3 r = rotor_position(i);
            // counterclockwise rotors push back with a clockwise (negative z) reaction
            const double yaw = dirs[static_cast<std::size_t>(i)] == SpinDirection::CounterClockwise ? -1.0 : 1.0;
            a.col(i) << 1.0, r.y(), -r.x(), yaw * yaw_coefficient;
        }
        return a;
    }

    /// Thrust map: T = max_thrust * throttle^2.
    double thrust_of(double throttle) const { return max_thrust * throttle * throttle; }
    double throttle_of(double thrust) const { return std::sqrt(std::clamp(thrust / max_thrust, 0.0, 1.0)); }
};

struct ControllerGains {
    Vec3 position = Vec3::Constant(14.0);   // N/m
    Vec3 velocity = Vec3::Constant(9.0);    // N s/m
    Vec3 integral = Vec3::Constant(8.0);    // N/(m s)
    double integral_limit = 3.0;            // m s
    Vec3 attitude = Vec3(10.0, 10.0, 6.0);  // N m/rad
    Vec3 rate = Vec3(0.8, 0.8, 0.8);        // N m s/rad
};

struct ControllerState {
    Vec3 integral = Vec3::Zero();
};

struct ControlOutput {
    WrenchInput command;                       // what the estimator is told
    std::array<double, kRotorCount> throttle{};    // normalized
    std::array<double, kRotorCount> rotor_thrust{};  // N, after saturation
};

namespace detail {

inline Vec3 vee(const Mat3& m)
{
    return {m(2, 1), m(0, 2), m(1, 0)};
}

/// Desired attitude: body z along `force`, heading from `yaw`.
inline Mat3 attitude_from_force(const Vec3& force, double yaw)
{
    const Vec3 b3 = force.norm() > 1e-9 ? Vec3(force.normalized()) : Vec3(Vec3::UnitZ());
    const Vec3 b1c(std::cos(yaw), std::sin(yaw), 0.0);
    Vec3 b2 = b3.cross(b1c);
    if (b2.norm() < 1e-9) {
        b2 = b3.cross(Vec3::UnitX());
    }
    b2.normalize();
    Mat3 r;
    r.col(0) = b2.cross(b3);
    r.col(1) = b2;
    r.col(2) = b3;
    return r;
}

inline Vec3 nominal_force(const Setpoint& sp, const VehicleParams& vehicle)
{
    return vehicle.mass * (sp.acceleration - gravity_vector(vehicle)) - drag_force(-sp.velocity, vehicle);
}

}  // namespace detail

/// Fills the body-rate feedforward of the nominal attitude by central differences.
inline void attitude_feedforward(const Trajectory& traj, double t, const VehicleParams& vehicle, Setpoint& sp,
                                 double h = 2e-3)
{
    auto attitude = [&](double s) {
        const Setpoint q = traj.setpoint(s);
        return detail::attitude_from_force(detail::nominal_force(q, vehicle), q.yaw);
    };
    auto rate = [&](double s) {
        const Mat3 r = attitude(s);
        return detail::vee(r.transpose() * (attitude(s + h) - attitude(s - h)) / (2.0 * h));
    };
    if (t - 2.0 * h < 0.0) {
        return;
    }
    sp.rate_ff = rate(t);
    sp.rate_ff_dot = (rate(t + h) - rate(t - h)) / (2.0 * h);
}

/// Position PID with drag feedforward, geometric attitude control, pseudo-inverse allocation.
inline ControlOutput controller_step(const VehicleState& x, const Setpoint& sp, const VehicleParams& vehicle,
                                     const ControllerGains& gains, const RotorLayout& rotors, ControllerState& cs,
                                     double dt)
{
    const Vec3 ep = x.position - sp.position;
    const Vec3 ev = x.velocity - sp.velocity;
    cs.integral = (cs.integral + dt * ep).cwiseMax(-gains.integral_limit).cwiseMin(gains.integral_limit);

    const Vec3 force = -gains.position.cwiseProduct(ep) - gains.velocity.cwiseProduct(ev) -
                       gains.integral.cwiseProduct(cs.integral) + detail::nominal_force(sp, vehicle);
    const Mat3 r = x.attitude.matrix();
    const Mat3 rd = detail::attitude_from_force(force, sp.yaw);

    ControlOutput out;
    out.command.thrust = force.dot(r.col(2));
    const Mat3 rel = rd.transpose() * r;
    const Vec3 er = 0.5 * detail::vee(rel - rel.transpose());
    const Vec3 wd = r.transpose() * rd * sp.rate_ff;
    const Vec3 ew = x.rate - wd;
    const Mat3& j = vehicle.inertia;
    out.command.torque = -gains.attitude.cwiseProduct(er) - gains.rate.cwiseProduct(ew) + x.rate.cross(j * x.rate) -
                         j * (skew(x.rate) * wd - r.transpose() * rd * sp.rate_ff_dot);

    const Eigen::Matrix<double, 4, kRotorCount> a = rotors.allocation();
    const Eigen::Matrix<double, kRotorCount, 4> pinv = a.transpose() * (a * a.transpose()).inverse();
    Eigen::Vector4d w;
    w << out.command.thrust, out.command.torque;
    const Eigen::Matrix<double, kRotorCount, 1> t = pinv * w;
    for (int i = 0; i < kRotorCount; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out.throttle[k] = rotors.throttle_of(t(i));
        out.rotor_thrust[k] = rotors.thrust_of(out.throttle[k]);
    }
    return out;
}

/// Wrench produced by the rotor thrusts (after scaling).
inline WrenchInput rotor_wrench(const std::array<double, kRotorCount>& thrust, const RotorLayout& rotors, double scale)
{
    Eigen::Matrix<double, kRotorCount, 1> t;
    for (int i = 0; i < kRotorCount; ++i) {
        t(i) = scale * thrust[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector4d w = rotors.allocation() * t;
    return {w(0), w.tail<3>()};
}

// ---------------------------------------------------------------- sensors

/// Noise and imperfection knobs. Values are fixtures, not measured.
struct NoiseSpec {
    double position = 0.005;       // m
    double velocity = 0.02;        // m/s
    double attitude = 0.2 * std::numbers::pi / 180.0;  // rad
    double rate = 0.01;            // rad/s
    double accel = 0.05;           // m/s^2
    Vec3 accel_bias = Vec3(0.03, -0.02, 0.04);
    double gyro = 0.005;           // rad/s
    double angle = 0.005;          // rad
    double calibration_offset = 0.01;  // rad, per-sensor mounting offset (std)
    double outlier_probability = 0.0;  // per reading
    double outlier_magnitude = 400.0;  // field units
    double interference_throttle = 0.2;   // rad per unit throttle deviation
    double interference_accel = 0.004;    // rad per m/s^2 of specific-force deviation
    double field_magnitude = 500.0;  // field units at rest
    double saturation = 0.5;         // rad

    static NoiseSpec none()
    {
        NoiseSpec n;
        n.position = n.velocity = n.attitude = n.rate = n.accel = n.gyro = n.angle = 0.0;
        n.accel_bias.setZero();
        n.calibration_offset = 0.0;
        n.interference_throttle = n.interference_accel = 0.0;
        return n;
    }
};

/// Deflection disturbance from propeller wash and inertial loading of the rods.
inline DeflectionAngles sensor_interference(const SensorMount& mount, const std::array<double, kRotorCount>& throttle,
                                            double hover_throttle, const Vec3& specific_force_B, double gravity,
                                            const RotorLayout& rotors, const NoiseSpec& noise)
{
    const Mat3 to_sensor = mount.orientation.matrix().transpose();
    Eigen::Vector2d th = Eigen::Vector2d::Zero();
    for (int r = 0; r < kRotorCount; ++r) {
        const Vec3 d = mount.offset - rotors.rotor_position(r);
        const Vec3 ds = to_sensor * d;
        th += (throttle[static_cast<std::size_t>(r)] - hover_throttle) * rotors.arm * ds.head<2>() / d.squaredNorm();
    }
    th *= noise.interference_throttle;
    const Vec3 f = to_sensor * (specific_force_B - Vec3(0.0, 0.0, gravity));
    th += noise.interference_accel * Eigen::Vector2d(-f.y(), f.x());
    return {th.x(), th.y()};
}

// ---------------------------------------------------------------- scenario

struct Scenario {
    std::string name = "hover";
    TrajectorySpec trajectory;
    WindField wind;
    TouchProfile touch;
    NoiseSpec noise;
    VehicleParams vehicle;
    SensorRig rig = default_rig();
    RotorLayout rotors;
    ControllerGains gains;
    double thrust_scale = 1.0;   // applied / commanded rotor thrust
    double duration = 0.0;       // 0: until the trajectory ends
    double divergence_radius = 50.0;  // m from home
    std::uint64_t seed = 1;
};

/// Simulation rates: physics 1 kHz; truth 500 Hz; control, IMU and throttles 200 Hz;
/// odometry 100 Hz; whiskers 50 Hz.
inline constexpr double kPhysicsStep = 1e-3;
inline constexpr int kTruthDivider = 2;
inline constexpr int kControlDivider = 5;
inline constexpr int kOdometryDivider = 10;
inline constexpr int kWhiskerDivider = 20;

class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, FlightLog partial) : std::runtime_error(what), log(std::move(partial)) {}
    FlightLog log;
};

inline double hover_throttle(const VehicleParams& vehicle, const RotorLayout& rotors)
{
    return rotors.throttle_of(vehicle.mass * vehicle.gravity / kRotorCount);
}

inline FlightLog run_scenario(const Scenario& sc)
{
    sc.vehicle.validate();
    for (const SensorMount& m : sc.rig) {
        m.validate();
    }
    for (const GustSource& g : sc.wind.gusts) {
        g.validate();
    }
    if (!(sc.thrust_scale > 0.0)) {
        throw std::invalid_argument("run_scenario: thrust scale must be positive");
    }
    const Trajectory traj(sc.trajectory);
    const double duration = sc.duration > 0.0 ? sc.duration : traj.duration();
    if (!(duration > 0.0)) {
        throw std::invalid_argument("run_scenario: duration must be positive");
    }

    std::mt19937_64 rng(sc.seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto gauss3 = [&](double s) { return Vec3(s * n01(rng), s * n01(rng), s * n01(rng)); };

    std::vector<DeflectionAngles> offsets;
    for (std::size_t i = 0; i < sc.rig.size(); ++i) {
        offsets.push_back({sc.noise.calibration_offset * n01(rng), sc.noise.calibration_offset * n01(rng)});
    }

    FlightLog log;
    log.name = sc.name;
    log.seed = sc.seed;

    VehicleState x;
    x.position = sc.trajectory.home;
    ControllerState cs;
    ControlOutput ctrl;
    WrenchInput applied;
    const double u_hover = hover_throttle(sc.vehicle, sc.rotors);
    const auto steps = static_cast<long>(std::floor(duration / kPhysicsStep + 1e-9));

    for (long k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * kPhysicsStep;
        if (k % kControlDivider == 0) {
            Setpoint sp = traj.setpoint(t);
            attitude_feedforward(traj, t, sc.vehicle, sp);
            ctrl = controller_step(x, sp, sc.vehicle, sc.gains, sc.rotors, cs, kControlDivider * kPhysicsStep);
            applied = rotor_wrench(ctrl.rotor_thrust, sc.rotors, sc.thrust_scale);
            log.throttle.push_back({t, ctrl.throttle});
            log.commands.push_back({t, ctrl.command});
        }
        const DisturbanceInput dist{wind_at(x.position, t, sc.wind), sc.touch.at(t)};
        const Vec3 accel = translational_acceleration(x.attitude, x.velocity, applied.thrust, dist, sc.vehicle);
        const Vec3 specific_B = quat_rotate(x.attitude.conjugate(), accel - gravity_vector(sc.vehicle));

        if (k % kTruthDivider == 0) {
            const Setpoint sp = traj.setpoint(t);
            TruthSample s;
            s.t = t;
            s.state = x;
            s.acceleration = accel;
            s.wind = dist.wind;
            s.touch = dist.touch;
            s.drag = drag_force(relative_airflow_world(dist.wind, x.velocity), sc.vehicle);
            s.thrust = applied.thrust;
            s.phase = sp.phase;
            s.segment = sp.segment;
            s.steady = sp.steady;
            log.truth.push_back(s);
        }
        if (k % kControlDivider == 0) {
            log.imu.push_back({t, specific_B + sc.noise.accel_bias + gauss3(sc.noise.accel), x.rate + gauss3(sc.noise.gyro)});
        }
        if (k % kOdometryDivider == 0) {
            OdometrySample o;
            o.t = t;
            o.position = x.position + gauss3(sc.noise.position);
            o.attitude = UnitQuaternion::exp(gauss3(sc.noise.attitude)) * x.attitude;
            o.velocity = x.velocity + gauss3(sc.noise.velocity);
            o.rate = x.rate + gauss3(sc.noise.rate);
            log.odometry.push_back(o);
        }
        if (k % kWhiskerDivider == 0) {
            WhiskerSample w;
            w.t = t;
            const Vec3 airflow = body_airflow(x.attitude, dist.wind, x.velocity);
            for (std::size_t i = 0; i < sc.rig.size(); ++i) {
                const SensorMount& m = sc.rig[i];
                const DeflectionAngles ideal = predict_deflection(sensor_airflow(airflow, x.rate, m), m.coefficient);
                const DeflectionAngles extra = sensor_interference(m, ctrl.throttle, u_hover, specific_B,
                                                                   sc.vehicle.gravity, sc.rotors, sc.noise);
                const double lim = sc.noise.saturation;
                const DeflectionAngles th{
                    std::clamp(ideal.theta_x + extra.theta_x + offsets[i].theta_x + sc.noise.angle * n01(rng), -lim, lim),
                    std::clamp(ideal.theta_y + extra.theta_y + offsets[i].theta_y + sc.noise.angle * n01(rng), -lim, lim)};
                MagneticField b = field_from_deflection(th, sc.noise.field_magnitude, m.polarity);
                if (sc.noise.outlier_probability > 0.0 && u01(rng) < sc.noise.outlier_probability) {
                    const double spike = sc.noise.outlier_magnitude * (u01(rng) < 0.5 ? -1.0 : 1.0);
                    const double which = u01(rng);
                    (which < 1.0 / 3.0 ? b.bx : which < 2.0 / 3.0 ? b.by : b.bz) += spike;
                }
                w.field.push_back(b);
            }
            log.whiskers.push_back(std::move(w));
        }

        if (k == steps) {
            break;
        }
        x = integrate_step(x, applied, dist, sc.vehicle, kPhysicsStep);
        if (!x.position.allFinite() || !x.velocity.allFinite() ||
            (x.position - sc.trajectory.home).norm() > sc.divergence_radius) {
            throw SimulationError("run_scenario: vehicle diverged at t = " + std::to_string(t), std::move(log));
        }
    }
    return log;
}

// ---------------------------------------------------------------- presets

inline constexpr std::array<const char*, 6> kScenarioPresets{"hover",    "circle",   "line_gust",
                                                             "joystick", "four_phase", "constant_velocity"};

/// Four-phase experiment timing: hover, wind, wind + pull ramp, pull only.
inline constexpr double kFourPhaseDuration = 20.0;
inline constexpr double kFourPhaseWind = 3.6;   // m/s along +x
inline constexpr double kFourPhasePull = 4.0;   // N along -y

inline Scenario scenario_preset(const std::string& name, std::uint64_t seed = 1)
{
    Scenario sc;
    sc.name = name;
    sc.seed = seed;
    TrajectorySpec& tr = sc.trajectory;
    tr.joystick_seed = seed;
    if (name == "hover") {
        tr.kind = TrajectoryKind::Hover;
    } else if (name == "circle") {
        tr.kind = TrajectoryKind::Circle;
    } else if (name == "line_gust" || name == "constant_velocity") {
        tr.kind = TrajectoryKind::Line;
        tr.max_speed = name == "line_gust" ? 1.5 : 2.0;
        tr.passes = 6;
        if (name == "line_gust") {
            GustSource g;
            g.origin = Vec3(0.0, -4.0, 1.5);
            g.direction = Vec3::UnitY();
            g.half_angle = 0.3;
            g.speed_ref = 3.6;
            g.distance_ref = 4.0;
            g.decay = 1.0;
            sc.wind.gusts.push_back(g);
        }
    } else if (name == "joystick") {
        tr.kind = TrajectoryKind::Joystick;
        tr.hover_point = Vec3(0.0, 0.0, 2.0);
    } else if (name == "four_phase") {
        tr.kind = TrajectoryKind::Hover;
        tr.hover_duration = 4.0 * kFourPhaseDuration;
        tr.hover_segment_duration = kFourPhaseDuration;
        const double t0 = Trajectory(tr).execute_start();
        GustSource g;
        g.origin = tr.hover_point - Vec3(6.0, 0.0, 0.0);
        g.direction = Vec3::UnitX();
        g.half_angle = 0.6;
        g.speed_ref = kFourPhaseWind;
        g.distance_ref = 6.0;
        g.decay = 0.0;
        g.on_time = t0 + kFourPhaseDuration;
        g.off_time = t0 + 3.0 * kFourPhaseDuration;
        sc.wind.gusts.push_back(g);
        const Vec3 pull(0.0, -kFourPhasePull, 0.0);
        sc.touch.segments.push_back({t0 + 2.0 * kFourPhaseDuration, t0 + 3.0 * kFourPhaseDuration, Vec3::Zero(), pull});
        sc.touch.segments.push_back({t0 + 3.0 * kFourPhaseDuration, t0 + 4.0 * kFourPhaseDuration, pull, pull});
    } else {
        throw std::invalid_argument("unknown scenario preset: " + name);
    }
    return sc;
}

}  // namespace windest
