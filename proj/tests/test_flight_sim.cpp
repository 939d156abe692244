#include "windest/flight_sim.hpp"
#include "windest/sysid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace windest {
namespace {

TEST(WindAt, NoSources)
{
    const WindField f;
    EXPECT_EQ(wind_at(Vec3(1, 2, 3), 5.0, f), Vec3::Zero());
}

GustSource blower()
{
    GustSource g;
    g.origin = Vec3(0, -4, 1.5);
    g.direction = Vec3::UnitY();
    g.half_angle = 0.3;
    g.speed_ref = 3.6;
    g.distance_ref = 4.0;
    g.decay = 1.0;
    return g;
}

TEST(WindAt, CenterlineAtReferenceDistance)
{
    WindField f;
    f.gusts.push_back(blower());
    const Vec3 w = wind_at(Vec3(0, 0, 1.5), 1.0, f);
    EXPECT_NEAR((w - Vec3(0, 3.6, 0)).norm(), 0.0, 1e-12);
    // farther along the axis the speed decays as d_ref / d
    EXPECT_NEAR(wind_at(Vec3(0, 4, 1.5), 1.0, f).y(), 1.8, 1e-12);
}

TEST(WindAt, OutsideConeIsAmbient)
{
    WindField f;
    f.ambient = Vec3(0.5, 0, 0);
    f.gusts.push_back(blower());
    const double edge = 4.0 * std::tan(0.3);
    EXPECT_EQ(wind_at(Vec3(edge + 0.01, 0, 1.5), 1.0, f), f.ambient);
    EXPECT_EQ(wind_at(Vec3(0, -5, 1.5), 1.0, f), f.ambient);  // behind the source
    const Vec3 inside = wind_at(Vec3(edge - 0.2, 0, 1.5), 1.0, f);
    EXPECT_GT(inside.y(), 0.0);
    EXPECT_LT(inside.y(), 3.6);
}

TEST(WindAt, Schedule)
{
    WindField f;
    GustSource g = blower();
    g.on_time = 2.0;
    g.off_time = 4.0;
    f.gusts.push_back(g);
    EXPECT_EQ(wind_at(Vec3(0, 0, 1.5), 1.99, f), Vec3::Zero());
    EXPECT_GT(wind_at(Vec3(0, 0, 1.5), 2.0, f).norm(), 3.0);
    EXPECT_EQ(wind_at(Vec3(0, 0, 1.5), 4.0, f), Vec3::Zero());
    g.direction = Vec3(1, 1, 0);
    EXPECT_THROW(g.validate(), std::invalid_argument);
}

TEST(TouchProfile, Ramp)
{
    TouchProfile p;
    p.segments.push_back({10.0, 20.0, Vec3::Zero(), Vec3(0, -4, 0)});
    EXPECT_EQ(p.at(5.0), Vec3::Zero());
    EXPECT_NEAR((p.at(15.0) - Vec3(0, -2, 0)).norm(), 0.0, 1e-12);
    EXPECT_EQ(p.at(20.0), Vec3::Zero());
}

TEST(Trajectory, StartsOnTheGround)
{
    for (const char* name : kScenarioPresets) {
        const Trajectory tr(scenario_preset(name).trajectory);
        const Setpoint sp = tr.setpoint(0.0);
        EXPECT_EQ(sp.position, tr.spec().home) << name;
        EXPECT_EQ(sp.velocity, Vec3::Zero()) << name;
        EXPECT_EQ(sp.phase, FlightPhase::Ground) << name;
        const Setpoint end = tr.setpoint(tr.duration());
        EXPECT_LT((end.position - tr.spec().home).norm(), 1e-9) << name;
        EXPECT_LT(end.velocity.norm(), 1e-9) << name;
    }
}

TEST(Trajectory, ContinuousThroughAllPhases)
{
    for (const char* name : kScenarioPresets) {
        const Trajectory tr(scenario_preset(name, 5).trajectory);
        const double h = 1e-4;
        std::vector<FlightPhase> order;
        for (double t = h; t < tr.duration() - h; t += 0.01) {
            const Setpoint a = tr.setpoint(t - h);
            const Setpoint b = tr.setpoint(t + h);
            const Setpoint c = tr.setpoint(t);
            // velocity is the derivative of position and itself continuous
            EXPECT_LT((b.position - a.position - 2.0 * h * c.velocity).norm(), 1e-5) << name << " t=" << t;
            EXPECT_LT((b.velocity - a.velocity).norm(), 1e-2) << name << " t=" << t;
            if (order.empty() || order.back() != c.phase) {
                order.push_back(c.phase);
            }
        }
        std::vector<FlightPhase> expected{FlightPhase::Ground, FlightPhase::Takeoff};
        if (std::string(name) != "hover" && std::string(name) != "four_phase" && std::string(name) != "joystick") {
            expected.push_back(FlightPhase::Transit);
        } else if (std::string(name) == "joystick") {
            expected.push_back(FlightPhase::Transit);
        }
        expected.push_back(FlightPhase::Execute);
        expected.push_back(FlightPhase::Landing);
        EXPECT_EQ(order, expected) << name;
    }
}

TEST(Trajectory, CircleHoldsCommandedSpeed)
{
    const TrajectorySpec spec = scenario_preset("circle").trajectory;
    const Trajectory tr(spec);
    int checked = 0;
    for (double t = tr.execute_start(); t < tr.execute_start() + tr.execute_duration(); t += 0.05) {
        const Setpoint sp = tr.setpoint(t);
        if (sp.steady) {
            EXPECT_NEAR(sp.velocity.norm(), spec.speeds[static_cast<std::size_t>(sp.segment)], 1e-9);
            EXPECT_NEAR((sp.position - spec.circle_center).norm(), spec.radius, 1e-9);
            ++checked;
        }
    }
    EXPECT_GT(checked, 500);
}

TEST(Trajectory, LineVisitsEndpointsInOrder)
{
    TrajectorySpec spec = scenario_preset("constant_velocity").trajectory;
    const Trajectory tr(spec);
    int next = 0;
    for (double t = tr.execute_start(); t <= tr.execute_start() + tr.execute_duration(); t += 0.01) {
        const Setpoint sp = tr.setpoint(t);
        EXPECT_LE(sp.velocity.norm(), spec.max_speed + 1e-9);
        const Vec3 target = next % 2 == 0 ? spec.line_end : spec.line_start;
        if ((sp.position - target).norm() < 1e-6) {
            ++next;
        }
    }
    EXPECT_EQ(next, spec.passes);
    spec.max_speed = 10.0;
    EXPECT_THROW(Trajectory{spec}, std::invalid_argument);
}

TEST(Trajectory, JoystickPeakSpeed)
{
    const TrajectorySpec spec = scenario_preset("joystick", 3).trajectory;
    const Trajectory tr(spec);
    double peak = 0.0;
    for (double t = tr.execute_start(); t <= tr.execute_start() + tr.execute_duration(); t += 0.01) {
        const Setpoint sp = tr.setpoint(t);
        peak = std::max(peak, sp.velocity.head<2>().norm());
        EXPECT_LT((sp.position - spec.hover_point).head<2>().norm(), 5.0);
    }
    EXPECT_NEAR(peak, spec.joystick_speed, 0.05);
    const Trajectory other(scenario_preset("joystick", 4).trajectory);
    EXPECT_NE(other.setpoint(tr.execute_start() + 10.0).position, tr.setpoint(tr.execute_start() + 10.0).position);
}

TEST(Controller, HoverEquilibrium)
{
    const VehicleParams v;
    const RotorLayout rotors;
    ControllerState cs;
    VehicleState x;
    x.position = Vec3(0, 0, 1.5);
    Setpoint sp;
    sp.position = x.position;
    const ControlOutput out = controller_step(x, sp, v, ControllerGains{}, rotors, cs, 0.005);
    EXPECT_NEAR(out.command.thrust, v.mass * v.gravity, 1e-12);
    EXPECT_LT(out.command.torque.norm(), 1e-12);
    // throttles through the thrust map reproduce the commanded wrench
    const WrenchInput w = rotor_wrench(out.rotor_thrust, rotors, 1.0);
    EXPECT_NEAR(w.thrust, out.command.thrust, 1e-9);
    EXPECT_LT(w.torque.norm(), 1e-9);
    double sum = 0.0;
    for (double u : out.throttle) {
        sum += rotors.max_thrust * u * u;
        EXPECT_NEAR(u, hover_throttle(v, rotors), 1e-12);
    }
    EXPECT_NEAR(sum, v.mass * v.gravity, 1e-9);
}

TEST(Controller, TiltedSteadyFlightThrust)
{
    const VehicleParams v;
    // steady level flight at 3 m/s along x: drag feedforward tilts the thrust
    Setpoint sp;
    sp.position = Vec3(0, 0, 1.5);
    sp.velocity = Vec3(3, 0, 0);
    VehicleState x;
    x.position = sp.position;
    x.velocity = sp.velocity;
    const Vec3 force = detail::nominal_force(sp, v);
    x.attitude = UnitQuaternion(RotationMatrix(detail::attitude_from_force(force, 0.0)));
    ControllerState cs;
    const ControlOutput out = controller_step(x, sp, v, ControllerGains{}, RotorLayout{}, cs, 0.005);
    const Vec3 rpy = x.attitude.euler();
    EXPECT_NEAR(out.command.thrust, v.mass * v.gravity / (std::cos(rpy.x()) * std::cos(rpy.y())), 1e-9);
    EXPECT_LT(out.command.torque.norm(), 1e-9);
}

TEST(Controller, PureAltitudeError)
{
    const VehicleParams v;
    VehicleState x;
    x.position = Vec3(0, 0, 1.0);
    Setpoint sp;
    sp.position = Vec3(0, 0, 1.5);
    ControllerState cs;
    const ControlOutput out = controller_step(x, sp, v, ControllerGains{}, RotorLayout{}, cs, 0.005);
    EXPECT_GT(out.command.thrust, v.mass * v.gravity);
    EXPECT_LT(out.command.torque.norm(), 1e-12);
}

TEST(RunScenario, NoiselessHoverHasZeroDeflection)
{
    Scenario sc = scenario_preset("hover");
    sc.noise = NoiseSpec::none();
    const FlightLog log = run_scenario(sc);
    ASSERT_FALSE(log.whiskers.empty());
    for (const WhiskerSample& w : log.whiskers) {
        if (w.t > 1.0) {
            break;
        }
        for (std::size_t i = 0; i < w.field.size(); ++i) {
            const auto th = deflection_from_field(w.field[i], sc.rig[i].polarity);
            ASSERT_TRUE(th.has_value());
            EXPECT_LT(th->vec().norm(), 1e-12);
        }
    }
}

TEST(RunScenario, ChannelRates)
{
    Scenario sc = scenario_preset("hover");
    sc.duration = 2.0;
    const FlightLog log = run_scenario(sc);
    EXPECT_EQ(log.truth.size(), 1001u);
    EXPECT_EQ(log.imu.size(), 401u);
    EXPECT_EQ(log.throttle.size(), 401u);
    EXPECT_EQ(log.commands.size(), 401u);
    EXPECT_EQ(log.odometry.size(), 201u);
    EXPECT_EQ(log.whiskers.size(), 101u);
    for (std::size_t i = 1; i < log.truth.size(); ++i) {
        EXPECT_GT(log.truth[i].t, log.truth[i - 1].t);
    }
}

TEST(RunScenario, Deterministic)
{
    Scenario sc = scenario_preset("line_gust", 9);
    sc.duration = 20.0;
    const FlightLog a = run_scenario(sc);
    const FlightLog b = run_scenario(sc);
    ASSERT_EQ(a.truth.size(), b.truth.size());
    for (std::size_t i = 0; i < a.truth.size(); ++i) {
        ASSERT_EQ(a.truth[i].state.position, b.truth[i].state.position);
    }
    for (std::size_t i = 0; i < a.whiskers.size(); ++i) {
        ASSERT_EQ(a.whiskers[i].field[2].bx, b.whiskers[i].field[2].bx);
    }
    for (std::size_t i = 0; i < a.odometry.size(); ++i) {
        ASSERT_EQ(a.odometry[i].velocity, b.odometry[i].velocity);
    }
}

TEST(RunScenario, TranslationalDynamicsClosure)
{
    Scenario sc = scenario_preset("four_phase", 2);
    const FlightLog log = run_scenario(sc);
    const VehicleParams& p = sc.vehicle;
    for (const TruthSample& s : log.truth) {
        const Vec3 thrust = quat_rotate(s.state.attitude, Vec3(0, 0, s.thrust));
        const Vec3 rhs = thrust + s.drag + p.mass * gravity_vector(p) + s.touch;
        ASSERT_LT((p.mass * s.acceleration - rhs).norm(), 1e-6) << "t=" << s.t;
    }
    // and the logged acceleration integrates to the logged velocity wherever the
    // disturbances do not switch
    for (std::size_t i = 1; i < log.truth.size(); ++i) {
        const TruthSample& a = log.truth[i - 1];
        const TruthSample& b = log.truth[i];
        if ((b.touch - a.touch).norm() > 0.01 || (b.wind - a.wind).norm() > 0.01) {
            continue;
        }
        const Vec3 dv = b.state.velocity - a.state.velocity;
        ASSERT_LT((dv - 0.5 * (b.t - a.t) * (a.acceleration + b.acceleration)).norm(), 2e-3) << "t=" << a.t;
    }
}

TEST(RunScenario, NoiselessSynthesisMatchesSensorModel)
{
    Scenario sc = scenario_preset("joystick", 4);
    sc.noise = NoiseSpec::none();
    sc.duration = 30.0;
    const FlightLog log = run_scenario(sc);
    std::size_t ti = 0;
    for (const WhiskerSample& w : log.whiskers) {
        while (log.truth[ti].t < w.t - 1e-9) {
            ++ti;
        }
        const TruthSample& s = log.truth[ti];
        const Vec3 airflow = body_airflow(s.state.attitude, s.wind, s.state.velocity);
        for (std::size_t i = 0; i < sc.rig.size(); ++i) {
            const DeflectionAngles expected =
                predict_deflection(sensor_airflow(airflow, s.state.rate, sc.rig[i]), sc.rig[i].coefficient);
            const auto th = deflection_from_field(w.field[i], sc.rig[i].polarity);
            ASSERT_TRUE(th.has_value());
            ASSERT_LT((th->vec() - expected.vec()).norm(), 1e-12) << "t=" << w.t << " sensor " << i;
        }
    }
}

TEST(RunScenario, CircleDragAtThreeMetersPerSecond)
{
    Scenario sc = scenario_preset("circle");
    sc.noise = NoiseSpec::none();
    const FlightLog log = run_scenario(sc);
    int n = 0;
    for (const TruthSample& s : log.truth) {
        if (s.steady && s.segment == 2) {
            EXPECT_NEAR(s.drag.norm(), 1.23, 1e-3);
            if (n++ % 500 == 0) {
                // one snapshot through the identification formula
                const Vec3 rpy = s.state.attitude.euler();
                const double f = thrust_from_attitude(sc.vehicle.mass, rpy.x(), rpy.y(), sc.vehicle.gravity);
                const Vec3 a_B = quat_rotate(s.state.attitude.conjugate(), s.acceleration);
                const Vec3 v_B = quat_rotate(s.state.attitude.conjugate(), s.state.velocity);
                const DragSample d = drag_sample(f, sc.vehicle.mass, a_B, v_B.normalized(), v_B.norm());
                EXPECT_NEAR(d.force, 1.23, 0.05 * 1.23);
            }
        }
    }
    EXPECT_GT(n, 1000);
}

TEST(RunScenario, FourPhaseSchedule)
{
    const Scenario sc = scenario_preset("four_phase");
    const FlightLog log = run_scenario(sc);
    std::array<Vec3, 4> wind_sum;
    std::array<Vec3, 4> touch_sum;
    wind_sum.fill(Vec3::Zero());
    touch_sum.fill(Vec3::Zero());
    std::array<int, 4> count{};
    for (const TruthSample& s : log.truth) {
        if (s.phase != FlightPhase::Execute) {
            continue;
        }
        // settled part of each phase
        const double into = s.t - Trajectory(sc.trajectory).execute_start() - s.segment * kFourPhaseDuration;
        if (into < 0.5 * kFourPhaseDuration) {
            continue;
        }
        const auto k = static_cast<std::size_t>(s.segment);
        wind_sum[k] += s.wind;
        touch_sum[k] += s.touch;
        ++count[k];
    }
    for (std::size_t k = 0; k < 4; ++k) {
        ASSERT_GT(count[k], 0);
        wind_sum[k] /= count[k];
        touch_sum[k] /= count[k];
    }
    EXPECT_LT(wind_sum[0].norm(), 1e-12);
    EXPECT_NEAR(wind_sum[1].x(), kFourPhaseWind, 0.05);
    EXPECT_NEAR(wind_sum[2].x(), kFourPhaseWind, 0.05);
    EXPECT_LT(wind_sum[3].norm(), 1e-12);
    EXPECT_LT(touch_sum[0].norm() + touch_sum[1].norm(), 1e-12);
    EXPECT_NEAR(touch_sum[2].y(), -0.75 * kFourPhasePull, 0.05);
    EXPECT_NEAR(touch_sum[3].y(), -kFourPhasePull, 1e-12);
}

TEST(RunScenario, DivergenceKeepsPartialLog)
{
    Scenario sc = scenario_preset("hover");
    sc.thrust_scale = 0.3;
    sc.divergence_radius = 3.0;
    try {
        run_scenario(sc);
        FAIL() << "expected divergence";
    } catch (const SimulationError& e) {
        EXPECT_FALSE(e.log.truth.empty());
        EXPECT_LT(e.log.truth.back().t, 5.0);
    }
}

TEST(RunScenario, ImuAtRestReadsGravityPlusBias)
{
    Scenario sc = scenario_preset("hover");
    sc.duration = 0.9;
    const FlightLog log = run_scenario(sc);
    Vec3 mean = Vec3::Zero();
    for (const ImuSample& s : log.imu) {
        mean += s.accel;
    }
    mean /= static_cast<double>(log.imu.size());
    EXPECT_LT((mean - Vec3(0, 0, sc.vehicle.gravity) - sc.noise.accel_bias).norm(), 0.02);
}

TEST(RunScenario, RejectsInvalidScenario)
{
    Scenario sc = scenario_preset("hover");
    sc.thrust_scale = 0.0;
    EXPECT_THROW(run_scenario(sc), std::invalid_argument);
    EXPECT_THROW(scenario_preset("spiral"), std::invalid_argument);
}

}  // namespace
}  // namespace windest
