#include "windest/vehicle.hpp"

#include <gtest/gtest.h>

#include <random>

namespace windest {
namespace {

VehicleState hover_state()
{
    VehicleState x;
    x.position = Vec3(1.0, -2.0, 1.5);
    return x;
}

TEST(RelativeAirflow, Subtracts)
{
    EXPECT_EQ(relative_airflow_world(Vec3::Zero(), Vec3(2, 0, 0)), Vec3(-2, 0, 0));
    EXPECT_EQ(relative_airflow_world(Vec3(3, 0, 0), Vec3(3, 0, 0)), Vec3::Zero());
    EXPECT_LT((relative_airflow_world(Vec3(1, 2, 3), Vec3(0.5, 0, -1)) - Vec3(0.5, 2, 4)).norm(), 1e-15);
}

TEST(Drag, IdentifiedCoefficients)
{
    const VehicleParams p;
    EXPECT_NEAR(drag_force(Vec3(3, 0, 0), p).norm(), 1.23, 1e-12);
    EXPECT_EQ(drag_force(Vec3::Zero(), p), Vec3::Zero());
    // hand evaluation: 0.20 * 3.6 + 0.07 * 3.6^2
    const double expected = 0.20 * 3.6 + 0.07 * 3.6 * 3.6;
    EXPECT_NEAR(expected, 1.6272, 1e-12);
    EXPECT_NEAR(drag_force(Vec3(0, 3.6, 0), p).norm(), expected, 1e-12);
}

TEST(Drag, ParallelAndMonotone)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    const VehicleParams p;
    for (int i = 0; i < 500; ++i) {
        const Vec3 v(u(rng), u(rng), u(rng));
        const Vec3 f = drag_force(v, p);
        EXPECT_LE(f.cross(v).norm(), 1e-12 * f.norm() * v.norm());
        EXPECT_GT(f.dot(v), 0.0);
        EXPECT_GT(drag_force(1.01 * v, p).norm(), f.norm());
    }
    VehicleParams linear_only = p;
    linear_only.mu2 = 0.0;
    EXPECT_GT(drag_force(Vec3(2, 0, 0), linear_only).norm(), drag_force(Vec3(1, 0, 0), linear_only).norm());
}

TEST(Dynamics, HoverEquilibrium)
{
    const VehicleParams p;
    const StateDerivative dx =
        continuous_dynamics(hover_state(), WrenchInput{p.mass * p.gravity, Vec3::Zero()}, DisturbanceInput{}, p);
    EXPECT_LT(dx.velocity.norm() + dx.rate.norm() + dx.acceleration.norm() + dx.angular_acceleration.norm(), 1e-12);
}

TEST(Dynamics, FreeFall)
{
    VehicleParams p;
    p.mu1 = p.mu2 = 0.0;
    VehicleState x = hover_state();
    x.velocity = Vec3(1.0, 2.0, -3.0);
    const StateDerivative dx = continuous_dynamics(x, WrenchInput{}, DisturbanceInput{}, p);
    EXPECT_LT((dx.acceleration - Vec3(0, 0, -9.81)).norm(), 1e-12);
}

TEST(Dynamics, GyroscopicTerm)
{
    VehicleParams p;
    VehicleState x = hover_state();
    x.rate = Vec3(1, 0, 0);
    EXPECT_LT(continuous_dynamics(x, WrenchInput{}, DisturbanceInput{}, p).angular_acceleration.norm(), 1e-15);

    // J = [[a d e], [d b f], [e f c]], omega = e_x: omega x J omega = (0, -e, d).
    const double a = 0.03, b = 0.04, c = 0.05, d = 0.002, e = -0.003, f = 0.001;
    p.inertia << a, d, e, d, b, f, e, f, c;
    const Vec3 rhs(0.0, e, -d);
    const Vec3 expected = p.inertia.inverse() * rhs;
    EXPECT_LT((continuous_dynamics(x, WrenchInput{}, DisturbanceInput{}, p).angular_acceleration - expected).norm(), 1e-12);
}

TEST(Dynamics, WorldYawConsistency)
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const VehicleParams p;
    for (int i = 0; i < 50; ++i) {
        VehicleState x;
        x.position = Vec3(u(rng), u(rng), u(rng));
        x.velocity = Vec3(u(rng), u(rng), u(rng));
        x.attitude = UnitQuaternion::from_euler(0.2 * u(rng), 0.2 * u(rng), u(rng));
        x.rate = Vec3(u(rng), u(rng), u(rng));
        const WrenchInput w{12.0 + u(rng), Vec3(0.01 * u(rng), 0.01 * u(rng), 0.01 * u(rng))};
        const DisturbanceInput d{Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng))};

        const UnitQuaternion yaw = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), 3.0 * u(rng));
        VehicleState xr = x;
        xr.position = quat_rotate(yaw, x.position);
        xr.velocity = quat_rotate(yaw, x.velocity);
        xr.attitude = yaw * x.attitude;
        const DisturbanceInput dr{quat_rotate(yaw, d.wind), quat_rotate(yaw, d.touch)};

        const StateDerivative a = continuous_dynamics(x, w, d, p);
        const StateDerivative b = continuous_dynamics(xr, w, dr, p);
        EXPECT_LT((quat_rotate(yaw, a.acceleration) - b.acceleration).norm(), 1e-12);
        EXPECT_LT((a.angular_acceleration - b.angular_acceleration).norm(), 1e-12);
        // body-frame specific force identical
        EXPECT_LT((quat_rotate(x.attitude.conjugate(), a.acceleration) -
                   quat_rotate(xr.attitude.conjugate(), b.acceleration)).norm(), 1e-12);
    }
}

TEST(Dynamics, DragDissipatesKineticEnergy)
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const VehicleParams p;
    for (int i = 0; i < 200; ++i) {
        const Vec3 v(u(rng), u(rng), u(rng));
        EXPECT_LT(drag_force(relative_airflow_world(Vec3::Zero(), v), p).dot(v), 0.0);
    }
}

TEST(Integrate, HoverUnchanged)
{
    const VehicleParams p;
    const VehicleState x = hover_state();
    const VehicleState y = integrate_step(x, WrenchInput{p.mass * p.gravity, Vec3::Zero()}, DisturbanceInput{}, p, 0.002);
    EXPECT_LT((y.position - x.position).norm(), 1e-12);
    EXPECT_LT(y.velocity.norm() + y.rate.norm(), 1e-12);
    EXPECT_TRUE(same_rotation(y.attitude, x.attitude, 1e-12));
}

TEST(Integrate, RejectsBadStep)
{
    const VehicleParams p;
    EXPECT_THROW(integrate_step(hover_state(), WrenchInput{}, DisturbanceInput{}, p, 0.0), std::invalid_argument);
    EXPECT_THROW(integrate_step(hover_state(), WrenchInput{}, DisturbanceInput{}, p, 0.06), std::invalid_argument);
}

VehicleState integrate_horizon(VehicleState x, int steps, double horizon)
{
    VehicleParams p;
    p.inertia << 0.03, 0.002, -0.003, 0.002, 0.04, 0.001, -0.003, 0.001, 0.05;
    const WrenchInput w{14.0, Vec3(0.02, -0.01, 0.005)};
    const DisturbanceInput d{Vec3(3.0, -1.0, 0.5), Vec3(0.5, 1.0, 0.0)};
    for (int i = 0; i < steps; ++i) {
        x = integrate_step(x, w, d, p, horizon / steps);
    }
    return x;
}

TEST(Integrate, FourthOrderConvergence)
{
    VehicleState x0;
    x0.velocity = Vec3(2.0, -1.0, 0.3);
    x0.attitude = UnitQuaternion::from_euler(0.3, -0.2, 0.5);
    x0.rate = Vec3(2.0, -3.0, 1.0);
    // Richardson: global error ~ C dt^4, so successive differences shrink by ~16.
    const VehicleState a = integrate_horizon(x0, 5, 0.25);
    const VehicleState b = integrate_horizon(x0, 10, 0.25);
    const VehicleState c = integrate_horizon(x0, 20, 0.25);
    const double d1 = (a.velocity - b.velocity).norm() + (a.rate - b.rate).norm();
    const double d2 = (b.velocity - c.velocity).norm() + (b.rate - c.rate).norm();
    EXPECT_GT(d1 / d2, 12.0);
    EXPECT_LT(d1 / d2, 20.0);
}

TEST(Integrate, ConstantRateMatchesClosedForm)
{
    const VehicleParams p;  // diagonal inertia, spin about a principal axis
    VehicleState x;
    x.rate = Vec3(0.0, 0.0, 1.7);
    const WrenchInput w{p.mass * p.gravity, Vec3::Zero()};
    for (int i = 0; i < 500; ++i) {
        x = integrate_step(x, w, DisturbanceInput{}, p, 0.002);
    }
    EXPECT_TRUE(same_rotation(x.attitude, quat_integrate(UnitQuaternion(), Vec3(0, 0, 1.7), 1.0), 1e-8));
    EXPECT_LT(std::abs(x.attitude.wxyz().norm() - 1.0), 1e-12);
}

}  // namespace
}  // namespace windest
