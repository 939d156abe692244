#pragma once

// Whisker airflow sensor: magnetic field to deflection angles, the lumped
// drag/spring deflection model, and per-sensor relative airflow.

#include "windest/geom.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace windest {

enum class MagnetPolarity { NorthUp, SouthUp };

struct MagneticField {
    double bx = 0.0;
    double by = 0.0;
    double bz = 0.0;
};

struct DeflectionAngles {
    double theta_x = 0.0;  // rad, rotation of the rod about sensor x
    double theta_y = 0.0;  // rad, rotation of the rod about sensor y

    Eigen::Vector2d vec() const { return {theta_x, theta_y}; }
};

struct SensorMount {
    Vec3 offset = Vec3::Zero();   // r_Si expressed in B, m
    RotationMatrix orientation;   // maps sensor-frame vectors into B
    double coefficient = 0.01;    // c_i, rad s^2 / m^2
    MagnetPolarity polarity = MagnetPolarity::NorthUp;

    void validate() const
    {
        if (!(coefficient > 0.0)) {
            throw std::invalid_argument("SensorMount: coefficient must be positive");
        }
    }
};

using SensorRig = std::vector<SensorMount>;

/// Four-sensor fixture: two rods pointing up on top of the hull, two pointing
/// outward from the propeller guards. Poses and coefficients are not measured values.
inline SensorRig default_rig()
{
    SensorRig rig(4);
    rig[0].offset = Vec3(0.04, 0.0, 0.11);
    rig[0].coefficient = 0.012;
    rig[1].offset = Vec3(-0.04, 0.0, 0.11);
    rig[1].orientation = RotationMatrix::about_z(std::numbers::pi / 4.0);
    rig[1].coefficient = 0.011;
    rig[2].offset = Vec3(0.32, 0.0, 0.03);
    rig[2].orientation = RotationMatrix::about_y(std::numbers::pi / 2.0);  // rod along +x_B
    rig[2].coefficient = 0.013;
    rig[2].polarity = MagnetPolarity::SouthUp;
    rig[3].offset = Vec3(0.0, -0.32, 0.03);
    rig[3].orientation = RotationMatrix::about_x(std::numbers::pi / 2.0);  // rod along -y_B
    rig[3].coefficient = 0.010;
    return rig;
}

/// Deflection from a raw field reading. Returns nullopt when the
/// polarity-corrected b_z is not positive.
inline std::optional<DeflectionAngles> deflection_from_field(const MagneticField& b, MagnetPolarity polarity)
{
    const double s = polarity == MagnetPolarity::SouthUp ? -1.0 : 1.0;
    const double bx = s * b.bx;
    const double by = s * b.by;
    const double bz = s * b.bz;
    if (!(bz > 0.0)) {
        return std::nullopt;
    }
    return DeflectionAngles{-std::atan(by / bz), std::atan(bx / bz)};
}

/// Field that produces the given deflection for a fixed equilibrium magnitude bz > 0.
inline MagneticField field_from_deflection(const DeflectionAngles& theta, double bz, MagnetPolarity polarity)
{
    const double s = polarity == MagnetPolarity::SouthUp ? -1.0 : 1.0;
    return {s * bz * std::tan(theta.theta_y), -s * bz * std::tan(theta.theta_x), s * bz};
}

/// Relative airflow at the CoM in the body frame: R_WB^T (v_wind - v).
inline Vec3 body_airflow(const UnitQuaternion& q_WB, const Vec3& wind_W, const Vec3& velocity_W)
{
    return quat_rotate(q_WB.conjugate(), wind_W - velocity_W);
}

/// Relative airflow seen by one whisker, in its own frame.
inline Vec3 sensor_airflow(const Vec3& airflow_B, const Vec3& rate_B, const SensorMount& mount)
{
    return mount.orientation.matrix().transpose() * (airflow_B - rate_B.cross(mount.offset));
}

/// Aerodynamic force on the fins, (rho/2) c_D A |v| v with A = diag(a_xy, a_xy, 0).
inline Vec3 whisker_drag(const Vec3& airflow_S, double air_density, double drag_coefficient, double area_xy)
{
    const Vec3 a(area_xy, area_xy, 0.0);
    return 0.5 * air_density * drag_coefficient * airflow_S.norm() * a.cwiseProduct(airflow_S);
}

/// Deflection predicted by the lumped model: theta = c |v| (-v_y, v_x).
inline DeflectionAngles predict_deflection(const Vec3& airflow_S, double coefficient)
{
    const double k = coefficient * airflow_S.norm();
    return {-k * airflow_S.y(), k * airflow_S.x()};
}

}  // namespace windest
