#pragma once

// Frames, rotations and attitude-error parameterization.
//
// Conventions (fixed for the whole library):
//  * Quaternions are Hamilton, scalar-first (w, x, y, z).
//  * q_WB rotates body-frame vectors into the world frame: v_W = R(q_WB) v_B.
//  * Attitude errors are world-side: q = dq(e) * q_ref.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace windest {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline Mat3 skew(const Vec3& v)
{
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return m;
}

/// Orthonormal rotation matrix with det = +1.
class RotationMatrix {
public:
    RotationMatrix() : m_(Mat3::Identity()) {}

    /// Re-orthonormalizes the input (polar projection); throws if it is far from a rotation.
    explicit RotationMatrix(const Mat3& m)
    {
        if ((m * m.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 || m.determinant() < 0.0) {
            throw std::invalid_argument("RotationMatrix: input is not a proper rotation");
        }
        Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
        m_ = svd.matrixU() * svd.matrixV().transpose();
    }

    static RotationMatrix about_x(double a) { return RotationMatrix(Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix()); }
    static RotationMatrix about_y(double a) { return RotationMatrix(Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix()); }
    static RotationMatrix about_z(double a) { return RotationMatrix(Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix()); }

    const Mat3& matrix() const { return m_; }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }
    RotationMatrix operator*(const RotationMatrix& o) const { return from_trusted(m_ * o.m_); }
    RotationMatrix transpose() const { return from_trusted(m_.transpose()); }

private:
    static RotationMatrix from_trusted(const Mat3& m)
    {
        RotationMatrix r;
        r.m_ = m;
        return r;
    }

    Mat3 m_;
};

/// Unit quaternion, Hamilton convention, scalar first. Every constructor normalizes.
class UnitQuaternion {
public:
    UnitQuaternion() : q_(1.0, 0.0, 0.0, 0.0) {}

    UnitQuaternion(double w, double x, double y, double z) : q_(w, x, y, z)
    {
        const double n = q_.norm();
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw std::invalid_argument("UnitQuaternion: zero or non-finite norm");
        }
        q_.coeffs() /= n;
    }

    explicit UnitQuaternion(const Eigen::Quaterniond& q) : UnitQuaternion(q.w(), q.x(), q.y(), q.z()) {}

    explicit UnitQuaternion(const RotationMatrix& r) : UnitQuaternion(Eigen::Quaterniond(r.matrix())) {}

    static UnitQuaternion from_axis_angle(const Vec3& axis, double angle)
    {
        return UnitQuaternion(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())));
    }

    /// Exponential map of a rotation vector (axis * angle).
    static UnitQuaternion exp(const Vec3& rotvec)
    {
        const double angle = rotvec.norm();
        if (angle < 1e-12) {
            return UnitQuaternion(1.0, 0.5 * rotvec.x(), 0.5 * rotvec.y(), 0.5 * rotvec.z());
        }
        const double s = std::sin(0.5 * angle) / angle;
        return UnitQuaternion(std::cos(0.5 * angle), s * rotvec.x(), s * rotvec.y(), s * rotvec.z());
    }

    /// ZYX (yaw-pitch-roll) Euler angles.
    static UnitQuaternion from_euler(double roll, double pitch, double yaw)
    {
        return from_axis_angle(Vec3::UnitZ(), yaw) * from_axis_angle(Vec3::UnitY(), pitch) *
               from_axis_angle(Vec3::UnitX(), roll);
    }

    double w() const { return q_.w(); }
    double x() const { return q_.x(); }
    double y() const { return q_.y(); }
    double z() const { return q_.z(); }
    Vec3 vec() const { return q_.vec(); }
    Eigen::Vector4d wxyz() const { return {q_.w(), q_.x(), q_.y(), q_.z()}; }
    const Eigen::Quaterniond& eigen() const { return q_; }

    UnitQuaternion conjugate() const { return UnitQuaternion(q_.w(), -q_.x(), -q_.y(), -q_.z()); }
    UnitQuaternion operator*(const UnitQuaternion& o) const { return UnitQuaternion(q_ * o.q_); }

    Mat3 matrix() const { return q_.toRotationMatrix(); }
    RotationMatrix rotation() const { return RotationMatrix(matrix()); }

    /// Roll, pitch, yaw (ZYX convention).
    Vec3 euler() const
    {
        const Mat3 r = matrix();
        const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
        return {std::atan2(r(2, 1), r(2, 2)), pitch, std::atan2(r(1, 0), r(0, 0))};
    }

    /// Rotation angle in [0, pi].
    double angle() const { return 2.0 * std::atan2(q_.vec().norm(), std::abs(q_.w())); }

private:
    Eigen::Quaterniond q_;
};

/// Same rotation, either sign.
inline bool same_rotation(const UnitQuaternion& a, const UnitQuaternion& b, double tol)
{
    return (a.wxyz() - b.wxyz()).cwiseAbs().maxCoeff() < tol || (a.wxyz() + b.wxyz()).cwiseAbs().maxCoeff() < tol;
}

inline Vec3 quat_rotate(const UnitQuaternion& q, const Vec3& v)
{
    // v + 2w (u x v) + 2 u x (u x v)
    const Vec3 u = q.vec();
    const Vec3 t = 2.0 * u.cross(v);
    return v + q.w() * t + u.cross(t);
}

/// Attitude propagation for constant body rate over dt (exact exponential map).
inline UnitQuaternion quat_integrate(const UnitQuaternion& q, const Vec3& omega_body, double dt)
{
    if (dt < 0.0) {
        throw std::invalid_argument("quat_integrate: negative dt");
    }
    return q * UnitQuaternion::exp(omega_body * dt);
}

// Generalized Rodrigues parameters with a = 1, f = 2(a + 1) = 4. With this
// scaling the error is approximately the rotation angle (rad) for small errors.
inline constexpr double kMrpA = 1.0;
inline constexpr double kMrpF = 2.0 * (kMrpA + 1.0);

/// Attitude error (scaled modified Rodrigues parameters).
using AttitudeError = Vec3;

inline AttitudeError quat_to_mrp(const UnitQuaternion& dq)
{
    // Shadow set: the error quaternion and its negative encode the same rotation;
    // picking w >= 0 keeps |p| bounded and avoids the 360 deg singularity.
    const double sign = dq.w() < 0.0 ? -1.0 : 1.0;
    return (kMrpF * sign / (kMrpA + sign * dq.w())) * dq.vec();
}

inline UnitQuaternion mrp_to_quat(const AttitudeError& p)
{
    constexpr double a2 = kMrpA * kMrpA;
    constexpr double f2 = kMrpF * kMrpF;
    const double n2 = p.squaredNorm();
    const double w = (-kMrpA * n2 + kMrpF * std::sqrt(f2 + (1.0 - a2) * n2)) / (f2 + n2);
    const Vec3 v = ((kMrpA + w) / kMrpF) * p;
    return UnitQuaternion(w, v.x(), v.y(), v.z());
}

/// Error of q relative to q_ref: MRP of q * q_ref^-1.
inline AttitudeError mrp_error(const UnitQuaternion& q, const UnitQuaternion& q_ref)
{
    return quat_to_mrp(q * q_ref.conjugate());
}

inline UnitQuaternion compose_mrp(const UnitQuaternion& q_ref, const AttitudeError& e)
{
    return mrp_to_quat(e) * q_ref;
}

}  // namespace windest
