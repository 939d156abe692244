#pragma once

// Identification of the drag polynomial and of the lumped whisker coefficients.

#include "windest/airflow_sensor.hpp"
#include "windest/geom.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace windest {

class IdentificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DragSample {
    double speed = 0.0;  // |v|, m/s
    double force = 0.0;  // drag projected on the direction of motion, N
};

struct DragFit {
    double mu1 = 0.0;
    double mu2 = 0.0;
    double residual_rms = 0.0;  // N
};

inline constexpr double kTiltMargin = 1e-6;

/// Thrust holding altitude at the given roll and pitch: m g / (cos(roll) cos(pitch)).
inline double thrust_from_attitude(double mass, double roll, double pitch, double gravity = 9.81)
{
    constexpr double limit = std::numbers::pi / 2.0 - kTiltMargin;
    if (!(std::abs(roll) < limit) || !(std::abs(pitch) < limit)) {
        throw IdentificationError("thrust_from_attitude: attitude too close to 90 deg");
    }
    return mass * gravity / (std::cos(roll) * std::cos(pitch));
}

/// (f_thrust_B - m a_B) . e_v with f_thrust_B = (0, 0, thrust) and a_B the body-frame acceleration.
inline DragSample drag_sample(double thrust, double mass, const Vec3& accel_B, const Vec3& direction_B, double speed)
{
    if (std::abs(direction_B.norm() - 1.0) > 1e-6) {
        throw std::invalid_argument("drag_sample: direction must be a unit vector");
    }
    if (speed < 0.0) {
        throw std::invalid_argument("drag_sample: negative speed");
    }
    return {speed, (Vec3(0.0, 0.0, thrust) - mass * accel_B).dot(direction_B)};
}

/// Least-squares fit of force = mu1 v + mu2 v^2 (no constant term).
inline DragFit fit_drag_polynomial(const std::vector<DragSample>& samples)
{
    std::vector<double> speeds;
    for (const DragSample& s : samples) {
        speeds.push_back(s.speed);
    }
    std::sort(speeds.begin(), speeds.end());
    const auto distinct = std::unique(speeds.begin(), speeds.end(),
                                      [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); });
    if (distinct - speeds.begin() < 3) {
        throw IdentificationError("fit_drag_polynomial: at least 3 distinct speeds required");
    }

    const auto n = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixX2d a(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = samples[static_cast<std::size_t>(i)].speed;
        a(i, 0) = v;
        a(i, 1) = v * v;
        b(i) = samples[static_cast<std::size_t>(i)].force;
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixX2d> qr(a);
    if (qr.rank() < 2) {
        throw IdentificationError("fit_drag_polynomial: rank-deficient design");
    }
    const Eigen::Vector2d mu = qr.solve(b);
    if (!mu.allFinite()) {
        throw IdentificationError("fit_drag_polynomial: non-finite coefficients");
    }
    return {mu(0), mu(1), std::sqrt((a * mu - b).squaredNorm() / static_cast<double>(n))};
}

inline constexpr double kSensorSpeedCutoff = 0.2;  // m/s, planar airflow

/// Median over samples of |theta| / (|v| |v_xy|), with v the airflow in the sensor frame.
inline double identify_sensor_coefficient(const std::vector<DeflectionAngles>& angles,
                                          const std::vector<Vec3>& airflow_S,
                                          double cutoff = kSensorSpeedCutoff)
{
    if (angles.size() != airflow_S.size()) {
        throw std::invalid_argument("identify_sensor_coefficient: angle and airflow counts differ");
    }
    std::vector<double> ratios;
    for (std::size_t i = 0; i < angles.size(); ++i) {
        const Vec3& v = airflow_S[i];
        const double planar = v.head<2>().norm();
        if (planar > cutoff) {
            ratios.push_back(angles[i].vec().norm() / (v.norm() * planar));
        }
    }
    if (ratios.empty()) {
        throw IdentificationError("identify_sensor_coefficient: no sample above the speed cutoff");
    }
    const std::size_t mid = ratios.size() / 2;
    std::nth_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(mid), ratios.end());
    const double upper = ratios[mid];
    if (ratios.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

/// Derivative of uniformly or irregularly sampled data by a centered least-squares
/// line over +-half_window samples (zero phase). Endpoints use the available one-sided window.
inline std::vector<Vec3> smoothed_derivative(const std::vector<double>& t, const std::vector<Vec3>& x, int half_window)
{
    if (t.size() != x.size()) {
        throw std::invalid_argument("smoothed_derivative: size mismatch");
    }
    if (half_window < 1) {
        throw std::invalid_argument("smoothed_derivative: half_window must be >= 1");
    }
    const auto n = static_cast<int>(t.size());
    std::vector<Vec3> d(t.size(), Vec3::Zero());
    if (n < 2) {
        return d;
    }
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half_window);
        const int hi = std::min(n - 1, i + half_window);
        double tm = 0.0;
        Vec3 xm = Vec3::Zero();
        for (int k = lo; k <= hi; ++k) {
            tm += t[static_cast<std::size_t>(k)];
            xm += x[static_cast<std::size_t>(k)];
        }
        const double count = hi - lo + 1;
        tm /= count;
        xm /= count;
        double stt = 0.0;
        Vec3 stx = Vec3::Zero();
        for (int k = lo; k <= hi; ++k) {
            const double dt = t[static_cast<std::size_t>(k)] - tm;
            stt += dt * dt;
            stx += dt * (x[static_cast<std::size_t>(k)] - xm);
        }
        if (stt > 0.0) {
            d[static_cast<std::size_t>(i)] = stx / stt;
        }
    }
    return d;
}

}  // namespace windest
