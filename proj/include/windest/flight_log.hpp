#pragma once

// Multi-rate flight record produced by the simulator and consumed by the
// estimation pipeline and the CSV reader/writer.

#include "windest/airflow_sensor.hpp"
#include "windest/geom.hpp"
#include "windest/vehicle.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace windest {

enum class FlightPhase { Ground = 0, Takeoff = 1, Transit = 2, Execute = 3, Landing = 4 };

struct TruthSample {
    double t = 0.0;
    VehicleState state;
    Vec3 acceleration = Vec3::Zero();  // world, m/s^2
    Vec3 wind = Vec3::Zero();          // at the vehicle, m/s
    Vec3 touch = Vec3::Zero();         // N
    Vec3 drag = Vec3::Zero();          // N
    double thrust = 0.0;               // applied, N
    FlightPhase phase = FlightPhase::Ground;
    int segment = 0;
    bool steady = false;
};

struct OdometrySample {
    double t = 0.0;
    Vec3 position = Vec3::Zero();
    UnitQuaternion attitude;
    Vec3 velocity = Vec3::Zero();
    Vec3 rate = Vec3::Zero();
};

struct ImuSample {
    double t = 0.0;
    Vec3 accel = Vec3::Zero();  // specific force, body, m/s^2
    Vec3 gyro = Vec3::Zero();   // rad/s
};

struct WhiskerSample {
    double t = 0.0;
    std::vector<MagneticField> field;  // one per sensor, raw
};

struct ThrottleSample {
    double t = 0.0;
    std::array<double, kRotorCount> throttle{};  // normalized, [0, 1]
};

struct CommandSample {
    double t = 0.0;
    WrenchInput wrench;  // commanded thrust and torque
};

struct FlightLog {
    std::string name;
    std::uint64_t seed = 0;
    std::vector<TruthSample> truth;
    std::vector<OdometrySample> odometry;
    std::vector<ImuSample> imu;
    std::vector<WhiskerSample> whiskers;
    std::vector<ThrottleSample> throttle;
    std::vector<CommandSample> commands;
};

}  // namespace windest
