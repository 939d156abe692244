#include "windest/pipeline.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace windest {
namespace {

Scenario quiet_hover(double hover_duration, const Vec3& ambient = Vec3::Zero())
{
    Scenario sc = scenario_preset("hover", 3);
    sc.noise = NoiseSpec::none();
    sc.trajectory.hover_duration = hover_duration;
    sc.wind.ambient = ambient;
    return sc;
}

const FlightLog& calm_log()
{
    static const FlightLog log = run_scenario(quiet_hover(10.0));
    return log;
}

// Uniform 2 m/s along +x, switched on after takeoff so the whisker calibration sees still air.
const FlightLog& windy_log()
{
    static const FlightLog log = [] {
        Scenario sc = quiet_hover(20.0);
        GustSource g;
        g.origin = sc.trajectory.hover_point - Vec3(6.0, 0.0, 0.0);
        g.direction = Vec3::UnitX();
        g.half_angle = 1.2;
        g.speed_ref = 2.0;
        g.distance_ref = 6.0;
        g.decay = 0.0;
        g.on_time = Trajectory(sc.trajectory).execute_start();
        sc.wind.gusts.push_back(g);
        return run_scenario(sc);
    }();
    return log;
}

const TruthSample& truth_at(const FlightLog& log, double t)
{
    std::size_t k = 0;
    while (k + 1 < log.truth.size() && log.truth[k + 1].t <= t + 1e-9) {
        ++k;
    }
    return log.truth[k];
}

TEST(Estimator, OneEstimatePerWhiskerTick)
{
    const FlightLog& log = calm_log();
    const EstimationRun run = run_estimator(log, EstimatorConfig{});
    ASSERT_EQ(run.estimates.size(), log.whiskers.size());
    for (std::size_t k = 0; k < log.whiskers.size(); ++k) {
        EXPECT_NEAR(run.estimates[k].t, log.whiskers[k].t, 1e-9);
    }
}

TEST(Estimator, CalmHoverGivesSmallDisturbances)
{
    const FlightLog& log = calm_log();
    const EstimationRun run = run_estimator(log, EstimatorConfig{});
    EXPECT_EQ(run.rejected_readings, 0);
    for (const EstimateSample& e : run.estimates) {
        if (truth_at(log, e.t).phase != FlightPhase::Execute) {
            continue;
        }
        EXPECT_LT(e.wind.norm(), 0.2) << "t=" << e.t;
        EXPECT_LT(e.touch.norm(), 0.2) << "t=" << e.t;
        EXPECT_EQ(e.sensors, 4);
    }
}

TEST(Estimator, ConstantWindIsRecoveredAsWindNotTouch)
{
    const FlightLog& log = windy_log();
    const EstimationRun run = run_estimator(log, EstimatorConfig{});
    const VehicleParams vehicle;
    const Vec3 expected_drag = drag_force(Vec3(2.0, 0.0, 0.0) - Vec3::Zero(), vehicle);
    const EstimateSample* last = nullptr;
    for (const EstimateSample& e : run.estimates) {
        if (truth_at(log, e.t).phase == FlightPhase::Execute) {
            last = &e;
        }
    }
    ASSERT_NE(last, nullptr);
    EXPECT_NEAR(last->wind.x(), 2.0, 0.2);
    EXPECT_NEAR(last->wind.y(), 0.0, 0.2);
    EXPECT_LT(last->touch.norm(), 0.2);
    EXPECT_NEAR(last->drag.x(), expected_drag.x(), 0.1);
}

TEST(Estimator, WindPresentDuringCalibrationIsAbsorbedIntoOffsets)
{
    const FlightLog log = run_scenario(quiet_hover(10.0, Vec3(2.0, 0.0, 0.0)));
    const SensorCalibration cal = calibrate_sensors(log.whiskers, default_rig());
    double largest = 0.0;
    for (const DeflectionAngles& o : cal.offsets) {
        largest = std::max(largest, std::hypot(o.theta_x, o.theta_y));
    }
    EXPECT_GT(largest, 0.01);
    const EstimationRun run = run_estimator(log, EstimatorConfig{});
    EXPECT_LT(run.estimates.back().wind.norm(), 0.2);
}

TEST(Estimator, UncertaintyStaysPositive)
{
    const EstimationRun run = run_estimator(calm_log(), EstimatorConfig{});
    for (const EstimateSample& e : run.estimates) {
        for (int i = 0; i < 3; ++i) {
            ASSERT_GT(e.touch_std(i), 0.0);
            ASSERT_GT(e.wind_std(i), 0.0);
            ASSERT_TRUE(std::isfinite(e.touch_std(i)));
        }
    }
}

TEST(Estimator, LstmSourceWithoutWeightsThrows)
{
    EstimatorConfig cfg;
    cfg.source = AirflowSource::Lstm;
    EXPECT_THROW(run_estimator(calm_log(), cfg), std::invalid_argument);
}

TEST(Estimator, EmptyLogThrows)
{
    EXPECT_THROW(run_estimator(FlightLog{}, EstimatorConfig{}), std::invalid_argument);
}

TEST(Estimator, LstmSourceProducesSameScheduleWithoutSensorUpdates)
{
    const FlightLog& log = calm_log();
    TrainConfig tc;
    tc.epochs = 2;
    const TrainResult trained = train({build_training_run(log, default_rig())}, tc);
    EstimatorConfig cfg;
    cfg.source = AirflowSource::Lstm;
    const EstimationRun run = run_estimator(log, cfg, &trained.model);
    ASSERT_EQ(run.estimates.size(), log.whiskers.size());
    for (const EstimateSample& e : run.estimates) {
        EXPECT_EQ(e.sensors, 0);
        EXPECT_TRUE(e.wind.allFinite());
        EXPECT_TRUE(e.touch.allFinite());
    }
}

TEST(AirflowSourceName, RoundTrips)
{
    EXPECT_EQ(parse_airflow_source(to_string(AirflowSource::Model)), AirflowSource::Model);
    EXPECT_EQ(parse_airflow_source(to_string(AirflowSource::Lstm)), AirflowSource::Lstm);
    EXPECT_THROW(parse_airflow_source("ukf"), std::invalid_argument);
}

// ---------------------------------------------------------------- training data

TEST(TrainingData, LabelIsNegatedBodyVelocity)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const Vec3 axis = Vec3(n(rng), n(rng), n(rng)).normalized();
        const double angle = 3.0 * n(rng);
        OdometrySample o;
        o.attitude = UnitQuaternion::from_axis_angle(axis, angle);
        o.velocity = Vec3(n(rng), n(rng), n(rng));
        const Mat3 r = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
        EXPECT_LT((airflow_label(o) - (-r.transpose() * o.velocity)).norm(), 1e-12);
    }
}

TEST(TrainingData, ShapesMatchAlignedRows)
{
    const FlightLog& log = calm_log();
    const TrainingRun run = build_training_run(log, default_rig());
    const auto rows = resample_50hz(log);
    ASSERT_EQ(run.features.rows(), kFeatureSize);
    ASSERT_EQ(run.labels.rows(), 3);
    ASSERT_EQ(run.features.cols(), static_cast<Eigen::Index>(rows.size()));
    ASSERT_EQ(run.labels.cols(), run.features.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto c = static_cast<Eigen::Index>(k);
        EXPECT_NEAR(run.labels.col(c).norm(), rows[k].odometry.velocity.norm(), 1e-12);
    }
}

TEST(TrainingData, ThrottleFeaturesCarrySpinSign)
{
    const FlightLog& log = calm_log();
    const TrainingRun run = build_training_run(log, default_rig());
    const auto spin = detail::spin_vector();
    for (Eigen::Index c = 0; c < run.features.cols(); ++c) {
        for (int r = 0; r < kRotorCount; ++r) {
            const double f = run.features(FeatureLayout::kThrottle + r, c);
            if (spin[static_cast<std::size_t>(r)] == SpinDirection::CounterClockwise) {
                EXPECT_LE(f, 0.0);
                EXPECT_GE(f, -1.0);
            } else {
                EXPECT_GE(f, 0.0);
                EXPECT_LE(f, 1.0);
            }
        }
    }
}

TEST(TrainingData, HeldAnglesSurviveRejectedReadings)
{
    FlightLog log = calm_log();
    const std::size_t spike = log.whiskers.size() / 2;
    log.whiskers[spike].field[0].bz += 1000.0;
    const TrainingRun run = build_training_run(log, default_rig());
    const auto rows = resample_50hz(log);
    std::size_t col = 0;
    while (col < rows.size() && std::abs(rows[col].t - log.whiskers[spike].t) > 1e-9) {
        ++col;
    }
    ASSERT_LT(col, rows.size());
    ASSERT_GT(col, 0U);
    const auto c = static_cast<Eigen::Index>(col);
    EXPECT_EQ(run.features(FeatureLayout::kAngles, c), run.features(FeatureLayout::kAngles, c - 1));
    EXPECT_EQ(run.features(FeatureLayout::kAngles + 1, c), run.features(FeatureLayout::kAngles + 1, c - 1));
}

// ---------------------------------------------------------------- identification

TEST(LogIdentification, CircleFlightRecoversDrag)
{
    Scenario sc = scenario_preset("circle", 2);
    sc.noise = NoiseSpec::none();
    const FlightLog log = run_scenario(sc);
    const LogIdentification id = identify_from_log(log, sc.vehicle, sc.rig);
    EXPECT_GT(id.drag_samples, 100U);
    for (const double speed : {1.0, 3.0, 5.0}) {
        const double truth = drag_magnitude(speed, sc.vehicle);
        const double fitted = id.drag.mu1 * speed + id.drag.mu2 * speed * speed;
        EXPECT_NEAR(fitted, truth, 0.03 * truth) << "speed " << speed;
    }
    ASSERT_EQ(id.sensor_coefficients.size(), sc.rig.size());
    for (std::size_t i = 0; i < sc.rig.size(); ++i) {
        EXPECT_NEAR(id.sensor_coefficients[i], sc.rig[i].coefficient, 0.05 * sc.rig[i].coefficient) << "sensor " << i;
    }
}

TEST(LogIdentification, HoverOnlyFlightIsRejected)
{
    EXPECT_ANY_THROW(identify_from_log(calm_log(), VehicleParams{}, default_rig()));
}

}  // namespace
}  // namespace windest
