#pragma once

// End-to-end acceptance checks, each reduced to one pass/fail result with
// its measured values. Shared by the acceptance test binary and `windest eval`.

#include "windest/flight_sim.hpp"
#include "windest/lstm.hpp"
#include "windest/pipeline.hpp"
#include "windest/preprocess.hpp"
#include "windest/sysid.hpp"
#include "windest/ukf.hpp"
#include "windest/unscented.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace windest::acceptance {

// Tolerances. Changing any of these changes what "pass" means.
inline const Vec3 kUkfAirflowCeiling(0.45, 0.35, 0.55);  // m/s per body axis
inline constexpr double kAirflowRuntimeLimit = 300.0;    // s, including training
inline constexpr double kDragFitNoiselessTol = 1e-6;     // absolute, on mu1 and mu2
inline constexpr double kDragFitNoisyTol = 0.10;         // relative
inline constexpr int kDragFitNoisyRuns = 5;
inline constexpr double kDragAt3Expected = 1.23;  // N
inline constexpr double kDragAt3Tol = 0.15;       // N
inline constexpr double kGustInConeTol = 0.15;    // relative
inline constexpr double kGustOutsideLimit = 0.3;  // m/s
inline constexpr double kPhaseSettle = 5.0;       // s skipped at the start of each four-phase part
inline constexpr double kQuietForceLimit = 0.3;   // N
inline constexpr double kWindDragTol = 0.15;      // relative
inline constexpr double kPullTouchTol = 0.10;     // relative
inline constexpr double kThrustScaleError = 0.85;
inline constexpr double kOvershootFactor = 1.10;  // peak estimate / true pull
inline constexpr int kNumericsSteps = 10000;
inline constexpr double kSymmetryTol = 1e-9;
inline constexpr double kEigenTol = 1e-9;
inline constexpr double kQuatNormTol = 1e-9;
inline constexpr int kAffineMaps = 100;
inline constexpr double kAffineTol = 1e-8;
inline constexpr int kGradientConfigs = 20;
inline constexpr double kGradientTol = 1e-4;
inline constexpr double kGradientFloor = 1e-6;
inline constexpr double kAdamLearningRate = 0.1;
inline constexpr int kAdamMaxSteps = 200;
inline constexpr double kAdamTarget = 1e-3;
inline constexpr double kAdamFirstStepTol = 1e-6;  // relative to the learning rate
inline constexpr int kDriverSteps = 50;

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
};

inline std::string line(const CriterionResult& r)
{
    return std::string(r.passed ? "PASS" : "FAIL") + "  criterion " + std::to_string(r.id) + "  " + r.name + ": " +
           r.detail;
}

namespace detail {

inline std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

inline std::string fmt3(const Vec3& v)
{
    return fmt("%.3f/%.3f/%.3f", v.x(), v.y(), v.z());
}

/// Truth sample at or just before t.
class TruthCursor {
public:
    explicit TruthCursor(const FlightLog& log) : log_(log) {}

    const TruthSample& at(double t)
    {
        while (i_ + 1 < log_.truth.size() && log_.truth[i_ + 1].t <= t + 1e-9) {
            ++i_;
        }
        return log_.truth[i_];
    }

private:
    const FlightLog& log_;
    std::size_t i_ = 0;
};

/// Per-axis RMS of -airflow_B against the true body velocity relative to the
/// air, over the execution phase.
inline Vec3 airflow_rms(const FlightLog& log, const std::vector<double>& t, const std::vector<Vec3>& airflow_B)
{
    TruthCursor cur(log);
    Vec3 sum = Vec3::Zero();
    int n = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const TruthSample& tr = cur.at(t[k]);
        if (tr.phase != FlightPhase::Execute) {
            continue;
        }
        const Vec3 v_B = quat_rotate(tr.state.attitude.conjugate(), tr.state.velocity - tr.wind);
        sum += (-airflow_B[k] - v_B).cwiseAbs2();
        ++n;
    }
    return n > 0 ? Vec3((sum / n).cwiseSqrt()) : Vec3::Constant(INFINITY);
}

inline Vec3 airflow_rms(const FlightLog& log, const std::vector<EstimateSample>& est)
{
    std::vector<double> t;
    std::vector<Vec3> a;
    for (const EstimateSample& e : est) {
        t.push_back(e.t);
        a.push_back(e.airflow_B);
    }
    return airflow_rms(log, t, a);
}

/// Drag samples from the true applied thrust and acceleration of steady
/// constant-speed flight.
inline std::vector<DragSample> drag_samples_from_truth(const FlightLog& log, const VehicleParams& vehicle)
{
    std::vector<DragSample> out;
    for (const TruthSample& s : log.truth) {
        const double speed = (s.state.velocity - s.wind).norm();
        if (!s.steady || s.phase != FlightPhase::Execute || speed < 0.5) {
            continue;
        }
        const UnitQuaternion qc = s.state.attitude.conjugate();
        const Vec3 a_B = quat_rotate(qc, s.acceleration - gravity_vector(vehicle));
        const Vec3 dir_B = quat_rotate(qc, (s.state.velocity - s.wind) / speed);
        out.push_back(drag_sample(s.thrust, vehicle.mass, a_B, dir_B, speed));
    }
    return out;
}

inline double elapsed(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
        for (Eigen::Index i = 0; i < r; ++i) {
            m(i, j) = u(rng);
        }
    }
    return m;
}

}  // namespace detail

// ---------------------------------------------------------------- 1

inline CriterionResult relative_airflow(std::uint64_t seed = 1)
{
    using detail::fmt;
    const auto start = std::chrono::steady_clock::now();
    const SensorRig rig = default_rig();
    std::vector<TrainingRun> runs;
    runs.push_back(build_training_run(run_scenario(scenario_preset("circle", seed + 10)), rig));
    runs.push_back(build_training_run(run_scenario(scenario_preset("joystick", seed + 11)), rig));
    TrainConfig tc;
    tc.seed = seed;
    const TrainResult trained = train(runs, tc);

    const FlightLog test = run_scenario(scenario_preset("joystick", seed + 12));
    const EstimationRun ukf = run_estimator(test, EstimatorConfig{});
    const Vec3 ukf_rms = detail::airflow_rms(test, ukf.estimates);
    const AirflowTrack net = lstm_airflow_track(test, rig, trained.model);
    const Vec3 lstm_rms = detail::airflow_rms(test, net.t, net.airflow_B);
    const double seconds = detail::elapsed(start);

    const bool ukf_ok = (ukf_rms.array() <= kUkfAirflowCeiling.array()).all();
    const bool order_ok = (lstm_rms.array() <= ukf_rms.array()).all();
    const bool time_ok = seconds <= kAirflowRuntimeLimit;
    return {1, "relative airflow, held-out joystick flight", ukf_ok && order_ok && time_ok,
            "UKF RMS " + detail::fmt3(ukf_rms) + " (ceiling " + detail::fmt3(kUkfAirflowCeiling) + "), LSTM RMS " +
                detail::fmt3(lstm_rms) + " (must not exceed UKF), " + fmt("%.1f s (limit %.0f s)", seconds,
                                                                         kAirflowRuntimeLimit)};
}

// ---------------------------------------------------------------- 2

inline CriterionResult drag_identification(std::uint64_t seed = 1)
{
    using detail::fmt;
    Scenario clean = scenario_preset("circle", seed);
    clean.noise = NoiseSpec::none();
    const DragFit exact = fit_drag_polynomial(detail::drag_samples_from_truth(run_scenario(clean), clean.vehicle));
    const double exact_err = std::max(std::abs(exact.mu1 - clean.vehicle.mu1), std::abs(exact.mu2 - clean.vehicle.mu2));
    bool ok = exact_err <= kDragFitNoiselessTol;
    std::string noisy;
    double worst = 0.0;
    for (int r = 0; r < kDragFitNoisyRuns; ++r) {
        const Scenario sc = scenario_preset("circle", seed + 100 + static_cast<std::uint64_t>(r));
        const FlightLog log = run_scenario(sc);
        const DragFit fit = fit_drag_polynomial(drag_samples_from_log(log, sc.vehicle));
        const double e = std::max(std::abs(fit.mu1 / sc.vehicle.mu1 - 1.0), std::abs(fit.mu2 / sc.vehicle.mu2 - 1.0));
        worst = std::max(worst, e);
        ok = ok && e <= kDragFitNoisyTol;
        noisy += fmt(" (%.4f, %.4f)", fit.mu1, fit.mu2);
    }
    return {2, "drag identification", ok,
            fmt("noiseless mu1=%.9f mu2=%.9f max error %.2e (tol %.0e); noisy fits", exact.mu1, exact.mu2, exact_err,
                kDragFitNoiselessTol) +
                noisy + fmt(" worst relative error %.3f (tol %.2f)", worst, kDragFitNoisyTol)};
}

// ---------------------------------------------------------------- 3

inline CriterionResult drag_at_three(std::uint64_t seed = 1)
{
    const Scenario sc = scenario_preset("circle", seed);
    const FlightLog log = run_scenario(sc);
    const EstimationRun run = run_estimator(log, EstimatorConfig{});
    int segment = -1;
    for (std::size_t i = 0; i < sc.trajectory.speeds.size(); ++i) {
        if (sc.trajectory.speeds[i] == 3.0) {
            segment = static_cast<int>(i);
        }
    }
    detail::TruthCursor cur(log);
    double sum = 0.0;
    int n = 0;
    for (const EstimateSample& e : run.estimates) {
        const TruthSample& tr = cur.at(e.t);
        if (tr.steady && tr.phase == FlightPhase::Execute && tr.segment == segment) {
            sum += e.drag.norm();
            ++n;
        }
    }
    const double mean = n > 0 ? sum / n : 0.0;
    return {3, "drag estimate at 3 m/s", n > 0 && std::abs(mean - kDragAt3Expected) <= kDragAt3Tol,
            detail::fmt("mean |drag| %.3f N over %d steady samples (expected %.2f +- %.2f N)", mean, n, kDragAt3Expected,
                        kDragAt3Tol)};
}

// ---------------------------------------------------------------- 4

inline CriterionResult gust_detection(std::uint64_t seed = 1)
{
    const FlightLog log = run_scenario(scenario_preset("line_gust", seed));
    const EstimationRun run = run_estimator(log, EstimatorConfig{});
    detail::TruthCursor cur(log);
    double in_est = 0.0;
    double in_true = 0.0;
    double out_est = 0.0;
    int n_in = 0;
    int n_out = 0;
    for (const EstimateSample& e : run.estimates) {
        const TruthSample& tr = cur.at(e.t);
        if (tr.phase != FlightPhase::Execute) {
            continue;
        }
        if (tr.wind.norm() > 0.0) {
            in_est += e.wind.norm();
            in_true += tr.wind.norm();
            ++n_in;
        } else {
            out_est += e.wind.norm();
            ++n_out;
        }
    }
    const double rel = n_in > 0 ? std::abs(in_est / in_true - 1.0) : INFINITY;
    const double outside = n_out > 0 ? out_est / n_out : INFINITY;
    return {4, "wind gust detection", rel <= kGustInConeTol && outside < kGustOutsideLimit,
            detail::fmt("in cone mean |wind| %.3f vs true %.3f m/s (error %.1f%%, tol %.0f%%); outside mean %.3f m/s "
                        "(limit %.2f)",
                        n_in ? in_est / n_in : 0.0, n_in ? in_true / n_in : 0.0, 100.0 * rel, 100.0 * kGustInConeTol,
                        outside, kGustOutsideLimit)};
}

// ---------------------------------------------------------------- 5

struct PhaseStats {
    double touch_norm = 0.0;   // mean |estimated touch|
    double drag_norm = 0.0;    // mean |estimated drag|
    double true_drag = 0.0;    // mean |true drag|
    Vec3 touch = Vec3::Zero();       // mean estimated touch
    Vec3 true_touch = Vec3::Zero();  // mean true touch
    double peak_touch = 0.0;
    int samples = 0;
};

/// Statistics for part `part` (0..3) of the four-phase flight.
inline PhaseStats four_phase_stats(const FlightLog& log, const std::vector<EstimateSample>& est, double execute_start,
                                   int part)
{
    const double a = execute_start + part * kFourPhaseDuration + kPhaseSettle;
    const double b = execute_start + (part + 1) * kFourPhaseDuration;
    detail::TruthCursor cur(log);
    PhaseStats s;
    for (const EstimateSample& e : est) {
        if (e.t < a || e.t >= b) {
            continue;
        }
        const TruthSample& tr = cur.at(e.t);
        s.touch_norm += e.touch.norm();
        s.drag_norm += e.drag.norm();
        s.true_drag += tr.drag.norm();
        s.touch += e.touch;
        s.true_touch += tr.touch;
        s.peak_touch = std::max(s.peak_touch, e.touch.norm());
        ++s.samples;
    }
    if (s.samples > 0) {
        const double n = s.samples;
        s.touch_norm /= n;
        s.drag_norm /= n;
        s.true_drag /= n;
        s.touch /= n;
        s.true_touch /= n;
    }
    return s;
}

inline CriterionResult drag_touch_separation(std::uint64_t seed = 1)
{
    using detail::fmt;
    Scenario sc = scenario_preset("four_phase", seed);
    const double t0 = Trajectory(sc.trajectory).execute_start();
    const FlightLog log = run_scenario(sc);
    const EstimationRun run = run_estimator(log, EstimatorConfig{});
    const PhaseStats wind = four_phase_stats(log, run.estimates, t0, 1);
    const PhaseStats pull = four_phase_stats(log, run.estimates, t0, 3);

    sc.thrust_scale = kThrustScaleError;
    const FlightLog biased_log = run_scenario(sc);
    const EstimationRun biased = run_estimator(biased_log, EstimatorConfig{});
    const PhaseStats biased_pull = four_phase_stats(biased_log, biased.estimates, t0, 3);

    const double wind_drag_err = std::abs(wind.drag_norm / wind.true_drag - 1.0);
    const double pull_touch_err = (pull.touch - pull.true_touch).norm() / pull.true_touch.norm();
    const double overshoot = biased_pull.peak_touch / biased_pull.true_touch.norm();
    const bool ok = wind.touch_norm < kQuietForceLimit && wind_drag_err <= kWindDragTol &&
                    pull.drag_norm < kQuietForceLimit && pull_touch_err <= kPullTouchTol &&
                    overshoot > kOvershootFactor;
    return {5, "drag / interaction force separation", ok,
            fmt("wind only: |touch| %.3f N (limit %.1f), |drag| %.3f vs %.3f N (error %.1f%%, tol %.0f%%); "
                "pull only: |drag| %.3f N (limit %.1f), touch error %.1f%% (tol %.0f%%); "
                "thrust scale %.2f: peak |touch| %.2f N vs %.2f N (ratio %.2f, must exceed %.2f)",
                wind.touch_norm, kQuietForceLimit, wind.drag_norm, wind.true_drag, 100.0 * wind_drag_err,
                100.0 * kWindDragTol, pull.drag_norm, kQuietForceLimit, 100.0 * pull_touch_err, 100.0 * kPullTouchTol,
                kThrustScaleError, biased_pull.peak_touch, biased_pull.true_touch.norm(), overshoot, kOvershootFactor)};
}

// ---------------------------------------------------------------- 6

inline CriterionResult filter_numerics(std::uint64_t seed = 1)
{
    const FilterModel m;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto rv = [&](double s) { return Vec3(s * u(rng), s * u(rng), s * u(rng)); };

    BeliefState b;
    b.cov = StateCovariance::Identity() * 0.01;
    int violations = 0;
    double worst_asym = 0.0;
    double worst_eig = INFINITY;
    double worst_norm = 0.0;
    const Eigen::Index n2 = 2 * static_cast<Eigen::Index>(m.rig.size());
    for (int k = 0; k < kNumericsSteps; ++k) {
        switch (k % 5) {
        case 0:
        case 2: {
            const double dt = 0.001 + 0.02 * (0.5 + 0.5 * u(rng));
            b = predict(b, WrenchInput{m.vehicle.mass * m.vehicle.gravity * (1.0 + 0.2 * u(rng)), rv(0.05)}, dt, m);
            break;
        }
        case 1: {
            OdometryMeasurement z;
            z.position = b.position() + rv(0.05);
            z.attitude = compose_mrp(b.attitude(), rv(0.02));
            z.velocity = b.velocity() + rv(0.1);
            z.rate = b.rate() + rv(0.1);
            z.cov = Eigen::Matrix<double, 12, 12>::Identity() * std::pow(10.0, -4.0 + 2.0 * u(rng));
            b = update_odometry(b, z, m).belief;
            break;
        }
        case 3: {
            std::vector<std::optional<DeflectionAngles>> theta;
            for (std::size_t i = 0; i < m.rig.size(); ++i) {
                if (u(rng) > -0.6) {
                    theta.emplace_back(DeflectionAngles{0.1 * u(rng), 0.1 * u(rng)});
                } else {
                    theta.emplace_back(std::nullopt);
                }
            }
            b = update_airflow(b, theta, MatX::Identity(n2, n2) * std::pow(10.0, -5.0 + 2.0 * u(rng)), m).belief;
            break;
        }
        default:
            b = update_airflow_pseudo(b, rv(3.0), Eigen::Matrix3d::Identity() * (0.01 + 0.1 * (1.0 + u(rng))), m).belief;
        }
        const double asym = (b.cov - b.cov.transpose()).cwiseAbs().rowwise().sum().maxCoeff();
        const double min_eig = Eigen::SelfAdjointEigenSolver<StateCovariance>(b.cov).eigenvalues().minCoeff();
        const double norm_err = std::abs(b.reference.wxyz().norm() - 1.0);
        worst_asym = std::max(worst_asym, asym);
        worst_eig = std::min(worst_eig, min_eig);
        worst_norm = std::max(worst_norm, norm_err);
        if (asym >= kSymmetryTol || min_eig <= -kEigenTol || norm_err >= kQuatNormTol || !b.mean.allFinite()) {
            ++violations;
        }
    }
    return {6, "filter numerics", violations == 0,
            detail::fmt("%d steps, %d violations; max |P-P^T|_inf %.1e (tol %.0e), min eigenvalue %.1e (tol -%.0e), "
                        "max quaternion norm error %.1e (tol %.0e)",
                        kNumericsSteps, violations, worst_asym, kSymmetryTol, worst_eig, kEigenTol, worst_norm,
                        kQuatNormTol)};
}

// ---------------------------------------------------------------- 7

inline CriterionResult unscented_affine(std::uint64_t seed = 1)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dim(1, 18);
    double worst = 0.0;
    for (int k = 0; k < kAffineMaps; ++k) {
        const int n = dim(rng);
        const int m = dim(rng);
        const VecX mean = detail::random_matrix(n, 1, rng, 2.0);
        const MatX l = detail::random_matrix(n, n, rng);
        const MatX cov = l * l.transpose() + 0.1 * MatX::Identity(n, n);
        const MatX a = detail::random_matrix(m, n, rng);
        const VecX c = detail::random_matrix(m, 1, rng);
        const UtResult r = unscented_transform(mean, cov, [&](const VecX& x) -> VecX { return a * x + c; });
        const double err = std::max({(r.mean - (a * mean + c)).cwiseAbs().maxCoeff(),
                                     (r.cov - a * cov * a.transpose()).cwiseAbs().maxCoeff(),
                                     (r.cross_cov - cov * a.transpose()).cwiseAbs().maxCoeff()});
        worst = std::max(worst, err);
    }
    return {7, "unscented transform exact for affine maps", worst <= kAffineTol,
            detail::fmt("%d maps in dimensions 1-18, max error %.2e (tol %.0e)", kAffineMaps, worst, kAffineTol)};
}

// ---------------------------------------------------------------- 8

/// Largest relative gap between backprop and central differences, with
/// |fd| + |an| floored so vanishing gradients compare absolutely.
inline double gradient_gap(const LstmShape& shape, int steps, std::mt19937_64& rng)
{
    LstmParams p(shape);
    p.flat() = detail::random_matrix(p.flat().size(), 1, rng, 0.5);
    const Eigen::MatrixXd x = detail::random_matrix(shape.input, steps, rng);
    const Eigen::MatrixXd y = detail::random_matrix(shape.output, steps, rng);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p.flat().size());
    lstm_backward(p, x, y, g);
    constexpr double h = 1e-5;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.flat().size(); ++i) {
        const double saved = p.flat()(i);
        p.flat()(i) = saved + h;
        const double up = mse_loss(lstm_forward(p, x).outputs, y);
        p.flat()(i) = saved - h;
        const double down = mse_loss(lstm_forward(p, x).outputs, y);
        p.flat()(i) = saved;
        const double fd = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - g(i)) / std::max(std::abs(fd) + std::abs(g(i)), kGradientFloor));
    }
    return worst;
}

inline CriterionResult lstm_gradients(std::uint64_t seed = 1)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> small(1, 6);
    double worst = 0.0;
    for (int k = 0; k < kGradientConfigs; ++k) {
        // the first configuration is the production shape
        const LstmShape shape = k == 0 ? LstmShape{} : LstmShape{small(rng), small(rng), small(rng) % 3 + 1, small(rng)};
        worst = std::max(worst, gradient_gap(shape, small(rng), rng));
    }
    return {8, "LSTM gradients vs finite differences", worst < kGradientTol,
            detail::fmt("%d configurations, max relative error %.2e (tol %.0e)", kGradientConfigs, worst,
                        kGradientTol)};
}

// ---------------------------------------------------------------- 9

inline CriterionResult adam_reference()
{
    AdamConfig cfg;
    cfg.learning_rate = kAdamLearningRate;
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
    AdamState s = AdamState::zeros(1);
    adam_step(x, Eigen::VectorXd::Constant(1, 2.0 * x(0)), s, cfg);
    const double first_step = std::abs(x(0) - 1.0);
    int reached = x(0) * x(0) < kAdamTarget ? 1 : -1;
    for (int t = 2; t <= kAdamMaxSteps && reached < 0; ++t) {
        adam_step(x, Eigen::VectorXd::Constant(1, 2.0 * x(0)), s, cfg);
        if (x(0) * x(0) < kAdamTarget) {
            reached = t;
        }
    }
    const bool step_ok = std::abs(first_step - kAdamLearningRate) <= kAdamFirstStepTol * kAdamLearningRate;
    return {9, "Adam on a scalar quadratic", reached > 0 && step_ok,
            detail::fmt("loss below %.0e after %d steps (limit %d); first step %.9f vs learning rate %.2f", kAdamTarget,
                        reached, kAdamMaxSteps, first_step, kAdamLearningRate)};
}

// ---------------------------------------------------------------- 10

inline CriterionResult driver_recovery(std::uint64_t seed = 1)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> height(1.0, 2000.0);
    std::uniform_int_distribution<int> axis(0, 2);
    std::bernoulli_distribution negative(0.5);
    constexpr double threshold = 50.0;
    int mismatches = 0;
    int max_rejected = 0;
    for (int k = 0; k < kDriverSteps; ++k) {
        const double step = height(rng) * (negative(rng) ? -1.0 : 1.0);
        Vec3 base(3.0, -2.0, 480.0);
        LowPassState lp;
        lp.alpha = kDriverAlpha;
        lp.threshold = threshold;
        lp.filtered = base;
        lp.initialized = true;
        Vec3 b = base;
        b(axis(rng)) += step;
        int rejected = 0;
        bool recovered = false;
        for (int s = 0; s < 1000; ++s) {
            auto [accepted, next] = driver_step({b.x(), b.y(), b.z()}, lp);
            lp = next;
            if (accepted) {
                recovered = true;
                break;
            }
            ++rejected;
        }
        const int expected = driver_rejections(std::abs(step), threshold, kDriverAlpha);
        max_rejected = std::max(max_rejected, rejected);
        mismatches += !recovered || rejected != expected;
    }
    return {10, "driver rejection and recovery", mismatches == 0,
            detail::fmt("%d random steps, %d mismatches against ceil(ln(thr/step)/ln(1-alpha)); max %d rejected",
                        kDriverSteps, mismatches, max_rejected)};
}

// ---------------------------------------------------------------- suite

inline constexpr int kCriterionCount = 10;

/// Runs one criterion by number (1-10).
inline CriterionResult run_criterion(int id, std::uint64_t seed = 1)
{
    try {
        switch (id) {
        case 1: return relative_airflow(seed);
        case 2: return drag_identification(seed);
        case 3: return drag_at_three(seed);
        case 4: return gust_detection(seed);
        case 5: return drag_touch_separation(seed);
        case 6: return filter_numerics(seed);
        case 7: return unscented_affine(seed);
        case 8: return lstm_gradients(seed);
        case 9: return adam_reference();
        case 10: return driver_recovery(seed);
        default: break;
        }
    } catch (const std::exception& e) {
        return {id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what()};
    }
    throw std::invalid_argument("criterion id must be in 1..10");
}

/// Runs the selected criteria (all when empty), reporting each as it finishes.
inline std::vector<CriterionResult> run_suite(const std::vector<int>& ids = {}, std::uint64_t seed = 1,
                                              const std::function<void(const CriterionResult&)>& report = {})
{
    std::vector<int> todo = ids;
    if (todo.empty()) {
        for (int i = 1; i <= kCriterionCount; ++i) {
            todo.push_back(i);
        }
    }
    std::vector<CriterionResult> out;
    for (int id : todo) {
        out.push_back(run_criterion(id, seed));
        if (report) {
            report(out.back());
        }
    }
    return out;
}

}  // namespace windest::acceptance
