// windest: simulate flights, identify parameters, train the airflow network,
// run the estimator on logs, score estimates and run the acceptance suite.

#include "windest/acceptance.hpp"
#include "windest/log_io.hpp"
#include "windest/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace windest;

namespace {

Scenario load_scenario(const std::string& spec, std::uint64_t seed)
{
    if (fs::is_regular_file(spec)) {
        return scenario_from_keys(KeyValueFile::load(spec), seed);
    }
    Scenario sc = scenario_preset(spec, seed == 0 ? 1 : seed);
    return sc;
}

EstimatorConfig load_params(const std::string& path)
{
    return path.empty() ? EstimatorConfig{} : read_params(path);
}

fs::path or_default(const std::string& given, const std::string& name)
{
    return given.empty() ? default_output_dir() / name : fs::path(given);
}

int cmd_sim(const std::string& scenario, std::uint64_t seed, const std::string& out)
{
    const Scenario sc = load_scenario(scenario, seed);
    const fs::path dir = or_default(out, sc.name + "_seed" + std::to_string(sc.seed));
    try {
        const FlightLog log = run_scenario(sc);
        write_flight_log(dir, log);
        std::printf("wrote %s (%.1f s, %zu whisker samples)\n", dir.c_str(), log.truth.back().t, log.whiskers.size());
        return 0;
    } catch (const SimulationError& e) {
        write_flight_log(dir, e.log);
        std::fprintf(stderr, "error: %s; partial log written to %s\n", e.what(), dir.c_str());
        return 3;
    }
}

int cmd_sysid(const std::string& log_dir, const std::string& params_in, const std::string& out)
{
    const FlightLog log = read_flight_log(log_dir);
    if (log.truth.empty()) {
        throw std::runtime_error(log_dir + ": drag identification needs truth.csv for the flight phase labels");
    }
    EstimatorConfig cfg = load_params(params_in);
    const LogIdentification id = identify_from_log(log, cfg.filter.vehicle, cfg.filter.rig);
    cfg.filter.vehicle.mu1 = id.drag.mu1;
    cfg.filter.vehicle.mu2 = id.drag.mu2;
    std::printf("drag: mu1 = %.6f N s/m, mu2 = %.6f N s^2/m^2 (%zu samples, residual rms %.4f N)\n", id.drag.mu1,
                id.drag.mu2, id.drag_samples, id.drag.residual_rms);
    for (std::size_t i = 0; i < id.sensor_coefficients.size(); ++i) {
        cfg.filter.rig[i].coefficient = id.sensor_coefficients[i];
        std::printf("sensor %zu: coefficient = %.6f rad s^2/m^2\n", i, id.sensor_coefficients[i]);
    }
    const fs::path path = or_default(out, "params.cfg");
    save_file(path, write_params, cfg);
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_train(const std::vector<std::string>& logs, int epochs, std::uint64_t seed, const std::string& out,
              const std::string& loss_out)
{
    const SensorRig rig = default_rig();
    std::vector<TrainingRun> runs;
    for (const std::string& dir : logs) {
        runs.push_back(build_training_run(read_flight_log(dir), rig));
    }
    TrainConfig tc;
    tc.epochs = epochs;
    tc.seed = seed;
    const TrainResult r = train(runs, tc);
    const fs::path wpath = or_default(out, "weights.csv");
    const fs::path lpath = or_default(loss_out, "loss.csv");
    save_file(wpath, write_weights, r.model);
    save_file(lpath, write_loss_curve, r.curve);
    const Vec3& v = r.model.validation_rms;
    std::printf("trained %d epochs; final train loss %.5f, validation loss %.5f; validation rms %.3f/%.3f/%.3f m/s\n",
                epochs, r.curve.back().train_loss, r.curve.back().validation_loss, v.x(), v.y(), v.z());
    std::printf("wrote %s and %s\n", wpath.c_str(), lpath.c_str());
    return 0;
}

int cmd_estimate(const std::string& log_dir, const std::string& params, const std::string& weights,
                 const std::string& source, const std::string& out)
{
    EstimatorConfig cfg = load_params(params);
    cfg.source = parse_airflow_source(source);
    std::optional<LstmModel> model;
    if (cfg.source == AirflowSource::Lstm) {
        if (weights.empty()) {
            throw std::runtime_error("--airflow-source lstm needs --weights");
        }
        model = load_file(weights, read_weights);
    }
    const FlightLog log = read_flight_log(log_dir);
    const EstimationRun run = run_estimator(log, cfg, model ? &*model : nullptr);
    const fs::path path = or_default(out, "estimates.csv");
    save_file(path, write_estimates, run.estimates);
    std::printf("%zu estimates (%s airflow), %ld whisker readings rejected; wrote %s\n", run.estimates.size(),
                source.c_str(), run.rejected_readings, path.c_str());
    return 0;
}

int cmd_replay(const std::string& log_dir, const std::string& estimates)
{
    const FlightLog log = read_flight_log(log_dir);
    if (log.truth.empty()) {
        throw std::runtime_error(log_dir + ": replay needs truth.csv");
    }
    const auto est = load_file(estimates, read_estimates);
    if (est.empty()) {
        throw std::runtime_error(estimates + ": no estimates");
    }
    const Vec3 rms = acceptance::detail::airflow_rms(log, est);
    std::printf("relative airflow RMS (-v_inf_B vs body velocity), execution phase: x %.3f  y %.3f  z %.3f m/s\n",
                rms.x(), rms.y(), rms.z());

    struct Acc {
        int n = 0;
        double drag_est = 0, drag_true = 0, touch_est = 0, touch_true = 0, wind_est = 0, wind_true = 0;
        double drag_err = 0, touch_err = 0, wind_err = 0;
    };
    std::map<int, Acc> parts;
    acceptance::detail::TruthCursor cur(log);
    for (const EstimateSample& e : est) {
        const TruthSample& tr = cur.at(e.t);
        if (tr.phase != FlightPhase::Execute) {
            continue;
        }
        Acc& a = parts[tr.segment];
        ++a.n;
        a.drag_est += e.drag.norm();
        a.drag_true += tr.drag.norm();
        a.touch_est += e.touch.norm();
        a.touch_true += tr.touch.norm();
        a.wind_est += e.wind.norm();
        a.wind_true += tr.wind.norm();
        a.drag_err += (e.drag - tr.drag).norm();
        a.touch_err += (e.touch - tr.touch).norm();
        a.wind_err += (e.wind - tr.wind).norm();
    }
    std::printf("%-8s %6s %22s %22s %22s\n", "segment", "n", "|drag| est/true/err N", "|touch| est/true/err N",
                "|wind| est/true/err m/s");
    for (const auto& [seg, a] : parts) {
        const double n = a.n;
        std::printf("%-8d %6d %8.3f/%6.3f/%6.3f %8.3f/%6.3f/%6.3f %8.3f/%6.3f/%6.3f\n", seg, a.n, a.drag_est / n,
                    a.drag_true / n, a.drag_err / n, a.touch_est / n, a.touch_true / n, a.touch_err / n,
                    a.wind_est / n, a.wind_true / n, a.wind_err / n);
    }
    return 0;
}

int cmd_eval(const std::vector<int>& ids, std::uint64_t seed)
{
    int failed = 0;
    acceptance::run_suite(ids, seed, [&](const acceptance::CriterionResult& r) {
        std::printf("%s\n", acceptance::line(r).c_str());
        std::fflush(stdout);
        failed += !r.passed;
    });
    std::printf("%s: %d criteria failed\n", failed == 0 ? "ACCEPTED" : "REJECTED", failed);
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Wind, drag and interaction-force estimation for multirotors with airflow sensors"};
    app.require_subcommand(1);

    std::string scenario = "hover";
    std::uint64_t seed = 0;
    std::string out;
    auto* sim = app.add_subcommand("sim", "simulate a scenario and write a log directory");
    sim->add_option("--scenario", scenario, "preset name (hover, circle, line_gust, joystick, four_phase, "
                                            "constant_velocity) or scenario file")
        ->required();
    sim->add_option("--seed", seed, "random seed (overrides the scenario file)");
    sim->add_option("-o,--out", out, "output directory");

    std::string log_dir;
    std::string params;
    auto* sysid = app.add_subcommand("sysid", "identify drag and sensor coefficients from a log");
    sysid->add_option("--log", log_dir, "log directory")->required();
    sysid->add_option("--params", params, "base parameter file");
    sysid->add_option("-o,--out", out, "output parameter file");

    std::vector<std::string> logs;
    int epochs = TrainConfig{}.epochs;
    std::uint64_t train_seed = 1;
    std::string loss_out;
    auto* trn = app.add_subcommand("train", "train the airflow network on one or more logs");
    trn->add_option("--log", logs, "log directories (repeatable)")->required();
    trn->add_option("--epochs", epochs, "training epochs")->check(CLI::PositiveNumber);
    trn->add_option("--seed", train_seed, "initialization and shuffling seed");
    trn->add_option("-o,--out", out, "weights file");
    trn->add_option("--loss-out", loss_out, "loss curve file");

    std::string weights;
    std::string source = "model";
    auto* est = app.add_subcommand("estimate", "run the estimator on a log");
    est->add_option("--log", log_dir, "log directory")->required();
    est->add_option("--params", params, "parameter file");
    est->add_option("--weights", weights, "network weights (for --airflow-source lstm)");
    est->add_option("--airflow-source", source, "whisker model or network pseudo-measurement")
        ->check(CLI::IsMember({"model", "lstm"}));
    est->add_option("-o,--out", out, "estimate file");

    std::string estimates;
    auto* rep = app.add_subcommand("replay", "score an estimate file against the log's truth");
    rep->add_option("--log", log_dir, "log directory")->required();
    rep->add_option("--estimates", estimates, "estimate file")->required();

    std::vector<int> ids;
    std::uint64_t eval_seed = 1;
    auto* ev = app.add_subcommand("eval", "run the acceptance suite; nonzero exit if any criterion fails");
    ev->add_option("--criteria", ids, "criterion numbers to run (default: all)")
        ->delimiter(',')
        ->check(CLI::Range(1, acceptance::kCriterionCount));
    ev->add_option("--seed", eval_seed, "seed for the randomized criteria");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            return cmd_sim(scenario, seed, out);
        }
        if (sysid->parsed()) {
            return cmd_sysid(log_dir, params, out);
        }
        if (trn->parsed()) {
            return cmd_train(logs, epochs, train_seed, out, loss_out);
        }
        if (est->parsed()) {
            return cmd_estimate(log_dir, params, weights, source, out);
        }
        if (rep->parsed()) {
            return cmd_replay(log_dir, estimates);
        }
        if (ev->parsed()) {
            return cmd_eval(ids, eval_seed);
        }
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
