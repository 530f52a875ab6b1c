#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "nll/verify.hpp"

namespace nll {
namespace cli {

namespace fs = std::filesystem;

// Exit codes: 0 success, 2 invalid config or arguments, 3 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct CommonArgs {
    std::uint64_t seed = 42;
    int threads = 1;
    std::string out_dir = "out";
};

inline json load_json_file(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("cannot parse ") + path + ": " + e.what());
    }
    return j;
}

inline void write_timing_log(const fs::path& dir, double seconds) {
    // wall time lives outside the deterministic outputs
    write_file(dir / "timing.log", "wall_time_seconds " + fmt(seconds) + "\n");
    std::cerr << "wall time: " << fmt(seconds) << " s\n";
}

inline json make_manifest(const std::string& subcommand, const std::string& config_path,
                          const json& echo, std::uint64_t seed,
                          const std::vector<std::string>& outputs, const json& overrides) {
    json m{{"subcommand", subcommand},
           {"config_path", config_path},
           {"config_hash", canonical_config_hash(echo)},
           {"config", echo},
           {"master_seed", seed},
           {"mixing_function", kStreamMixingFunction},
           {"outputs", outputs},
           {"code_version", kVersion}};
    if (!overrides.empty()) m["overrides"] = overrides;
    return m;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------
struct SimulateArgs : CommonArgs {
    std::string config_path;
    std::uint64_t trials_override = 0;  // 0 = use the config value
    std::string state_override;         // "", "draw", "0", "1", ...
};

inline int cmd_simulate(const SimulateArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    SimulateConfig cfg;
    try {
        cfg = parse_simulate_config(load_json_file(args.config_path));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }

    json overrides = json::object();
    if (args.trials_override > 0) {
        cfg.trials = args.trials_override;
        overrides["trials"] = args.trials_override;
    }
    if (!args.state_override.empty()) {
        const std::string s =
            args.state_override == "draw" ? "draw" : "state" + args.state_override;
        try {
            cfg.conditioning = parse_conditioning(s, &cfg.nstate_fixed_state);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("--state: ") + e.what());
        }
        if (cfg.binary) {
            if (cfg.conditioning != Conditioning::draw && cfg.nstate_fixed_state > 1)
                throw ConfigError("binary runs condition on state 0 or 1");
            cfg.binary->conditioning = cfg.conditioning;
        }
        if (cfg.nstate && cfg.nstate_fixed_state >= cfg.nstate->n())
            throw ConfigError("conditioning state out of range");
        overrides["state"] = args.state_override;
    }

    const std::string run_id = canonical_config_hash(cfg.echo) + "-s" + std::to_string(args.seed);
    const fs::path out(args.out_dir);
    fs::create_directories(out);

    std::string result_json;
    std::string result_csv;
    std::string traj_csv;

    if (cfg.binary) {
        const ExperimentResult r =
            estimate_learning(*cfg.binary, cfg.trials, cfg.checkpoints, args.seed, args.threads,
                              cfg.herd_thresholds);
        result_json = experiment_result_to_json(r).dump(2) + "\n";
        result_csv = experiment_result_csv(run_id, r);
        if (cfg.trajectory_sample > 0) {
            traj_csv = kTrialTrajectoryHeader;
            const std::uint64_t n = std::min<std::uint64_t>(cfg.trajectory_sample, cfg.trials);
            for (std::uint64_t i = 0; i < n; ++i) {
                const TrialResult tr =
                    run_trial(*cfg.binary, derive_stream_seed(args.seed, i));
                append_trial_trajectory_csv(traj_csv, run_id, i, tr.records);
            }
        }
    } else {
        const NStateExperimentResult r = estimate_learning_nstate(
            *cfg.nstate, cfg.horizon, cfg.trials, cfg.checkpoints, args.seed, cfg.conditioning,
            cfg.nstate_fixed_state, args.threads);
        result_json = nstate_result_to_json(r).dump(2) + "\n";
        result_csv = nstate_result_csv(run_id, r);
        if (cfg.trajectory_sample > 0) {
            traj_csv = nstate_trajectory_header(cfg.nstate->n());
            const std::uint64_t n = std::min<std::uint64_t>(cfg.trajectory_sample, cfg.trials);
            for (std::uint64_t i = 0; i < n; ++i) {
                const NStateTrialResult tr =
                    run_trial_nstate(*cfg.nstate, cfg.horizon, derive_stream_seed(args.seed, i),
                                     cfg.conditioning, cfg.nstate_fixed_state);
                append_nstate_trajectory_csv(traj_csv, run_id, i, tr.records);
            }
        }
    }

    std::vector<std::string> outputs = {"result.json", "result.csv"};
    write_file(out / "result.json", result_json);
    write_file(out / "result.csv", result_csv);
    if (!traj_csv.empty()) {
        write_file(out / "trajectories.csv", traj_csv);
        outputs.push_back("trajectories.csv");
    }
    outputs.push_back("manifest.json");
    write_file(out / "manifest.json",
               make_manifest("simulate", args.config_path, cfg.echo, args.seed, outputs,
                             overrides)
                       .dump(2) +
                   "\n");
    write_timing_log(out,
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// urn
// ---------------------------------------------------------------------------
struct UrnArgs : CommonArgs {
    std::string config_path;
    int state = 1;
    int grid = 99;
};

inline int cmd_urn(const UrnArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    const json j = load_json_file(args.config_path);
    UrnConfig cfg;
    try {
        cfg = parse_urn_config(j);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (args.state != 0 && args.state != 1) throw ConfigError("--state must be 0 or 1");
    if (args.grid < 3) throw ConfigError("--grid must be at least 3");

    UrnFunction f = UrnFunction::identity();
    if (cfg.override_function) {
        f = *cfg.override_function;
    } else {
        try {
            f = build_urn_function(*cfg.model, *cfg.prior, *cfg.decision, args.state);
        } catch (const NotSizeInvariantError& e) {
            throw ConfigError(e.what());
        }
    }

    const DriftScan drift = drift_sign_scan(f, args.grid);
    const FixedPointReport report = find_fixed_points(f);

    json report_json = fixed_point_report_to_json(report);
    report_json["drift"] = json{{"classification", DriftScan::name(drift.classification)},
                                {"min_margin", drift.min_abs_margin},
                                {"argmin_x", drift.argmin_x}};

    const fs::path out(args.out_dir);
    write_file(out / "urn_table.csv", urn_table_csv(f, args.grid));
    write_file(out / "fixed_points.json", report_json.dump(2) + "\n");
    write_file(out / "manifest.json",
               make_manifest("urn", args.config_path, cfg.echo, args.seed,
                             {"urn_table.csv", "fixed_points.json", "manifest.json"},
                             json{{"state", args.state}, {"grid", args.grid}})
                       .dump(2) +
                   "\n");
    write_timing_log(out,
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    std::cout << "drift: " << DriftScan::name(drift.classification) << ", "
              << report.crossings.size() << " crossing(s)"
              << (report.degenerate_identity ? " [degenerate-identity]" : "") << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------
struct VerifyArgs : CommonArgs {
    std::string suite = "all";
    std::string calibration_path = "calibration/acceptance.json";
    std::string self_path;  // path to this binary, for the reproducibility check
};

inline std::map<std::string, CalibrationEntry> load_calibration(const std::string& path) {
    std::map<std::string, CalibrationEntry> entries;
    if (!fs::exists(path)) return entries;
    const json j = load_json_file(path);
    if (!j.is_array()) throw ConfigError("calibration file must be a JSON array");
    for (const json& e : j) {
        CalibrationEntry entry = calibration_entry_from_json(e);
        entries[entry.metric] = std::move(entry);
    }
    return entries;
}

inline int cmd_verify(const VerifyArgs& args) {
    const auto& suites = verify::suite_map();
    if (suites.find(args.suite) == suites.end()) {
        std::cerr << "unknown suite \"" << args.suite << "\"; available:";
        for (const auto& [name, _] : suites) std::cerr << " " << name;
        std::cerr << "\n";
        return kExitConfig;
    }
    verify::VerifyContext ctx;
    ctx.seed = args.seed;
    ctx.threads = args.threads;
    ctx.calibration = load_calibration(args.calibration_path);
    ctx.cli_binary = args.self_path;
    ctx.scratch_dir = (fs::path(args.out_dir) / "verify_scratch").string();

    const auto results = verify::run_suite(args.suite, ctx, std::cout);
    for (const auto& r : results)
        if (!r.passed) return kExitRuntime;
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------
struct SweepArgs : CommonArgs {
    std::string config_path;
};

inline int cmd_sweep(const SweepArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    const json j = load_json_file(args.config_path);
    SweepConfig sweep;
    try {
        sweep = parse_sweep_config(j);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }

    const fs::path out(args.out_dir);
    fs::create_directories(out);

    std::string index_csv = "cell,epsilon,prior,decision,final_p_correct,path\n";
    std::vector<std::string> outputs = {"index.csv", "manifest.json"};

    const std::size_t ne = sweep.epsilon_axis.empty() ? 1 : sweep.epsilon_axis.size();
    const std::size_t np = sweep.prior_axis.empty() ? 1 : sweep.prior_axis.size();
    const std::size_t nd = sweep.decision_axis.empty() ? 1 : sweep.decision_axis.size();
    std::size_t cell_index = 0;
    for (std::size_t ei = 0; ei < ne; ++ei) {
        for (std::size_t pi = 0; pi < np; ++pi) {
            for (std::size_t di = 0; di < nd; ++di, ++cell_index) {
                const json cell_json = sweep_cell_json(sweep, ei, pi, di);
                SimulateConfig cell;
                try {
                    cell = parse_simulate_config(cell_json);
                } catch (const std::exception& e) {
                    throw ConfigError("cell " + std::to_string(cell_index) + ": " + e.what());
                }
                if (!cell.binary)
                    throw ConfigError("sweeps support binary-model cells only");

                // each cell owns a seed derived from its index, so results do
                // not depend on sweep ordering
                const std::uint64_t cell_seed = derive_stream_seed(args.seed, cell_index);
                const ExperimentResult r =
                    estimate_learning(*cell.binary, cell.trials, cell.checkpoints, cell_seed,
                                      args.threads, cell.herd_thresholds);

                const std::string cell_dir = "cells/cell_" + std::to_string(cell_index);
                const std::string run_id =
                    canonical_config_hash(cell_json) + "-s" + std::to_string(cell_seed);
                write_file(out / cell_dir / "result.json",
                           experiment_result_to_json(r).dump(2) + "\n");
                write_file(out / cell_dir / "result.csv", experiment_result_csv(run_id, r));
                outputs.push_back(cell_dir + "/result.json");
                outputs.push_back(cell_dir + "/result.csv");

                index_csv += std::to_string(cell_index) + ',' +
                             (sweep.epsilon_axis.empty() ? "" : fmt(sweep.epsilon_axis[ei])) +
                             ',' +
                             (sweep.prior_axis.empty() ? "degroot"
                                                       : prior_rule_name(cell.binary->prior)) +
                             ',' + decision_rule_name(cell.binary->decision) + ',' +
                             fmt(r.stats.back().overall.estimate) + ',' + cell_dir + '\n';
            }
        }
    }

    write_file(out / "index.csv", index_csv);
    write_file(out / "manifest.json",
               make_manifest("sweep", args.config_path, sweep.echo, args.seed, outputs,
                             json::object())
                       .dump(2) +
                   "\n");
    write_timing_log(out,
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// calibrate: run the pilot experiments and persist the acceptance floors.
// Pilot seeds live in a reserved namespace derived from the master seed, so
// verification runs never replay pilot randomness.
// ---------------------------------------------------------------------------
struct CalibrateArgs : CommonArgs {
    std::string out_path = "calibration/acceptance.json";
};

inline int cmd_calibrate(const CalibrateArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t pilot_seed = pilot_master_seed(args.seed);
    std::vector<CalibrationEntry> entries;

    {  // final P(a_t = w) for matching + proportion prior, eps = 0.2
        const json echo = {{"metric", "theorem1_final_p_correct"},
                           {"epsilon", 0.2},
                           {"horizon", 100000},
                           {"pilot_trials", 4000},
                           {"fresh_trials", 1000}};
        AgentProcessConfig cfg(ModelSequence(BinarySymmetricModel(0.2).to_model()),
                               PriorRule::degroot(), DecisionRule::probability_matching(),
                               100000);
        const ExperimentResult r =
            estimate_learning(cfg, 4000, {100000}, pilot_seed, args.threads);
        const double est = r.stats.back().overall.estimate;
        const std::uint64_t hits = static_cast<std::uint64_t>(est * 4000.0 + 0.5);
        CalibrationEntry e;
        e.metric = "theorem1_final_p_correct";
        e.config_hash = canonical_config_hash(echo);
        e.seed = pilot_seed;
        e.trials = 4000;
        e.estimate = est;
        e.quantile = 0.001;
        e.value = calibrate_fraction_floor(hits, 4000, 1000, e.quantile);
        entries.push_back(e);
        std::cerr << "theorem1_final_p_correct: estimate " << fmt(est) << ", floor "
                  << fmt(e.value) << "\n";
    }

    {  // wrong-herd fraction under the count-difference prior, state 0
        const json echo = {{"metric", "theorem3_wrong_herd"},
                           {"epsilon", 0.2},
                           {"horizon", 10000},
                           {"pilot_trials", 8000},
                           {"fresh_trials", 2000}};
        const SignalModel model = BinarySymmetricModel(0.2).to_model();
        const auto [q, r] = quasibayes_params(model);
        AgentProcessConfig cfg(ModelSequence(model), PriorRule::quasibayes(q, r),
                               DecisionRule::probability_matching(), 10000,
                               Conditioning::state0);
        const std::uint64_t trials = 8000;
        std::vector<TrialSummary> sums(trials);
        for_each_trial(trials, args.threads, [&](std::uint64_t i) {
            sums[i] = summarize_trial(cfg, {}, derive_stream_seed(pilot_seed, i));
        });
        std::uint64_t wrong = 0;
        for (const auto& s : sums)
            if (quasibayes_prior(q, r, s.final_m, s.final_k) > 0.99) ++wrong;
        CalibrationEntry e;
        e.metric = "theorem3_wrong_herd";
        e.config_hash = canonical_config_hash(echo);
        e.seed = pilot_seed;
        e.trials = trials;
        e.estimate = static_cast<double>(wrong) / static_cast<double>(trials);
        e.quantile = 0.001;
        e.value = calibrate_fraction_floor(wrong, trials, 2000, e.quantile);
        entries.push_back(e);
        std::cerr << "theorem3_wrong_herd: estimate " << fmt(e.estimate) << ", floor "
                  << fmt(e.value) << "\n";
    }

    {  // final P(a_t = w) for the alternating heterogeneous sequence
        const json echo = {{"metric", "theorem2_final_p_correct"},
                           {"epsilons", {0.1, 0.3}},
                           {"min_variance", 0.01},
                           {"horizon", 100000},
                           {"pilot_trials", 4000},
                           {"fresh_trials", 1000}};
        AgentProcessConfig cfg(
            ModelSequence({BinarySymmetricModel(0.1).to_model(),
                           BinarySymmetricModel(0.3).to_model()},
                          0.01),
            PriorRule::degroot(), DecisionRule::probability_matching(), 100000);
        const ExperimentResult r =
            estimate_learning(cfg, 4000, {100000}, pilot_seed, args.threads);
        const double est = r.stats.back().overall.estimate;
        const std::uint64_t hits = static_cast<std::uint64_t>(est * 4000.0 + 0.5);
        CalibrationEntry e;
        e.metric = "theorem2_final_p_correct";
        e.config_hash = canonical_config_hash(echo);
        e.seed = pilot_seed;
        e.trials = 4000;
        e.estimate = est;
        e.quantile = 0.001;
        e.value = calibrate_fraction_floor(hits, 4000, 1000, e.quantile);
        entries.push_back(e);
        std::cerr << "theorem2_final_p_correct: estimate " << fmt(est) << ", floor "
                  << fmt(e.value) << "\n";
    }

    {  // median final correct-action proportion, three separated states
        const json echo = {{"metric", "nstate_median_final"},
                           {"n", 3},
                           {"horizon", 100000},
                           {"pilot_trials", 800},
                           {"fresh_trials", 200}};
        const NStateModel three({1.0 / 3, 1.0 / 3, 1.0 / 3}, {"s0", "s1", "s2"},
                                {{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}});
        std::vector<double> props(800, 0.0);
        for_each_trial(800, args.threads, [&](std::uint64_t i) {
            const NStateTrialResult tr = run_trial_nstate(
                three, 100000, derive_stream_seed(pilot_seed, i), Conditioning::state1, 1,
                /*record=*/false);
            std::uint64_t total = 0;
            for (std::uint64_t c : tr.final_counts) total += c;
            props[i] = static_cast<double>(tr.final_counts[1]) / static_cast<double>(total);
        });
        std::vector<double> sorted = props;
        std::sort(sorted.begin(), sorted.end());
        CalibrationEntry e;
        e.metric = "nstate_median_final";
        e.config_hash = canonical_config_hash(echo);
        e.seed = pilot_seed;
        e.trials = 800;
        e.estimate = empirical_quantile(sorted, 0.5);
        e.quantile = 0.25;
        e.value = calibrate_median_floor(props, e.quantile);
        entries.push_back(e);
        std::cerr << "nstate_median_final: median " << fmt(e.estimate) << ", floor "
                  << fmt(e.value) << "\n";
    }

    json out = json::array();
    for (const auto& e : entries) out.push_back(calibration_entry_to_json(e));
    write_file(args.out_path, out.dump(2) + "\n");
    std::cerr << "calibration written to " << args.out_path << " ("
              << fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count())
              << " s)\n";
    return kExitOk;
}

}  // namespace cli
}  // namespace nll
