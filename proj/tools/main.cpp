#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "nll/cli.hpp"

namespace {

std::string self_path(const char* argv0) {
    std::error_code ec;
    const auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
    if (!ec) return p.string();
    return argv0 ? argv0 : "";
}

int default_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

void add_common(CLI::App* cmd, nll::cli::CommonArgs& args) {
    cmd->add_option("--seed", args.seed, "master seed")->envname("NLL_SEED");
    cmd->add_option("--threads", args.threads, "worker pool size")->envname("NLL_THREADS");
    cmd->add_option("--out", args.out_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation engine for boundedly rational sequential observational learning"};
    app.require_subcommand(1);

    nll::cli::SimulateArgs sim;
    sim.threads = default_threads();
    CLI::App* simulate = app.add_subcommand("simulate", "run a configured experiment");
    add_common(simulate, sim);
    simulate->add_option("--config", sim.config_path, "JSON config file")->required();
    simulate->add_option("--trials", sim.trials_override, "override the config trial count");
    simulate->add_option("--state", sim.state_override, "condition on a state: 0, 1 or draw");

    nll::cli::UrnArgs urn;
    urn.threads = default_threads();
    CLI::App* urn_cmd = app.add_subcommand("urn", "urn-function table, drift scan, fixed points");
    add_common(urn_cmd, urn);
    urn_cmd->add_option("--config", urn.config_path, "JSON config file")->required();
    urn_cmd->add_option("--state", urn.state, "conditioning state, 0 or 1");
    urn_cmd->add_option("--grid", urn.grid, "interior grid size for scans");

    nll::cli::VerifyArgs ver;
    ver.threads = default_threads();
    CLI::App* verify_cmd = app.add_subcommand("verify", "run an acceptance suite");
    add_common(verify_cmd, ver);
    verify_cmd->add_option("--suite", ver.suite,
                           "exact | urn | theorem1 | theorem2 | theorem3 | nstate | all");
    verify_cmd->add_option("--calibration", ver.calibration_path, "calibration file");

    nll::cli::SweepArgs sweep;
    sweep.threads = default_threads();
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a parameter grid of experiments");
    add_common(sweep_cmd, sweep);
    sweep_cmd->add_option("--config", sweep.config_path, "JSON sweep config")->required();

    nll::cli::CalibrateArgs cal;
    cal.threads = default_threads();
    CLI::App* cal_cmd = app.add_subcommand("calibrate", "run pilots and write acceptance floors");
    add_common(cal_cmd, cal);
    cal_cmd->add_option("--out-file", cal.out_path, "calibration file to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : nll::cli::kExitConfig;
    }

    try {
        if (*simulate) return nll::cli::cmd_simulate(sim);
        if (*urn_cmd) return nll::cli::cmd_urn(urn);
        if (*verify_cmd) {
            ver.self_path = self_path(argv[0]);
            return nll::cli::cmd_verify(ver);
        }
        if (*sweep_cmd) return nll::cli::cmd_sweep(sweep);
        if (*cal_cmd) return nll::cli::cmd_calibrate(cal);
    } catch (const nll::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return nll::cli::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return nll::cli::kExitRuntime;
    }
    return nll::cli::kExitConfig;
}
