// Acceptance gate: runs every criterion and prints one PASS/FAIL line each.
// Exit code 0 iff all criteria pass.

#include <cstring>
#include <iostream>
#include <string>

#include "nll/cli.hpp"

int main(int argc, char** argv) {
    nll::verify::VerifyContext ctx;
    ctx.threads = 1;
    std::string calibration_path = "calibration/acceptance.json";
    for (int i = 1; i + 1 < argc; i += 2) {
        if (std::strcmp(argv[i], "--bin") == 0) ctx.cli_binary = argv[i + 1];
        else if (std::strcmp(argv[i], "--calibration") == 0) calibration_path = argv[i + 1];
        else if (std::strcmp(argv[i], "--scratch") == 0) ctx.scratch_dir = argv[i + 1];
        else if (std::strcmp(argv[i], "--seed") == 0) ctx.seed = std::stoull(argv[i + 1]);
        else if (std::strcmp(argv[i], "--threads") == 0) ctx.threads = std::stoi(argv[i + 1]);
        else {
            std::cerr << "unknown option " << argv[i] << "\n";
            return 2;
        }
    }

    try {
        ctx.calibration = nll::cli::load_calibration(calibration_path);
    } catch (const std::exception& e) {
        std::cerr << "cannot load calibration: " << e.what() << "\n";
    }

    const auto results = nll::verify::run_suite("all", ctx, std::cout);
    int failures = 0;
    for (const auto& r : results)
        if (!r.passed) ++failures;
    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all " << results.size() << " criteria passed\n";
    return 0;
}
