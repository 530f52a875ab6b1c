#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nll/analysis.hpp"

namespace nll {

// Shortest round-trip decimal form; keeps CSV output byte-stable and exact.
inline std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw Error("write failed: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// CSV emission. All files carry a header row; columns are fixed per format.
// ---------------------------------------------------------------------------

inline std::string urn_trajectory_csv(const UrnTrajectory& traj) {
    std::string out = "t,m,k,x,increment\n";
    for (const auto& row : traj) {
        out += std::to_string(row.t) + ',' + std::to_string(row.m) + ',' +
               std::to_string(row.k) + ',' + fmt(row.x) + ',' + std::to_string(row.increment) +
               '\n';
    }
    return out;
}

inline const char* kTrialTrajectoryHeader = "run_id,trial,t,model_index,prior,action,m,k,x\n";

inline void append_trial_trajectory_csv(std::string& out, const std::string& run_id,
                                        std::uint64_t trial,
                                        const std::vector<AgentRecord>& records) {
    for (const auto& r : records) {
        out += run_id + ',' + std::to_string(trial) + ',' + std::to_string(r.t) + ',' +
               std::to_string(r.model_index) + ',' + fmt(r.prior) + ',' +
               std::to_string(r.action) + ',' + std::to_string(r.m) + ',' +
               std::to_string(r.k) + ',' + fmt(r.x) + '\n';
    }
}

// n-state trajectories reuse the binary schema when n == 2 (counts map to
// (m,k), the prior is the proportion of 1-actions); larger n gets one count
// column per action.
inline void append_nstate_trajectory_csv(std::string& out, const std::string& run_id,
                                         std::uint64_t trial,
                                         const std::vector<NStateRecord>& records) {
    for (const auto& r : records) {
        const std::uint64_t total = r.t - 1;
        if (r.counts.size() == 2) {
            const double prior =
                static_cast<double>(r.counts[1]) / static_cast<double>(total);
            const double x = prior;
            out += run_id + ',' + std::to_string(trial) + ',' + std::to_string(r.t) + ",0," +
                   fmt(prior) + ',' + std::to_string(r.action) + ',' +
                   std::to_string(r.counts[0]) + ',' + std::to_string(r.counts[1]) + ',' +
                   fmt(x) + '\n';
        } else {
            out += run_id + ',' + std::to_string(trial) + ',' + std::to_string(r.t) + ',' +
                   std::to_string(r.action);
            for (std::uint64_t c : r.counts) out += ',' + std::to_string(c);
            out += '\n';
        }
    }
}

inline std::string nstate_trajectory_header(std::size_t n) {
    if (n == 2) return kTrialTrajectoryHeader;
    std::string h = "run_id,trial,t,action";
    for (std::size_t i = 0; i < n; ++i) h += ",c" + std::to_string(i);
    return h + "\n";
}

inline std::string experiment_result_csv(const std::string& run_id, const ExperimentResult& r) {
    std::string out = "run_id,step,group,n,p_correct,ci_lo,ci_hi,expected_correct";
    for (double q : kQuantileLevels)
        out += ",x_q" + std::to_string(static_cast<int>(q * 100 + 0.5));
    out += '\n';
    auto row = [&](std::uint64_t step, const char* group, const GroupStat& g) {
        out += run_id + ',' + std::to_string(step) + ',' + group + ',' + std::to_string(g.n) +
               ',' + fmt(g.estimate) + ',' + fmt(g.ci_lo) + ',' + fmt(g.ci_hi) + ',' +
               fmt(g.expected_correct);
        for (std::size_t i = 0; i < kQuantileLevels.size(); ++i)
            out += ',' + (i < g.x_quantiles.size() ? fmt(g.x_quantiles[i]) : std::string());
        out += '\n';
    };
    for (const auto& s : r.stats) {
        row(s.step, "all", s.overall);
        row(s.step, "state0", s.state0);
        row(s.step, "state1", s.state1);
    }
    return out;
}

inline std::string nstate_result_csv(const std::string& run_id,
                                     const NStateExperimentResult& r) {
    std::string out = "run_id,step,group,n,p_correct,ci_lo,ci_hi";
    for (double q : kQuantileLevels)
        out += ",x_q" + std::to_string(static_cast<int>(q * 100 + 0.5));
    out += '\n';
    for (const auto& s : r.stats) {
        out += run_id + ',' + std::to_string(s.step) + ",all," + std::to_string(r.trials) +
               ',' + fmt(s.p_correct) + ',' + fmt(s.ci_lo) + ',' + fmt(s.ci_hi);
        for (double q : s.proportion_quantiles) out += ',' + fmt(q);
        out += '\n';
    }
    return out;
}

inline std::string urn_table_csv(const UrnFunction& f, int grid_size) {
    std::string out = "x,f\n";
    for (int i = 0; i <= grid_size + 1; ++i) {
        const double x = static_cast<double>(i) / (grid_size + 1);
        out += fmt(x) + ',' + fmt(f(x)) + '\n';
    }
    return out;
}

}  // namespace nll
