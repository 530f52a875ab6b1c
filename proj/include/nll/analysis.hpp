#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "nll/sequential.hpp"

namespace nll {

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ99 = 2.5758293035489004;

// ---------------------------------------------------------------------------
// Wilson score interval.
// ---------------------------------------------------------------------------
struct WilsonInterval {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 1.0;
};

inline WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t n,
                                      double z = kZ95) {
    if (n == 0) return {0.0, 0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {p, std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Inverse standard normal CDF (Acklam's rational approximation, ~1e-9).
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("quantile must lie in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
        const double u = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
               ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    }
    if (p > 1.0 - plow) {
        const double u = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
               ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    }
    const double u = p - 0.5;
    const double t = u * u;
    return (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * u /
           (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
}

// Type-7 (linear interpolation) empirical quantile of a sorted sample.
inline double empirical_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw InputError("quantile of an empty sample");
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

// ---------------------------------------------------------------------------
// Parallel trial execution. Trials are indexed; each owns the substream
// derive_stream_seed(master, index), and results are merged in index order,
// so the outcome is independent of the thread count.
// ---------------------------------------------------------------------------
template <typename PerTrial>
inline void for_each_trial(std::uint64_t trials, int threads, PerTrial&& body) {
    if (threads < 1) threads = 1;
    if (threads == 1 || trials <= 1) {
        for (std::uint64_t i = 0; i < trials; ++i) body(i);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= trials) return;
            body(i);
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(threads, static_cast<int>(trials));
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Monte Carlo estimate of P(a_t = omega) at a set of checkpoints.
// Checkpoints are 1-based step indices; step j is the agent acting at time
// t = j + m0 + k0.
// ---------------------------------------------------------------------------
inline const std::vector<double> kQuantileLevels = {0.1, 0.25, 0.5, 0.75, 0.9};

struct GroupStat {
    std::uint64_t n = 0;
    double estimate = 0.0;  // raw fraction of correct actions (Wilson interval below)
    double ci_lo = 0.0;
    double ci_hi = 1.0;
    // mean of P(a_t = w | observed history): same estimand as `estimate`, with
    // the signal and action randomness integrated out; far lower variance
    double expected_correct = 0.0;
    std::vector<double> x_quantiles;  // aligned with kQuantileLevels
};

struct CheckpointStat {
    std::uint64_t step = 0;  // 1-based step index
    std::uint64_t t = 0;     // agent time of the acting agent, step + m0 + k0
    GroupStat overall;
    GroupStat state0;
    GroupStat state1;
};

struct ExperimentResult {
    std::vector<std::uint64_t> checkpoints;
    std::vector<CheckpointStat> stats;
    std::vector<double> herd_thresholds;
    std::vector<double> herd_above;  // fraction of trials with final x > threshold
    std::vector<double> herd_below;  // fraction with final x < threshold
    std::uint64_t trials = 0;
    double runtime_seconds = 0.0;  // reported in logs, never in serialized results
};

struct TrialSummary {
    int omega = 1;
    std::uint64_t final_m = 1;
    std::uint64_t final_k = 1;
    std::vector<int> actions;       // at checkpoints
    std::vector<std::uint64_t> ms;  // history seen at each checkpoint
    std::vector<std::uint64_t> ks;
};

inline TrialSummary summarize_trial(const AgentProcessConfig& cfg,
                                    const std::vector<std::uint64_t>& checkpoints,
                                    std::uint64_t seed) {
    TrialSummary sum;
    sum.actions.resize(checkpoints.size(), 0);
    sum.ms.resize(checkpoints.size(), 1);
    sum.ks.resize(checkpoints.size(), 1);
    std::size_t next = 0;
    TrialResult r = detail::walk_trial(cfg, seed, [&](std::uint64_t step, const AgentRecord& rec) {
        while (next < checkpoints.size() && step + 1 == checkpoints[next]) {
            sum.actions[next] = rec.action;
            sum.ms[next] = rec.m;
            sum.ks[next] = rec.k;
            ++next;
        }
    });
    sum.omega = r.omega;
    sum.final_m = r.final_state.m;
    sum.final_k = r.final_state.k;
    return sum;
}

inline ExperimentResult estimate_learning(const AgentProcessConfig& cfg, std::uint64_t trials,
                                          std::vector<std::uint64_t> checkpoints,
                                          std::uint64_t master_seed, int threads = 1,
                                          std::vector<double> herd_thresholds = {0.1, 0.5, 0.9},
                                          double z = kZ95) {
    if (trials < 1) throw InputError("need at least one trial");
    std::sort(checkpoints.begin(), checkpoints.end());
    for (std::uint64_t c : checkpoints)
        if (c < 1 || c > cfg.horizon)
            throw InputError("checkpoints must lie in [1, horizon]");

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<TrialSummary> summaries(trials);
    for_each_trial(trials, threads, [&](std::uint64_t i) {
        summaries[i] = summarize_trial(cfg, checkpoints, derive_stream_seed(master_seed, i));
    });

    ExperimentResult out;
    out.checkpoints = checkpoints;
    out.trials = trials;
    out.herd_thresholds = std::move(herd_thresholds);

    auto group_stat = [&](std::size_t ci, int omega_filter) {
        GroupStat g;
        std::uint64_t correct = 0;
        double expected = 0.0;
        std::vector<double> xs;
        const SignalModel& model = cfg.models.at_step(checkpoints[ci] - 1);
        for (const auto& s : summaries) {
            if (omega_filter >= 0 && s.omega != omega_filter) continue;
            ++g.n;
            if (s.actions[ci] == s.omega) ++correct;
            const double prior = form_prior(cfg.prior, s.ms[ci], s.ks[ci]);
            const double p1 = action_one_probability(model, cfg.decision, prior, s.omega);
            expected += s.omega == 1 ? p1 : 1.0 - p1;
            xs.push_back(static_cast<double>(s.ks[ci]) /
                         static_cast<double>(s.ms[ci] + s.ks[ci]));
        }
        const WilsonInterval w = wilson_interval(correct, g.n, z);
        g.estimate = w.estimate;
        g.ci_lo = w.lo;
        g.ci_hi = w.hi;
        if (g.n > 0) g.expected_correct = expected / static_cast<double>(g.n);
        std::sort(xs.begin(), xs.end());
        if (!xs.empty())
            for (double q : kQuantileLevels) g.x_quantiles.push_back(empirical_quantile(xs, q));
        return g;
    };

    for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
        CheckpointStat cs;
        cs.step = checkpoints[ci];
        cs.t = checkpoints[ci] + cfg.init.m + cfg.init.k;
        cs.overall = group_stat(ci, -1);
        cs.state0 = group_stat(ci, 0);
        cs.state1 = group_stat(ci, 1);
        out.stats.push_back(std::move(cs));
    }

    for (double thr : out.herd_thresholds) {
        std::uint64_t above = 0, below = 0;
        for (const auto& s : summaries) {
            const double x = static_cast<double>(s.final_k) /
                             static_cast<double>(s.final_m + s.final_k);
            if (x > thr) ++above;
            if (x < thr) ++below;
        }
        out.herd_above.push_back(static_cast<double>(above) / static_cast<double>(trials));
        out.herd_below.push_back(static_cast<double>(below) / static_cast<double>(trials));
    }

    out.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// n-state counterpart: tracks P(a_t = omega) and the observed proportion of
// the correct action at each checkpoint.
struct NStateCheckpointStat {
    std::uint64_t step = 0;
    double p_correct = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 1.0;
    std::vector<double> proportion_quantiles;  // of the correct action, kQuantileLevels
};

struct NStateExperimentResult {
    std::vector<std::uint64_t> checkpoints;
    std::vector<NStateCheckpointStat> stats;
    std::uint64_t trials = 0;
    double runtime_seconds = 0.0;
};

inline NStateExperimentResult estimate_learning_nstate(
    const NStateModel& model, std::uint64_t horizon, std::uint64_t trials,
    std::vector<std::uint64_t> checkpoints, std::uint64_t master_seed,
    Conditioning conditioning = Conditioning::draw, std::size_t fixed_state = 0,
    int threads = 1, double z = kZ95) {
    if (trials < 1) throw InputError("need at least one trial");
    std::sort(checkpoints.begin(), checkpoints.end());
    for (std::uint64_t c : checkpoints)
        if (c < 1 || c > horizon) throw InputError("checkpoints must lie in [1, horizon]");

    const auto t0 = std::chrono::steady_clock::now();
    struct Summary {
        std::size_t omega = 0;
        std::vector<int> actions;
        std::vector<std::vector<std::uint64_t>> counts;  // snapshot per checkpoint
    };
    std::vector<Summary> summaries(trials);
    for_each_trial(trials, threads, [&](std::uint64_t i) {
        Summary sum;
        sum.actions.resize(checkpoints.size(), 0);
        sum.counts.resize(checkpoints.size());
        std::size_t next = 0;
        NStateTrialResult r = detail::walk_trial_nstate(
            model, horizon, derive_stream_seed(master_seed, i), conditioning, fixed_state,
            [&](std::uint64_t step, const std::vector<std::uint64_t>& counts,
                std::uint64_t, std::size_t, std::size_t action) {
                while (next < checkpoints.size() && step + 1 == checkpoints[next]) {
                    sum.actions[next] = static_cast<int>(action);
                    sum.counts[next] = counts;
                    ++next;
                }
            });
        sum.omega = r.omega;
        summaries[i] = std::move(sum);
    });

    NStateExperimentResult out;
    out.checkpoints = checkpoints;
    out.trials = trials;
    for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
        NStateCheckpointStat cs;
        cs.step = checkpoints[ci];
        std::uint64_t correct = 0;
        std::vector<double> props;
        props.reserve(trials);
        for (const auto& s : summaries) {
            if (s.actions[ci] == static_cast<int>(s.omega)) ++correct;
            std::uint64_t total = 0;
            for (std::uint64_t c : s.counts[ci]) total += c;
            props.push_back(static_cast<double>(s.counts[ci][s.omega]) /
                            static_cast<double>(total));
        }
        const WilsonInterval w = wilson_interval(correct, trials, z);
        cs.p_correct = w.estimate;
        cs.ci_lo = w.lo;
        cs.ci_hi = w.hi;
        std::sort(props.begin(), props.end());
        for (double q : kQuantileLevels)
            cs.proportion_quantiles.push_back(empirical_quantile(props, q));
        out.stats.push_back(std::move(cs));
    }
    out.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// ---------------------------------------------------------------------------
// Biased simple random walk on the integers, step +1 with probability p.
// ---------------------------------------------------------------------------
struct WalkSpec {
    double p = 0.5;
    std::uint64_t z = 1;

    WalkSpec(double p_, std::uint64_t z_) : p(p_), z(z_) {
        if (!(p > 0.0 && p < 1.0)) throw InputError("walk bias must lie in (0,1)");
        if (z < 1) throw InputError("walk must start at z >= 1");
    }
};

// Probability of diverging before hitting 0: 1 - ((1-p)/p)^z for p > 1/2,
// else 0. Evaluated as (p^z - (1-p)^z) / p^z, which is exact for the
// dyadic-rational biases used in the reference checks.
inline double gamblers_ruin_escape(const WalkSpec& spec) {
    if (spec.p <= 0.5) return 0.0;
    const double zf = static_cast<double>(spec.z);
    const double pz = std::pow(spec.p, zf);
    const double qz = std::pow(1.0 - spec.p, zf);
    if (pz > 0.0) return (pz - qz) / pz;
    return 1.0 - std::pow((1.0 - spec.p) / spec.p, zf);
}

struct WalkSimulation {
    double escape_frequency = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t cap = 1000;
    // probability a walk at the cap would still hit 0; bounds the truncation error
    double truncation_bound = 0.0;
};

inline WalkSimulation simulate_walk(const WalkSpec& spec, std::uint64_t trials,
                                    std::uint64_t seed, std::uint64_t cap = 1000) {
    if (trials < 1) throw InputError("need at least one trial");
    if (cap <= spec.z) throw InputError("cap must exceed the starting point");
    std::uint64_t escapes = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
        RandomStream rng(derive_stream_seed(seed, i));
        std::uint64_t z = spec.z;
        while (z > 0 && z < cap) {
            if (rng.uniform() < spec.p)
                ++z;
            else
                --z;
        }
        if (z >= cap) ++escapes;
    }
    WalkSimulation out;
    out.trials = trials;
    out.cap = cap;
    out.escape_frequency = static_cast<double>(escapes) / static_cast<double>(trials);
    out.truncation_bound =
        spec.p > 0.5 ? std::pow((1.0 - spec.p) / spec.p, static_cast<double>(cap)) : 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Exact terminal distribution of a short urn run: forward recursion over the
// number of one-balls added. Index i of the result is the probability of
// ending at (m0 + steps - i, k0 + i).
// ---------------------------------------------------------------------------
inline constexpr int kEnumerationMaxSteps = 20;

inline std::vector<double> enumerate_exact(const UrnFunction& f, UrnState init, int steps) {
    if (steps < 1) throw InputError("need at least one step");
    if (steps > kEnumerationMaxSteps)
        throw EnumerationLimitError("exact enumeration supports at most " +
                                    std::to_string(kEnumerationMaxSteps) + " steps");
    std::vector<double> prob{1.0};
    for (int step = 0; step < steps; ++step) {
        std::vector<double> next(prob.size() + 1, 0.0);
        for (std::size_t i = 0; i < prob.size(); ++i) {
            if (prob[i] == 0.0) continue;
            const UrnState s{init.m + static_cast<std::uint64_t>(step) - i,
                             init.k + i};
            const double p1 = f(s.x());
            next[i] += prob[i] * (1.0 - p1);
            next[i + 1] += prob[i] * p1;
        }
        prob = std::move(next);
    }
    return prob;
}

// ---------------------------------------------------------------------------
// Pilot calibration floors. Acceptance thresholds derived from pilot runs
// live in a calibration file with provenance; these helpers turn pilot
// measurements into floors a fresh run should clear at the stated quantile.
// ---------------------------------------------------------------------------

// Floor a fresh n_fresh-trial fraction estimate should clear: the pilot
// estimate minus a two-sample normal allowance at the stated quantile, never
// less than 20% of the estimate itself.
inline double calibrate_fraction_floor(std::uint64_t hits, std::uint64_t n_pilot,
                                       std::uint64_t n_fresh, double quantile) {
    if (n_pilot == 0 || n_fresh == 0) throw InputError("empty pilot");
    const double p = static_cast<double>(hits) / static_cast<double>(n_pilot);
    if (p <= 0.0) return 0.0;
    const double allowance =
        -inverse_normal_cdf(quantile) *
        std::sqrt(p * (1.0 - p) *
                  (1.0 / static_cast<double>(n_pilot) + 1.0 / static_cast<double>(n_fresh)));
    return std::max(p - allowance, 0.2 * p);
}

// Floor for a fresh sample median: a low quantile of the pilot sample.
inline double calibrate_median_floor(std::vector<double> values, double quantile) {
    std::sort(values.begin(), values.end());
    return empirical_quantile(values, quantile);
}

struct CalibrationEntry {
    std::string metric;
    std::string config_hash;
    std::uint64_t seed = 0;
    double value = 0.0;
    std::uint64_t trials = 0;
    double estimate = 0.0;  // raw pilot measurement behind the floor
    double quantile = 0.0;
};

// Pilot runs draw their seeds from a reserved namespace so acceptance runs
// under the user seed never reuse a pilot stream.
inline std::uint64_t pilot_master_seed(std::uint64_t seed) {
    return splitmix64(seed ^ 0x70696C6F745F6E73ULL);
}

}  // namespace nll
