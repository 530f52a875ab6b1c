#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "nll/config.hpp"
#include "nll/io.hpp"

namespace nll {
namespace verify {

// ---------------------------------------------------------------------------
// The acceptance checks. Each one pins its tolerances and thresholds in
// code; the only values read from outside are the pilot-calibrated floors,
// which carry provenance in the calibration file.
// ---------------------------------------------------------------------------

struct VerifyContext {
    std::uint64_t seed = 42;
    int threads = 1;
    std::map<std::string, CalibrationEntry> calibration;
    std::string cli_binary;       // path to the nll executable, for the reproducibility check
    std::string scratch_dir = "verify_scratch";
};

struct CheckResult {
    std::string id;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail_v {

// Deterministic random informative structures with full support.
inline SignalModel random_model(RandomStream& rng, std::size_t min_signals = 2,
                                std::size_t max_signals = 6) {
    for (;;) {
        const std::size_t n =
            min_signals +
            static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_signals - min_signals + 1));
        std::vector<std::string> names;
        std::vector<double> f0(n), f1(n);
        double s0 = 0.0, s1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            names.push_back("s" + std::to_string(i));
            f0[i] = 0.05 + rng.uniform();
            f1[i] = 0.05 + rng.uniform();
            s0 += f0[i];
            s1 += f1[i];
        }
        double max_gap = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            f0[i] /= s0;
            f1[i] /= s1;
            max_gap = std::max(max_gap, std::fabs(f0[i] - f1[i]));
        }
        if (max_gap < 0.05) continue;  // keep the structures clearly informative
        const double mu = 0.1 + 0.8 * rng.uniform();
        return SignalModel(mu, std::move(names), std::move(f0), std::move(f1));
    }
}

inline bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

inline std::string missing_calibration(const std::string& metric) {
    return "calibration entry \"" + metric + "\" missing; run `nll calibrate` first";
}

}  // namespace detail_v

// --- C1: exact algebra -----------------------------------------------------
inline CheckResult check_exact_algebra(const VerifyContext& ctx) {
    CheckResult res{"C1", "exact-algebra", true, ""};
    const double tol = 1e-12;
    RandomStream rng(derive_stream_seed(ctx.seed, 0x11));

    // Posterior identities on a random grid.
    for (int i = 0; i < 200 && res.passed; ++i) {
        const double p = 0.01 + 0.98 * rng.uniform();
        const double b = 0.01 + 0.98 * rng.uniform();
        if (!detail_v::close(bayes_posterior(p, 0.5), p, tol))
            res = {res.id, res.name, false, "uniform prior identity failed"};
        if (!detail_v::close(bayes_posterior(p, 1.0 - p), 0.5, tol))
            res = {res.id, res.name, false, "odds cancellation failed"};
        const double post = bayes_posterior(p, b);
        const double odds = (post / (1.0 - post));
        const double expect = (p / (1.0 - p)) * (b / (1.0 - b));
        if (std::fabs(odds - expect) > tol * expect)
            res = {res.id, res.name, false, "odds composition failed"};
    }

    // Quasi-Bayes closed form vs log-odds form.
    for (int i = 0; i < 1000 && res.passed; ++i) {
        const double q = 0.5 + 0.49 * rng.uniform();
        const double r = 0.01 + 0.48 * rng.uniform();
        const std::uint64_t k = static_cast<std::uint64_t>(rng.uniform() * 41);
        const std::uint64_t m = static_cast<std::uint64_t>(rng.uniform() * 41);
        const double num = std::pow(q, static_cast<double>(k)) * std::pow(r, static_cast<double>(m));
        const double den = num + std::pow(1.0 - q, static_cast<double>(k)) *
                                     std::pow(1.0 - r, static_cast<double>(m));
        const double closed = num / den;
        if (!detail_v::close(quasibayes_prior(q, r, m, k), closed, tol))
            res = {res.id, res.name, false,
                   "closed-form vs log-odds disagreement at q=" + fmt(q) + " r=" + fmt(r)};
    }

    // Martingale, Radon-Nikodym reweighting, FOSD over random structures.
    for (int i = 0; i < 100 && res.passed; ++i) {
        const SignalModel model = detail_v::random_model(rng);
        const double mu = 0.05 + 0.9 * rng.uniform();
        const BeliefDistribution g = belief_distribution(model, mu);
        if (!detail_v::close(g.mean, mu, tol))
            res = {res.id, res.name, false, "martingale mean failed: " + fmt(g.mean - mu)};
        const BeliefDistribution g1 = belief_distribution(model, mu, StateCondition::state1);
        const BeliefDistribution g0 = belief_distribution(model, mu, StateCondition::state0);
        if (g.atoms.size() == g1.atoms.size() && g.atoms.size() == g0.atoms.size()) {
            for (std::size_t a = 0; a < g.atoms.size(); ++a) {
                const double x = g.atoms[a].value;
                if (!detail_v::close(g1.atoms[a].mass, g.atoms[a].mass * x / mu, tol) ||
                    !detail_v::close(g0.atoms[a].mass,
                                     g.atoms[a].mass * (1.0 - x) / (1.0 - mu), tol))
                    res = {res.id, res.name, false, "Radon-Nikodym reweighting failed"};
            }
        } else {
            res = {res.id, res.name, false, "conditional atom lists misaligned"};
        }
        const FosdResult fosd = check_fosd(g1, g0);
        if (!fosd.dominates || !fosd.strict)
            res = {res.id, res.name, false, "FOSD of conditional belief distributions failed"};
    }
    if (res.passed)
        res.detail = "posterior identities, e(k,m) forms, martingale, RN, FOSD all within 1e-12";
    return res;
}

// --- C2: urn drift predicate -----------------------------------------------
inline CheckResult check_urn_drift(const VerifyContext& ctx) {
    CheckResult res{"C2", "urn-drift", true, ""};
    RandomStream rng(derive_stream_seed(ctx.seed, 0x22));
    std::vector<SignalModel> models;
    for (double eps : {0.05, 0.1, 0.2, 0.3}) models.push_back(BinarySymmetricModel(eps).to_model());
    for (int i = 0; i < 25; ++i) models.push_back(detail_v::random_model(rng));

    double worst = 1.0;
    for (const SignalModel& model : models) {
        const auto f1 = build_urn_function(model, PriorRule::degroot(),
                                           DecisionRule::probability_matching(), 1);
        const auto f0 = build_urn_function(model, PriorRule::degroot(),
                                           DecisionRule::probability_matching(), 0);
        const DriftScan up = drift_sign_scan(f1, 99);
        const DriftScan down = drift_sign_scan(f0, 99);
        worst = std::min({worst, up.min_abs_margin, down.min_abs_margin});
        if (up.classification != DriftClass::all_above ||
            down.classification != DriftClass::all_below || up.min_abs_margin <= 0.0 ||
            down.min_abs_margin <= 0.0) {
            res.passed = false;
            res.detail = "drift predicate failed for a structure";
            return res;
        }
    }
    res.detail = "f > x (state 1) and f < x (state 0) strict on 99-grid for " +
                 std::to_string(models.size()) + " structures; worst margin " + fmt(worst);
    return res;
}

// --- C3: matching + proportion prior reaches the state (desk scale) ---------
inline CheckResult check_theorem1_sufficiency(const VerifyContext& ctx) {
    CheckResult res{"C3", "matching-learns", false, ""};
    const auto it = ctx.calibration.find("theorem1_final_p_correct");
    if (it == ctx.calibration.end()) {
        res.detail = detail_v::missing_calibration("theorem1_final_p_correct");
        return res;
    }
    const double floor = it->second.value;

    AgentProcessConfig cfg(ModelSequence(BinarySymmetricModel(0.2).to_model()),
                           PriorRule::degroot(), DecisionRule::probability_matching(), 100000);
    const ExperimentResult r =
        estimate_learning(cfg, 1000, {100, 1000, 10000, 100000}, ctx.seed, ctx.threads);

    // The improvement between late checkpoints is smaller than the raw
    // fraction's sampling noise at 1000 trials, so monotonicity is judged on
    // the integrated estimator of the same estimand.
    bool monotone = true;
    for (std::size_t i = 1; i < r.stats.size(); ++i)
        if (r.stats[i].overall.expected_correct < r.stats[i - 1].overall.expected_correct)
            monotone = false;
    const double final_est = r.stats.back().overall.estimate;

    res.passed = monotone && final_est >= floor;
    res.detail = "P(a_t=w):";
    for (const auto& s : r.stats)
        res.detail += " " + fmt(s.overall.estimate) + "/" + fmt(s.overall.expected_correct);
    res.detail += monotone ? " (nondecreasing)" : " (NOT monotone)";
    res.detail += ", final vs floor " + fmt(floor);
    return res;
}

// --- C4: threshold rule cascades onto the wrong action ----------------------
inline CheckResult check_theorem1_necessity(const VerifyContext& ctx) {
    CheckResult res{"C4", "threshold-herds", false, ""};
    AgentProcessConfig cfg(ModelSequence(BinarySymmetricModel(0.1).to_model()),
                           PriorRule::degroot(), DecisionRule::bayes_threshold(), 10000,
                           Conditioning::state0);
    const ExperimentResult r = estimate_learning(cfg, 2000, {10000}, ctx.seed, ctx.threads,
                                                 {0.1, 0.5, 0.9});
    const double frac_high = r.herd_above.back();  // threshold 0.9
    res.passed = frac_high >= 0.35;
    res.detail = "fraction of state-0 trials with final x > 0.9: " + fmt(frac_high) +
                 " (one-step cascade bound 0.4, test floor 0.35)";
    return res;
}

// --- C5: count-difference priors herd wrong with positive probability -------
inline CheckResult check_theorem3(const VerifyContext& ctx) {
    CheckResult res{"C5", "quasibayes-fails", true, ""};

    // (a) gambler's ruin closed form, exactly, plus Monte Carlo agreement.
    const double escape = gamblers_ruin_escape(WalkSpec(0.75, 1));
    if (escape != 2.0 / 3.0) {
        res.passed = false;
        res.detail = "escape probability (3/4, 1) != 2/3 exactly";
        return res;
    }
    if (gamblers_ruin_escape(WalkSpec(0.75, 2)) != 8.0 / 9.0) {
        res.passed = false;
        res.detail = "escape probability (3/4, 2) != 8/9 exactly";
        return res;
    }
    const WalkSimulation sim = simulate_walk(WalkSpec(0.75, 1), 100000,
                                             derive_stream_seed(ctx.seed, 0x51));
    const std::uint64_t hits =
        static_cast<std::uint64_t>(sim.escape_frequency * static_cast<double>(sim.trials) + 0.5);
    const WilsonInterval ci = wilson_interval(hits, sim.trials, kZ99);
    if (!(ci.lo <= 2.0 / 3.0 && 2.0 / 3.0 <= ci.hi)) {
        res.passed = false;
        res.detail = "Monte Carlo walk frequency " + fmt(sim.escape_frequency) +
                     " rejects 2/3 at the 99% level";
        return res;
    }

    // (b) count-advantage monotonicity of the log odds, exact in the
    // factored form, over random parameters and synthetic paths.
    RandomStream rng(derive_stream_seed(ctx.seed, 0x52));
    for (int i = 0; i < 1000; ++i) {
        const double q = 0.51 + 0.47 * rng.uniform();
        const double r = 0.02 + 0.46 * rng.uniform();
        const int l = compute_block_length(q, r);
        const double lq = std::log(q / (1.0 - q));
        const double lr = std::log(r / (1.0 - r));
        const double slack = static_cast<double>(l) * lq + lr;
        if (!(slack >= 0.0)) {
            res.passed = false;
            res.detail = "block length violates its defining inequality at q=" + fmt(q) +
                         " r=" + fmt(r);
            return res;
        }
        std::uint64_t dk = 0, dm = 0;
        for (int seg = 0; seg < 10; ++seg) {
            const std::uint64_t add_m = static_cast<std::uint64_t>(rng.uniform() * 4);
            const std::uint64_t extra = static_cast<std::uint64_t>(rng.uniform() * 6);
            dm += add_m;
            dk += static_cast<std::uint64_t>(l) * add_m + extra;
            const double gain = static_cast<double>(dm) * slack +
                                static_cast<double>(dk - static_cast<std::uint64_t>(l) * dm) * lq;
            if (!(gain >= 0.0)) {
                res.passed = false;
                res.detail = "log-odds gain negative on a good path";
                return res;
            }
            const double direct = quasibayes_log_odds(q, r, dm + 5, dk + 5) -
                                  quasibayes_log_odds(q, r, 5, 5);
            if (std::fabs(direct - gain) > 1e-7 * (1.0 + std::fabs(gain))) {
                res.passed = false;
                res.detail = "factored gain disagrees with the direct log-odds difference";
                return res;
            }
        }
    }

    // (c) wrong herds at desk scale: fraction of state-0 trials whose final
    // count-difference prior exceeds 0.99.
    const auto it = ctx.calibration.find("theorem3_wrong_herd");
    if (it == ctx.calibration.end()) {
        res.passed = false;
        res.detail = detail_v::missing_calibration("theorem3_wrong_herd");
        return res;
    }
    const double floor = it->second.value;
    const SignalModel model = BinarySymmetricModel(0.2).to_model();
    const auto [q, r] = quasibayes_params(model);
    AgentProcessConfig cfg(ModelSequence(model), PriorRule::quasibayes(q, r),
                           DecisionRule::probability_matching(), 10000, Conditioning::state0);
    const std::uint64_t trials = 2000;
    std::vector<TrialSummary> sums(trials);
    for_each_trial(trials, ctx.threads, [&](std::uint64_t i) {
        sums[i] = summarize_trial(cfg, {}, derive_stream_seed(ctx.seed, i));
    });
    std::uint64_t wrong = 0;
    for (const auto& s : sums)
        if (quasibayes_prior(q, r, s.final_m, s.final_k) > 0.99) ++wrong;
    const double frac = static_cast<double>(wrong) / static_cast<double>(trials);

    // walk-coupling bookkeeping on a slice of the same dynamics
    std::uint64_t started = 0, clean = 0;
    double worst_floor_gap = 1.0;
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto [trial, walk] = quasi_walk_coupling(model, DecisionRule::probability_matching(),
                                                 UrnState{1, 1}, 10000,
                                                 derive_stream_seed(ctx.seed, 0x530 + i), 0);
        if (!walk.started) continue;
        ++started;
        if (walk.e_monotone_ok && walk.integer_slope_ok) ++clean;
        worst_floor_gap = std::min(worst_floor_gap, walk.min_in_block_p1 - walk.per_step_floor);
    }
    const bool bookkeeping_ok = started > 0 && clean == started && worst_floor_gap >= -1e-12;

    res.passed = floor > 0.0 && frac >= floor && bookkeeping_ok;
    res.detail = "wrong-herd fraction " + fmt(frac) + " vs positive floor " + fmt(floor) +
                 "; walk bookkeeping clean on " + std::to_string(clean) + "/" +
                 std::to_string(started) + " armed trials";
    return res;
}

// --- C6: heterogeneous sequences dominate their binary contraction ----------
inline CheckResult check_theorem2(const VerifyContext& ctx) {
    CheckResult res{"C6", "uniform-informativeness", true, ""};
    const double v = 0.01;
    const SignalModel m01 = BinarySymmetricModel(0.1).to_model();
    const SignalModel m03 = BinarySymmetricModel(0.3).to_model();
    const SignalModel dominated = dominated_binary_model(v).to_model();

    const auto f01 = build_urn_function(m01, PriorRule::degroot(),
                                        DecisionRule::probability_matching(), 1);
    const auto f03 = build_urn_function(m03, PriorRule::degroot(),
                                        DecisionRule::probability_matching(), 1);
    const auto fdom = build_urn_function(dominated, PriorRule::degroot(),
                                         DecisionRule::probability_matching(), 1);

    const DominanceResult d1 = verify_dominance(f01, fdom, 99);
    const DominanceResult d3 = verify_dominance(f03, fdom, 99);
    if (!d1.dominates || !d3.dominates || !d3.strict) {
        res.passed = false;
        res.detail = "dominance scan failed (margins " + fmt(d1.worst_margin) + ", " +
                     fmt(d3.worst_margin) + ")";
        return res;
    }

    for (std::uint64_t s = 0; s < 100; ++s) {
        try {
            coupled_simulate_sequence({f01, f03}, fdom, UrnState{1, 1}, 10000,
                                      derive_stream_seed(ctx.seed, 0x600 + s));
        } catch (const CouplingViolatedError& e) {
            res.passed = false;
            res.detail = std::string("pathwise domination failed: ") + e.what();
            return res;
        }
    }

    const auto it = ctx.calibration.find("theorem2_final_p_correct");
    if (it == ctx.calibration.end()) {
        res.passed = false;
        res.detail = detail_v::missing_calibration("theorem2_final_p_correct");
        return res;
    }
    const double floor = it->second.value;
    AgentProcessConfig cfg(ModelSequence({m01, m03}, v), PriorRule::degroot(),
                           DecisionRule::probability_matching(), 100000);
    const ExperimentResult r =
        estimate_learning(cfg, 1000, {100, 1000, 10000, 100000}, ctx.seed, ctx.threads);
    bool monotone = true;
    for (std::size_t i = 1; i < r.stats.size(); ++i)
        if (r.stats[i].overall.expected_correct < r.stats[i - 1].overall.expected_correct)
            monotone = false;
    const double final_est = r.stats.back().overall.estimate;
    res.passed = monotone && final_est >= floor;
    res.detail = "dominance + 100 coupled paths ok; heterogeneous P(a_t=w):";
    for (const auto& s : r.stats)
        res.detail += " " + fmt(s.overall.estimate) + "/" + fmt(s.overall.expected_correct);
    res.detail += monotone ? " (nondecreasing)" : " (NOT monotone)";
    res.detail += ", final vs floor " + fmt(floor);
    return res;
}

// --- C7: complementary pairs are observationally equivalent -----------------
inline CheckResult check_complementary_pairs(const VerifyContext& ctx) {
    CheckResult res{"C7", "complementary-pairs", true, ""};
    RandomStream rng(derive_stream_seed(ctx.seed, 0x77));
    const double tol = 1e-12;
    double worst = 0.0;

    std::vector<SignalModel> models;
    for (int i = 0; i < 10; ++i) models.push_back(detail_v::random_model(rng));

    for (int ci = 0; ci < 50 && res.passed; ++ci) {
        const double c = 0.02 + 0.96 * rng.uniform();
        auto [g_c, sigma_c] = complementary_pair(c);
        const PriorRule biased = PriorRule::size_invariant(g_c);
        for (const SignalModel& model : models) {
            for (int omega : {0, 1}) {
                const auto f_pair = build_urn_function(model, biased, sigma_c, omega);
                const auto f_id = build_urn_function(model, PriorRule::degroot(),
                                                     DecisionRule::probability_matching(), omega);
                for (int i = 1; i <= 99; ++i) {
                    const double x = static_cast<double>(i) / 100.0;
                    const double gap = std::fabs(f_pair(x) - f_id(x));
                    worst = std::max(worst, gap);
                    if (gap > tol) {
                        res.passed = false;
                        res.detail = "urn functions differ by " + fmt(gap) + " at x=" + fmt(x);
                        break;
                    }
                }
                if (!res.passed) break;
            }
            if (!res.passed) break;

            // shared-seed trajectories, action by action
            AgentProcessConfig cfg_pair(ModelSequence(model), biased, sigma_c, 500);
            AgentProcessConfig cfg_id(ModelSequence(model), PriorRule::degroot(),
                                      DecisionRule::probability_matching(), 500);
            const std::uint64_t seed = derive_stream_seed(ctx.seed, 0x700 + ci);
            const TrialResult a = run_trial(cfg_pair, seed);
            const TrialResult b = run_trial(cfg_id, seed);
            for (std::size_t i = 0; i < a.records.size(); ++i) {
                if (a.records[i].action != b.records[i].action) {
                    res.passed = false;
                    res.detail = "trajectories diverged at step " + std::to_string(i + 1);
                    break;
                }
            }
            if (!res.passed) break;
        }
    }
    if (res.passed)
        res.detail = "50 biases x 10 structures: urn gap <= 1e-12 (worst " + fmt(worst) +
                     "), trajectories identical";
    return res;
}

// --- C8: exact enumeration vs Monte Carlo -----------------------------------
inline CheckResult check_oracle_equivalence(const VerifyContext& ctx) {
    CheckResult res{"C8", "enumeration-oracle", true, ""};
    const int steps = 10;
    const std::uint64_t trials = 100000;

    const UrnFunction identity = UrnFunction::identity();
    const UrnFunction matching = build_urn_function(BinarySymmetricModel(0.2).to_model(),
                                                    PriorRule::degroot(),
                                                    DecisionRule::probability_matching(), 1);
    const UrnFunction threshold = build_urn_function(BinarySymmetricModel(0.1).to_model(),
                                                     PriorRule::degroot(),
                                                     DecisionRule::bayes_threshold(), 0);

    // the identity urn must reproduce the uniform law exactly
    const std::vector<double> uniform_law = enumerate_exact(identity, UrnState{1, 1}, steps);
    for (double p : uniform_law)
        if (std::fabs(p - 1.0 / 11.0) > 1e-12) {
            res.passed = false;
            res.detail = "identity urn enumeration is not the uniform law";
            return res;
        }

    int idx = 0;
    for (const UrnFunction* f : {&identity, &matching, &threshold}) {
        const std::vector<double> exact = enumerate_exact(*f, UrnState{1, 1}, steps);
        double mass = 0.0;
        for (double p : exact) mass += p;
        if (std::fabs(mass - 1.0) > 1e-12) {
            res.passed = false;
            res.detail = "enumerated mass deviates from 1";
            return res;
        }
        std::vector<std::uint64_t> counts(exact.size(), 0);
        for (std::uint64_t tr = 0; tr < trials; ++tr) {
            const UrnTrajectory traj = simulate_urn(
                *f, UrnState{1, 1}, steps, derive_stream_seed(ctx.seed, 0x800 + idx * trials + tr));
            ++counts[traj.back().k - 1];
        }
        double tv = 0.0, se_sum = 0.0;
        for (std::size_t i = 0; i < exact.size(); ++i) {
            const double phat =
                static_cast<double>(counts[i]) / static_cast<double>(trials);
            tv += 0.5 * std::fabs(phat - exact[i]);
            se_sum += 0.5 * std::sqrt(exact[i] * (1.0 - exact[i]) / static_cast<double>(trials));
        }
        if (tv > 3.0 * se_sum) {
            res.passed = false;
            res.detail = "TV distance " + fmt(tv) + " exceeds 3 aggregated standard errors " +
                         fmt(3.0 * se_sum);
            return res;
        }
        res.detail += (idx ? "; " : "") + std::string("urn ") + std::to_string(idx) +
                      " TV=" + fmt(tv) + " (3SE=" + fmt(3.0 * se_sum) + ")";
        ++idx;
    }
    return res;
}

// --- C9: n-state engine ------------------------------------------------------
inline CheckResult check_nstate(const VerifyContext& ctx) {
    CheckResult res{"C9", "n-state", true, ""};

    // n = 2 reduction reproduces the binary engine bit for bit.
    const SignalModel binary = BinarySymmetricModel(0.2).to_model();
    const NStateModel two({0.5, 0.5}, binary.signals(), {binary.f0(), binary.f1()});
    for (std::uint64_t s = 0; s < 5; ++s) {
        const std::uint64_t seed = derive_stream_seed(ctx.seed, 0x900 + s);
        AgentProcessConfig cfg(ModelSequence(binary), PriorRule::degroot(),
                               DecisionRule::probability_matching(), 2000);
        const TrialResult bin = run_trial(cfg, seed);
        const NStateTrialResult gen = run_trial_nstate(two, 2000, seed);
        if (static_cast<std::size_t>(bin.omega) != gen.omega) {
            res.passed = false;
            res.detail = "realized state differs in the n=2 reduction";
            return res;
        }
        for (std::size_t i = 0; i < bin.records.size(); ++i) {
            const AgentRecord& a = bin.records[i];
            const NStateRecord& b = gen.records[i];
            const double prior_n =
                static_cast<double>(b.counts[1]) / static_cast<double>(b.t - 1);
            if (a.t != b.t || a.m != b.counts[0] || a.k != b.counts[1] ||
                a.signal != b.signal || a.action != b.action || a.prior != prior_n) {
                res.passed = false;
                res.detail = "n=2 trajectory differs from the binary engine at step " +
                             std::to_string(i + 1);
                return res;
            }
        }
    }

    // n = 3, separated likelihoods, fixed second state.
    const auto it = ctx.calibration.find("nstate_median_final");
    if (it == ctx.calibration.end()) {
        res.passed = false;
        res.detail = detail_v::missing_calibration("nstate_median_final");
        return res;
    }
    const double floor = it->second.value;
    const NStateModel three({1.0 / 3, 1.0 / 3, 1.0 / 3}, {"s0", "s1", "s2"},
                            {{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}});
    const NStateExperimentResult r = estimate_learning_nstate(
        three, 100000, 200, {1000, 10000, 100000}, ctx.seed, Conditioning::state1, 1,
        ctx.threads);
    const std::size_t median_idx = 2;  // kQuantileLevels[2] == 0.5
    bool monotone = true;
    for (std::size_t i = 1; i < r.stats.size(); ++i)
        if (r.stats[i].proportion_quantiles[median_idx] <
            r.stats[i - 1].proportion_quantiles[median_idx])
            monotone = false;
    const double final_median = r.stats.back().proportion_quantiles[median_idx];
    res.passed = res.passed && monotone && final_median >= floor && floor > 0.0;
    res.detail = "n=2 bitwise match over 5 seeds; n=3 median correct proportion:";
    for (const auto& s : r.stats) res.detail += " " + fmt(s.proportion_quantiles[median_idx]);
    res.detail += monotone ? " (nondecreasing)" : " (NOT monotone)";
    res.detail += ", final vs floor " + fmt(floor);
    return res;
}

// --- C10: CLI reproducibility ------------------------------------------------
inline CheckResult check_reproducibility(const VerifyContext& ctx) {
    CheckResult res{"C10", "cli-reproducibility", false, ""};
    namespace fs = std::filesystem;
    if (ctx.cli_binary.empty() || !fs::exists(ctx.cli_binary)) {
        res.detail = "nll binary not found (path: \"" + ctx.cli_binary + "\")";
        return res;
    }
    const fs::path scratch = fs::path(ctx.scratch_dir) / "repro";
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    const json cfg = {
        {"model", {{"binary_symmetric", {{"epsilon", 0.2}}}}},
        {"prior", {{"degroot", json::object()}}},
        {"decision", {{"probability_matching", json::object()}}},
        {"horizon", 1000},
        {"trials", 200},
        {"checkpoints", {10, 100, 1000}},
        {"trajectory_sample", 2},
    };
    const fs::path cfg_path = scratch / "config.json";
    write_file(cfg_path, cfg.dump(2) + "\n");

    auto run = [&](const std::string& out, int threads) {
        const std::string cmd = "\"" + ctx.cli_binary + "\" simulate --config \"" +
                                cfg_path.string() + "\" --out \"" + (scratch / out).string() +
                                "\" --seed 7 --threads " + std::to_string(threads) +
                                " >/dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    if (run("a", 1) != 0 || run("b", 4) != 0 || run("c", 1) != 0) {
        res.detail = "CLI invocation failed";
        return res;
    }
    for (const char* name : {"result.json", "result.csv", "trajectories.csv", "manifest.json"}) {
        const std::string a = read_file(scratch / "a" / name);
        const std::string b = read_file(scratch / "b" / name);
        const std::string c = read_file(scratch / "c" / name);
        if (a != b) {
            res.detail = std::string(name) + " differs across --threads values";
            return res;
        }
        if (a != c) {
            res.detail = std::string(name) + " differs across reruns";
            return res;
        }
    }

    // urn and sweep reruns as well
    const json urn_cfg = {{"model", {{"binary_symmetric", {{"epsilon", 0.2}}}}},
                          {"prior", {{"degroot", json::object()}}},
                          {"decision", {{"probability_matching", json::object()}}}};
    const fs::path urn_path = scratch / "urn_config.json";
    write_file(urn_path, urn_cfg.dump(2) + "\n");
    const json sweep_cfg = {
        {"base",
         {{"prior", {{"degroot", json::object()}}},
          {"decision", {{"probability_matching", json::object()}}},
          {"horizon", 200},
          {"trials", 50}}},
        {"grid", {{"epsilon", {0.1, 0.3}}}}};
    const fs::path sweep_path = scratch / "sweep_config.json";
    write_file(sweep_path, sweep_cfg.dump(2) + "\n");
    auto shell = [&](const std::string& cmd) {
        return std::system((cmd + " >/dev/null 2>&1").c_str());
    };
    const std::string bin = "\"" + ctx.cli_binary + "\"";
    if (shell(bin + " urn --config \"" + urn_path.string() + "\" --state 1 --out \"" +
              (scratch / "u1").string() + "\"") != 0 ||
        shell(bin + " urn --config \"" + urn_path.string() + "\" --state 1 --out \"" +
              (scratch / "u2").string() + "\"") != 0 ||
        shell(bin + " sweep --config \"" + sweep_path.string() + "\" --seed 3 --threads 1 --out \"" +
              (scratch / "s1").string() + "\"") != 0 ||
        shell(bin + " sweep --config \"" + sweep_path.string() + "\" --seed 3 --threads 2 --out \"" +
              (scratch / "s2").string() + "\"") != 0) {
        res.detail = "urn/sweep invocation failed";
        return res;
    }
    for (const char* name : {"urn_table.csv", "fixed_points.json", "manifest.json"}) {
        if (read_file(scratch / "u1" / name) != read_file(scratch / "u2" / name)) {
            res.detail = std::string("urn ") + name + " differs across reruns";
            return res;
        }
    }
    for (const char* name : {"index.csv", "cells/cell_0/result.csv", "cells/cell_1/result.json"}) {
        if (read_file(scratch / "s1" / name) != read_file(scratch / "s2" / name)) {
            res.detail = std::string("sweep ") + name + " differs across --threads values";
            return res;
        }
    }
    res.passed = true;
    res.detail =
        "simulate/urn/sweep outputs byte-identical across reruns and thread counts";
    return res;
}

// ---------------------------------------------------------------------------
// Suite registry.
// ---------------------------------------------------------------------------
inline const std::map<std::string, std::vector<std::string>>& suite_map() {
    static const std::map<std::string, std::vector<std::string>> suites = {
        {"exact", {"C1", "C7"}},
        {"urn", {"C2", "C8"}},
        {"theorem1", {"C3", "C4"}},
        {"theorem2", {"C6"}},
        {"theorem3", {"C5"}},
        {"nstate", {"C9"}},
        {"all", {"C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10"}},
    };
    return suites;
}

inline CheckResult run_check(const std::string& id, const VerifyContext& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult res;
    if (id == "C1") res = check_exact_algebra(ctx);
    else if (id == "C2") res = check_urn_drift(ctx);
    else if (id == "C3") res = check_theorem1_sufficiency(ctx);
    else if (id == "C4") res = check_theorem1_necessity(ctx);
    else if (id == "C5") res = check_theorem3(ctx);
    else if (id == "C6") res = check_theorem2(ctx);
    else if (id == "C7") res = check_complementary_pairs(ctx);
    else if (id == "C8") res = check_oracle_equivalence(ctx);
    else if (id == "C9") res = check_nstate(ctx);
    else if (id == "C10") res = check_reproducibility(ctx);
    else throw InputError("unknown check id " + id);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

inline std::vector<CheckResult> run_suite(const std::string& suite, const VerifyContext& ctx,
                                          std::ostream& out) {
    const auto& suites = suite_map();
    const auto it = suites.find(suite);
    if (it == suites.end()) throw InputError("unknown suite \"" + suite + "\"");
    std::vector<CheckResult> results;
    for (const std::string& id : it->second) {
        const CheckResult res = run_check(id, ctx);
        char line[64];
        std::snprintf(line, sizeof(line), "[%s] %-4s %-22s (%.1fs) ",
                      res.passed ? "PASS" : "FAIL", res.id.c_str(), res.name.c_str(),
                      res.seconds);
        out << line << res.detail << "\n" << std::flush;
        results.push_back(res);
    }
    return results;
}

}  // namespace verify
}  // namespace nll
