#include <gtest/gtest.h>

#include "nll/sequential.hpp"

using namespace nll;

namespace {

SignalModel eps_model(double eps) { return BinarySymmetricModel(eps).to_model(); }

TEST(StepAgent, DrawDiscipline) {
    // state 1, eps = 0.2: signal CDF over (s0, s1) is (0.3, 1.0)
    const SignalModel m = eps_model(0.2);
    const PriorRule d = PriorRule::degroot();
    const DecisionRule pm = DecisionRule::probability_matching();
    const UrnState h{1, 1};

    AgentStep s = step_agent(d, pm, m, 1, h, 0.1, 0.25);
    EXPECT_EQ(s.signal, 0u);
    EXPECT_DOUBLE_EQ(s.prior, 0.5);
    EXPECT_NEAR(s.posterior, 0.3, 1e-15);
    EXPECT_EQ(s.action, 1);  // 0.25 < 0.3

    s = step_agent(d, pm, m, 1, h, 0.1, 0.35);
    EXPECT_EQ(s.action, 0);

    s = step_agent(d, pm, m, 1, h, 0.3, 0.65);  // u = 0.3 selects s1 (strict inequality)
    EXPECT_EQ(s.signal, 1u);
    EXPECT_NEAR(s.posterior, 0.7, 1e-15);
    EXPECT_EQ(s.action, 1);
}

TEST(StepAgent, ThresholdActsDeterministically) {
    const SignalModel m = eps_model(0.2);
    const AgentStep s = step_agent(PriorRule::degroot(), DecisionRule::bayes_threshold(), m, 1,
                                   UrnState{1, 1}, 0.9, 0.999999);
    EXPECT_NEAR(s.posterior, 0.7, 1e-15);
    EXPECT_EQ(s.action, 1);  // any u acts 1 once the posterior clears 1/2
}

TEST(RunTrial, FirstPriorIsHalf) {
    for (const PriorRule& rule :
         {PriorRule::degroot(), PriorRule::quasibayes(0.7, 0.3)}) {
        AgentProcessConfig cfg(ModelSequence(eps_model(0.2)), rule,
                               DecisionRule::probability_matching(), 1);
        const TrialResult r = run_trial(cfg, 42);
        ASSERT_EQ(r.records.size(), 1u);
        EXPECT_NEAR(r.records[0].prior, 0.5, 1e-12);
        EXPECT_EQ(r.records[0].t, 3u);
    }
}

TEST(RunTrial, MatchesUrnSimulationUnderSharedDiscipline) {
    for (std::uint64_t seed : {1ULL, 99ULL, 31337ULL}) {
        AgentProcessConfig cfg(ModelSequence(eps_model(0.2)), PriorRule::degroot(),
                               DecisionRule::probability_matching(), 500,
                               Conditioning::state1);
        const TrialResult trial = run_trial(cfg, seed);
        const UrnFunction f = build_urn_function(eps_model(0.2), PriorRule::degroot(),
                                                 DecisionRule::probability_matching(), 1);
        const UrnTrajectory urn =
            simulate_urn(f, UrnState{1, 1}, 500, seed, UrnDrawDiscipline::signal_action);
        ASSERT_EQ(urn.size(), trial.records.size() + 1);
        for (std::size_t i = 0; i < trial.records.size(); ++i) {
            EXPECT_EQ(trial.records[i].action, urn[i + 1].increment);
            EXPECT_EQ(trial.records[i].m, urn[i].m);
            EXPECT_EQ(trial.records[i].k, urn[i].k);
        }
        EXPECT_EQ(trial.final_state.m, urn.back().m);
        EXPECT_EQ(trial.final_state.k, urn.back().k);
    }
}

TEST(RunTrial, SizeInvariantAlsoMatchesUrn) {
    auto [g, sigma] = complementary_pair(0.7);
    const PriorRule prior = PriorRule::size_invariant(g);
    AgentProcessConfig cfg(ModelSequence(eps_model(0.2)), prior, sigma, 300,
                           Conditioning::state0);
    const TrialResult trial = run_trial(cfg, 5);
    const UrnFunction f = build_urn_function(eps_model(0.2), prior, sigma, 0);
    const UrnTrajectory urn =
        simulate_urn(f, UrnState{1, 1}, 300, 5, UrnDrawDiscipline::signal_action);
    for (std::size_t i = 0; i < trial.records.size(); ++i)
        EXPECT_EQ(trial.records[i].action, urn[i + 1].increment);
}

TEST(RunTrial, ThresholdCascade) {
    // state 0, eps = 0.1: signal CDF over (s0, s1) is (0.6, 1.0).
    // A first signal of s1 yields posterior 0.6 >= 1/2, action 1, x = 2/3,
    // after which every posterior clears the threshold and the run is locked.
    AgentProcessConfig cfg(ModelSequence(eps_model(0.1)), PriorRule::degroot(),
                           DecisionRule::bayes_threshold(), 200, Conditioning::state0);
    bool found_seed = false;
    for (std::uint64_t seed = 0; seed < 32 && !found_seed; ++seed) {
        RandomStream probe(seed);
        if (probe.uniform() < 0.6) continue;  // want the first signal to be s1
        found_seed = true;
        const TrialResult r = run_trial(cfg, seed);
        EXPECT_EQ(r.records[0].action, 1);
        EXPECT_DOUBLE_EQ(r.records[1].x, 2.0 / 3.0);
        for (const auto& rec : r.records) EXPECT_EQ(rec.action, 1);
        EXPECT_EQ(r.final_state.k, 201u);
    }
    EXPECT_TRUE(found_seed);
}

TEST(RunTrial, DeterministicGivenSeed) {
    AgentProcessConfig cfg(ModelSequence(eps_model(0.2)), PriorRule::quasibayes(0.7, 0.3),
                           DecisionRule::probability_matching(), 400);
    const TrialResult a = run_trial(cfg, 77);
    const TrialResult b = run_trial(cfg, 77);
    EXPECT_EQ(a.omega, b.omega);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].action, b.records[i].action);
        EXPECT_EQ(a.records[i].signal, b.records[i].signal);
        EXPECT_DOUBLE_EQ(a.records[i].prior, b.records[i].prior);
    }
}

TEST(ModelSequence, InformativenessChecks) {
    // eps = 0.1 has private-belief variance 0.01
    EXPECT_NO_THROW(ModelSequence({eps_model(0.1), eps_model(0.3)}, 0.01));
    EXPECT_THROW(ModelSequence({eps_model(0.1), eps_model(0.3)}, 0.02), InformativenessError);
    EXPECT_THROW(ModelSequence({eps_model(0.1)}, 0.0), InputError);
    EXPECT_THROW(ModelSequence({eps_model(0.1), BinarySymmetricModel(0.2).to_model(0.6)}, 0.005),
                 InputError);  // mismatched mu
}

TEST(RunHeterogeneous, ConstantCycleMatchesSingleModel) {
    AgentProcessConfig single(ModelSequence(eps_model(0.2)), PriorRule::degroot(),
                              DecisionRule::probability_matching(), 300);
    AgentProcessConfig cycled(ModelSequence({eps_model(0.2)}, 0.01), PriorRule::degroot(),
                              DecisionRule::probability_matching(), 300);
    const TrialResult a = run_trial(single, 9);
    const TrialResult b = run_heterogeneous(cycled, 9);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i)
        EXPECT_EQ(a.records[i].action, b.records[i].action);
}

TEST(RunHeterogeneous, RecordsModelIndex) {
    AgentProcessConfig cfg(ModelSequence({eps_model(0.1), eps_model(0.3)}, 0.01),
                           PriorRule::degroot(), DecisionRule::probability_matching(), 10);
    const TrialResult r = run_heterogeneous(cfg, 4);
    for (std::size_t i = 0; i < r.records.size(); ++i)
        EXPECT_EQ(r.records[i].model_index, i % 2);
}

TEST(ComputeBlockLength, Examples) {
    EXPECT_EQ(compute_block_length(0.75, 0.25), 1);
    EXPECT_EQ(compute_block_length(0.6, 0.25), 3);
    EXPECT_EQ(compute_block_length(0.6, 0.4), 1);
    EXPECT_THROW(compute_block_length(0.5, 0.25), InputError);
    EXPECT_THROW(compute_block_length(0.75, 0.5), InputError);
}

TEST(ComputeBlockLength, DefiningInequality) {
    RandomStream rng(13);
    for (int i = 0; i < 500; ++i) {
        const double q = 0.51 + 0.48 * rng.uniform();
        const double r = 0.01 + 0.47 * rng.uniform();
        const int l = compute_block_length(q, r);
        EXPECT_GE(l, 1);
        // l * ln((1-q)/q) + ln((1-r)/r) <= 0
        EXPECT_LE(static_cast<double>(l) * std::log((1.0 - q) / q) +
                      std::log((1.0 - r) / r),
                  0.0);
    }
}

TEST(QuasiWalkCoupling, BlockStructure) {
    // eps = 0.2 gives (q, r) = (0.7, 0.3). The real-arithmetic block length
    // is 1, but fl(0.7) and fl(0.3) are not exact complements, so the
    // smallest l whose defining inequality holds for the actual doubles is 2.
    const SignalModel model = eps_model(0.2);
    auto [trial, walk] = quasi_walk_coupling(model, DecisionRule::probability_matching(),
                                             UrnState{1, 1}, 2000, 12345, 0);
    EXPECT_NEAR(walk.q, 0.7, 1e-15);
    EXPECT_NEAR(walk.r, 0.3, 1e-15);
    EXPECT_GE(walk.l, 1);
    EXPECT_LE(walk.l, 2);
    EXPECT_LE(static_cast<double>(walk.l) * std::log((1.0 - walk.q) / walk.q) +
                  std::log((1.0 - walk.r) / walk.r),
              0.0);
    EXPECT_GT(walk.threshold_b, 0.5);
    EXPECT_LT(walk.threshold_b, 1.0);
    EXPECT_DOUBLE_EQ(walk.per_step_floor, std::pow(0.75, 1.0 / walk.l));
    if (walk.started) {
        ASSERT_FALSE(walk.z_path.empty());
        EXPECT_EQ(walk.z_path.front(), 1);
        EXPECT_TRUE(walk.e_monotone_ok);
        EXPECT_TRUE(walk.integer_slope_ok);
        // the walk moves by exactly one per completed block
        for (std::size_t i = 1; i < walk.z_path.size(); ++i)
            EXPECT_EQ(std::abs(walk.z_path[i] - walk.z_path[i - 1]), 1);
    }
}

TEST(ComputeBlockLength, ExactTiesStayAtOne) {
    // dyadic parameter pairs are exact complements, so the ratio is an
    // exact 1.0 and the ceiling does not overshoot
    EXPECT_EQ(compute_block_length(0.75, 0.25), 1);
    EXPECT_EQ(compute_block_length(0.625, 0.375), 1);
}

TEST(QuasiWalkCoupling, BookkeepingAcrossSeeds) {
    const SignalModel model = eps_model(0.2);
    int started = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto [trial, walk] = quasi_walk_coupling(model, DecisionRule::probability_matching(),
                                                 UrnState{1, 1}, 3000, seed, 0);
        if (!walk.started) continue;
        ++started;
        EXPECT_TRUE(walk.e_monotone_ok);
        EXPECT_TRUE(walk.integer_slope_ok);
        EXPECT_GE(walk.min_in_block_p1, walk.per_step_floor - 1e-12);
    }
    EXPECT_GT(started, 0);
}

TEST(QuasiWalkCoupling, RequiresMutualAbsoluteContinuity) {
    const SignalModel one_sided(0.5, {"a", "b"}, {0.0, 1.0}, {0.5, 0.5});
    EXPECT_THROW(quasi_walk_coupling(one_sided, DecisionRule::probability_matching(),
                                     UrnState{1, 1}, 100, 1, 0),
                 InputError);
}

TEST(QuasiWalkCoupling, NonMatchingRules) {
    // the threshold level adapts to the decision rule
    const SignalModel model = eps_model(0.2);
    auto [t1, w1] = quasi_walk_coupling(model, DecisionRule::complementary(0.3), UrnState{1, 1},
                                        500, 3, 0);
    EXPECT_GT(w1.threshold_b, 0.0);
    EXPECT_LT(w1.threshold_b, 1.0);
    EXPECT_GE(action_one_probability(model, DecisionRule::complementary(0.3), w1.threshold_b, 0),
              w1.per_step_floor);
    auto [t2, w2] = quasi_walk_coupling(model, DecisionRule::bayes_threshold(), UrnState{1, 1},
                                        500, 3, 0);
    EXPECT_GT(w2.threshold_b, 0.0);
}

TEST(RunTrial, CustomInitialHistory) {
    AgentProcessConfig cfg(ModelSequence(eps_model(0.2)), PriorRule::degroot(),
                           DecisionRule::probability_matching(), 5, Conditioning::state1,
                           UrnState{3, 7});
    const TrialResult r = run_trial(cfg, 1);
    ASSERT_EQ(r.records.size(), 5u);
    EXPECT_EQ(r.records[0].t, 11u);  // m + k + 1
    EXPECT_DOUBLE_EQ(r.records[0].prior, 0.7);
    EXPECT_EQ(r.final_state.m + r.final_state.k, 15u);
}

TEST(NStateModel, Validation) {
    EXPECT_THROW(NStateModel({1.0}, {"a"}, {{1.0}}), InputError);  // n < 2
    EXPECT_THROW(NStateModel({0.5, 0.5}, {"a", "b"}, {{0.5, 0.5}, {0.5, 0.5}}),
                 InputError);  // identical rows
    EXPECT_THROW(NStateModel({0.7, 0.5}, {"a", "b"}, {{0.5, 0.5}, {0.4, 0.6}}),
                 InputError);  // mu does not sum to 1
    EXPECT_NO_THROW(NStateModel({0.5, 0.5}, {"a", "b"}, {{0.6, 0.4}, {0.4, 0.6}}));
}

TEST(NState, BinaryReduction) {
    const SignalModel binary = eps_model(0.2);
    const NStateModel two({0.5, 0.5}, binary.signals(), {binary.f0(), binary.f1()});
    for (std::uint64_t seed : {3ULL, 8ULL}) {
        AgentProcessConfig cfg(ModelSequence(binary), PriorRule::degroot(),
                               DecisionRule::probability_matching(), 300);
        const TrialResult bin = run_trial(cfg, seed);
        const NStateTrialResult gen = run_trial_nstate(two, 300, seed);
        ASSERT_EQ(static_cast<std::size_t>(bin.omega), gen.omega);
        ASSERT_EQ(bin.records.size(), gen.records.size());
        for (std::size_t i = 0; i < bin.records.size(); ++i) {
            EXPECT_EQ(bin.records[i].t, gen.records[i].t);
            EXPECT_EQ(bin.records[i].m, gen.records[i].counts[0]);
            EXPECT_EQ(bin.records[i].k, gen.records[i].counts[1]);
            EXPECT_EQ(bin.records[i].signal, gen.records[i].signal);
            EXPECT_EQ(bin.records[i].action, gen.records[i].action);
        }
    }
}

TEST(NState, InitialHistoryOneOfEach) {
    const NStateModel three({1.0 / 3, 1.0 / 3, 1.0 / 3}, {"a", "b", "c"},
                            {{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}});
    const NStateTrialResult r = run_trial_nstate(three, 5, 21, Conditioning::state1, 1);
    ASSERT_FALSE(r.records.empty());
    EXPECT_EQ(r.records[0].t, 4u);  // first agent sees n = 3 synthetic actions
    for (std::uint64_t c : r.records[0].counts) EXPECT_EQ(c, 1u);
    EXPECT_EQ(r.omega, 1u);
}

TEST(NState, FixedStateOutOfRange) {
    const NStateModel two({0.5, 0.5}, {"a", "b"}, {{0.6, 0.4}, {0.4, 0.6}});
    EXPECT_THROW(run_trial_nstate(two, 5, 1, Conditioning::state1, 5), InputError);
}

}  // namespace
