#include <gtest/gtest.h>

#include "nll/urn.hpp"

using namespace nll;

namespace {

SignalModel eps_model(double eps) { return BinarySymmetricModel(eps).to_model(); }

UrnFunction matching_urn(double eps, int omega) {
    return build_urn_function(eps_model(eps), PriorRule::degroot(),
                              DecisionRule::probability_matching(), omega);
}

TEST(BuildUrnFunction, MatchingExamples) {
    EXPECT_NEAR(matching_urn(0.2, 1)(0.5), 0.58, 1e-15);  // 0.7*0.7 + 0.3*0.3
    EXPECT_NEAR(matching_urn(0.2, 0)(0.5), 0.42, 1e-15);
}

TEST(BuildUrnFunction, ThresholdPlateaus) {
    const auto f = build_urn_function(eps_model(0.1), PriorRule::degroot(),
                                      DecisionRule::bayes_threshold(), 0);
    EXPECT_DOUBLE_EQ(f(0.75), 1.0);  // both signals clear the threshold at x >= 0.6
    EXPECT_DOUBLE_EQ(f(0.3), 0.0);
    EXPECT_NEAR(f(0.5), 0.4, 1e-15);  // only s1 clears; Pr(s1 | state 0) = 0.4
}

TEST(BuildUrnFunction, BoundariesAreTotal) {
    const auto f = matching_urn(0.2, 1);
    EXPECT_DOUBLE_EQ(f(0.0), 0.0);
    EXPECT_DOUBLE_EQ(f(1.0), 1.0);
    // total even for structures with fully revealing signals
    const SignalModel revealing(0.5, {"a", "b"}, {0.0, 1.0}, {0.6, 0.4});
    const auto g = build_urn_function(revealing, PriorRule::degroot(),
                                      DecisionRule::probability_matching(), 1);
    EXPECT_DOUBLE_EQ(g(0.0), 0.0);
    EXPECT_DOUBLE_EQ(g(1.0), 1.0);
}

TEST(BuildUrnFunction, RejectsCountDependentPriors) {
    EXPECT_THROW(build_urn_function(eps_model(0.2), PriorRule::quasibayes(0.7, 0.3),
                                    DecisionRule::probability_matching(), 1),
                 NotSizeInvariantError);
}

TEST(BuildUrnFunction, UpperBoundarySlopeIsOne) {
    // lim (1 - f(x)) / (1 - x) at 1 equals sum_s Pr(s|1)(1-p)/p = sum_s Pr(s|0) = 1.
    // The finite-offset error is first order in (1 - x) times the structure's
    // curvature, so the sharper structures get a proportionally wider band.
    for (double eps : {0.05, 0.1, 0.2}) {
        const auto f = matching_urn(eps, 1);
        const double x = 1.0 - 1e-6;
        EXPECT_NEAR((1.0 - f(x)) / (1.0 - x), 1.0, 1e-6);
    }
    const auto f = matching_urn(0.3, 1);
    EXPECT_NEAR((1.0 - f(1.0 - 1e-6)) / 1e-6, 1.0, 5e-6);
}

TEST(BuildUrnFunction, MeanPreservingIntegrandIdentity) {
    // f(x) = sum_y 2 x y^2 / (x y + (1-x)(1-y)) * mass(y) under a uniform prior
    for (double eps : {0.1, 0.3}) {
        const SignalModel model = eps_model(eps);
        const auto f = build_urn_function(model, PriorRule::degroot(),
                                          DecisionRule::probability_matching(), 1);
        const BeliefDistribution p = belief_distribution(model, 0.5);
        for (int i = 1; i < 100; ++i) {
            const double x = static_cast<double>(i) / 100.0;
            double integral = 0.0;
            for (const auto& atom : p.atoms) {
                const double y = atom.value;
                integral += 2.0 * x * y * y / (x * y + (1.0 - x) * (1.0 - y)) * atom.mass;
            }
            EXPECT_NEAR(f(x), integral, 1e-12);
        }
    }
}

TEST(DriftSignScan, MatchingDrifts) {
    const DriftScan up = drift_sign_scan(matching_urn(0.2, 1), 99);
    EXPECT_EQ(up.classification, DriftClass::all_above);
    EXPECT_GT(up.min_abs_margin, 0.0);
    EXPECT_NEAR(matching_urn(0.2, 1)(0.5) - 0.5, 0.08, 1e-15);  // 2 eps^2 at the midpoint

    const DriftScan down = drift_sign_scan(matching_urn(0.2, 0), 99);
    EXPECT_EQ(down.classification, DriftClass::all_below);
}

TEST(DriftSignScan, ThresholdIsMixed) {
    const auto f = build_urn_function(eps_model(0.1), PriorRule::degroot(),
                                      DecisionRule::bayes_threshold(), 0);
    const DriftScan scan = drift_sign_scan(f, 99);
    EXPECT_EQ(scan.classification, DriftClass::mixed);
    ASSERT_TRUE(scan.witness_above.has_value());
    ASSERT_TRUE(scan.witness_below.has_value());
    EXPECT_GE(*scan.witness_above, 0.6);
    EXPECT_LT(*scan.witness_below, 0.6);
    EXPECT_THROW(drift_sign_scan(f, 2), InputError);
}

TEST(FindFixedPoints, MatchingTouchesBoundaries) {
    const FixedPointReport report = find_fixed_points(matching_urn(0.2, 1));
    EXPECT_FALSE(report.degenerate_identity);
    bool touch_at_one = false;
    for (const auto& c : report.crossings) {
        EXPECT_EQ(c.kind, CrossingKind::touchpoint);  // no interior crossings
        EXPECT_TRUE(c.x < 1e-3 || c.x > 1.0 - 1e-3);
        if (c.x > 1.0 - 1e-3) touch_at_one = true;
    }
    EXPECT_TRUE(touch_at_one);
    EXPECT_LT(report.boundary_f0, 1e-6);
    EXPECT_GT(report.boundary_f1, 1.0 - 1e-6);
}

TEST(FindFixedPoints, ThresholdJumps) {
    const auto f = build_urn_function(eps_model(0.1), PriorRule::degroot(),
                                      DecisionRule::bayes_threshold(), 0);
    const FixedPointReport report = find_fixed_points(f);
    bool up_near_06 = false;
    bool touch_near_04 = false;
    for (const auto& c : report.crossings) {
        if (c.kind == CrossingKind::unstable_upcrossing && std::fabs(c.x - 0.6) < 1e-3)
            up_near_06 = true;
        if (c.kind == CrossingKind::touchpoint && std::fabs(c.x - 0.4) < 1e-3)
            touch_near_04 = true;
        EXPECT_NE(c.kind, CrossingKind::stable_downcrossing);
    }
    EXPECT_TRUE(up_near_06);
    EXPECT_TRUE(touch_near_04);
}

TEST(FindFixedPoints, IdentityIsDegenerate) {
    const FixedPointReport report = find_fixed_points(UrnFunction::identity());
    EXPECT_TRUE(report.degenerate_identity);
}

TEST(FindFixedPoints, InteriorCrossingBrackets) {
    // f = 0.7 constant: single stable fixed point at 0.7
    const FixedPointReport report = find_fixed_points(UrnFunction::constant(0.7));
    ASSERT_EQ(report.crossings.size(), 1u);
    EXPECT_EQ(report.crossings[0].kind, CrossingKind::stable_downcrossing);
    EXPECT_NEAR(report.crossings[0].x, 0.7, 1e-6);
    EXPECT_LE(report.crossings[0].lo, report.crossings[0].x);
    EXPECT_GE(report.crossings[0].hi, report.crossings[0].x);
}

TEST(SimulateUrn, DeterministicAbsorption) {
    const UrnTrajectory traj = simulate_urn(UrnFunction::constant(1.0), UrnState{1, 1}, 5, 99);
    ASSERT_EQ(traj.size(), 6u);
    const double expect[] = {1.0 / 2, 2.0 / 3, 3.0 / 4, 4.0 / 5, 5.0 / 6, 6.0 / 7};
    for (int i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(traj[i].x, expect[i]);
    EXPECT_EQ(traj[0].increment, -1);
    EXPECT_EQ(traj[0].t, 3u);
    EXPECT_EQ(traj.back().k, 6u);

    const UrnTrajectory down = simulate_urn(UrnFunction::constant(0.0), UrnState{1, 1}, 5, 99);
    for (std::size_t i = 0; i < down.size(); ++i)
        EXPECT_DOUBLE_EQ(down[i].x, 1.0 / static_cast<double>(2 + i));
}

TEST(SimulateUrn, SeedDeterminism) {
    const auto f = matching_urn(0.2, 1);
    const UrnTrajectory a = simulate_urn(f, UrnState{1, 1}, 200, 1234);
    const UrnTrajectory b = simulate_urn(f, UrnState{1, 1}, 200, 1234);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].k, b[i].k);
        EXPECT_EQ(a[i].increment, b[i].increment);
    }
    const UrnTrajectory c = simulate_urn(f, UrnState{1, 1}, 200, 1235);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].k != c[i].k) any_diff = true;
    EXPECT_TRUE(any_diff);
}

TEST(SimulateUrn, SignalActionDisciplineNeedsKernel) {
    EXPECT_THROW(simulate_urn(UrnFunction::constant(0.5), UrnState{1, 1}, 10, 1,
                              UrnDrawDiscipline::signal_action),
                 InputError);
    // kernel-backed functions support both disciplines
    const UrnTrajectory t = simulate_urn(matching_urn(0.2, 1), UrnState{1, 1}, 10, 1,
                                         UrnDrawDiscipline::signal_action);
    EXPECT_EQ(t.size(), 11u);
}

TEST(CoupledSimulate, IdenticalAndExtreme) {
    const auto f = matching_urn(0.2, 1);
    const auto [hi, lo] = coupled_simulate(f, f, UrnState{1, 1}, 100, 7);
    for (std::size_t i = 0; i < hi.size(); ++i) EXPECT_EQ(hi[i].k, lo[i].k);

    const auto [one, zero] =
        coupled_simulate(UrnFunction::constant(1.0), UrnFunction::constant(0.0), UrnState{1, 1},
                         5, 7);
    EXPECT_DOUBLE_EQ(one.back().x, 6.0 / 7.0);
    EXPECT_DOUBLE_EQ(zero.back().x, 1.0 / 7.0);
}

TEST(CoupledSimulate, PathwiseDomination) {
    const auto f_hi = matching_urn(0.3, 1);
    const auto f_lo = matching_urn(0.1, 1);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto [hi, lo] = coupled_simulate(f_hi, f_lo, UrnState{1, 1}, 10000, seed);
        for (std::size_t i = 0; i < hi.size(); ++i) EXPECT_GE(hi[i].x, lo[i].x);
    }
}

TEST(CoupledSimulate, RejectsNonDominatingPair) {
    EXPECT_THROW(coupled_simulate(matching_urn(0.1, 1), matching_urn(0.3, 1), UrnState{1, 1},
                                  100, 7),
                 InputError);
}

TEST(CoupledSimulate, DetectsMidPathViolation) {
    // f_hi dominates f_lo on the pre-check grid but dips below it on a set
    // the grid misses; the pathwise assertion must catch it with the step.
    const UrnFunction f_hi(
        [](double x) { return std::fabs(x - 1.0 / 3.0) < 1e-6 ? 0.1 : 0.9; }, "dipped");
    const UrnFunction f_lo = UrnFunction::constant(0.5);
    bool caught = false;
    for (std::uint64_t seed = 0; seed < 64 && !caught; ++seed) {
        RandomStream probe(seed);
        const double u = probe.uniform();
        if (!(u >= 0.1 && u < 0.5)) continue;  // splits the coupled pair at step 1
        try {
            coupled_simulate(f_hi, f_lo, UrnState{2, 1}, 10, seed);  // x0 = 1/3
            FAIL() << "coupling violation went undetected";
        } catch (const CouplingViolatedError& e) {
            caught = true;
            EXPECT_EQ(e.step, 1u);
        }
    }
    EXPECT_TRUE(caught);
}

TEST(VerifyDominance, Examples) {
    const auto f = matching_urn(0.2, 1);
    const DominanceResult self = verify_dominance(f, f, 99);
    EXPECT_TRUE(self.dominates);
    EXPECT_FALSE(self.strict);
    EXPECT_DOUBLE_EQ(self.worst_margin, 0.0);

    const DominanceResult fwd = verify_dominance(matching_urn(0.3, 1), matching_urn(0.1, 1), 99);
    EXPECT_TRUE(fwd.dominates);
    EXPECT_TRUE(fwd.strict);

    const DominanceResult rev = verify_dominance(matching_urn(0.1, 1), matching_urn(0.3, 1), 99);
    EXPECT_FALSE(rev.dominates);
    EXPECT_LT(rev.worst_margin, 0.0);
    EXPECT_GT(rev.worst_x, 0.0);
}

TEST(UrnState, Validation) {
    EXPECT_THROW(UrnState(0, 1), InputError);
    EXPECT_THROW(UrnState(1, 0), InputError);
    const UrnState s{2, 3};
    EXPECT_DOUBLE_EQ(s.x(), 0.6);
    EXPECT_EQ(s.t(), 6u);
}

}  // namespace
