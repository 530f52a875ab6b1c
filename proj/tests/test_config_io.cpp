#include <gtest/gtest.h>

#include <algorithm>

#include "nll/config.hpp"
#include "nll/io.hpp"

using namespace nll;

namespace {

json minimal_sim_config() {
    return json{{"model", {{"binary_symmetric", {{"epsilon", 0.2}}}}},
                {"prior", {{"degroot", json::object()}}},
                {"decision", {{"probability_matching", json::object()}}},
                {"horizon", 100},
                {"trials", 10}};
}

TEST(ParseSignalModel, FullAndShorthand) {
    const SignalModel full = parse_signal_model(
        json{{"mu", 0.4}, {"signals", {"a", "b"}}, {"f0", {0.6, 0.4}}, {"f1", {0.3, 0.7}}});
    EXPECT_DOUBLE_EQ(full.mu(), 0.4);
    EXPECT_EQ(full.signals()[1], "b");

    const SignalModel bs =
        parse_signal_model(json{{"binary_symmetric", {{"epsilon", 0.2}}}});
    EXPECT_DOUBLE_EQ(bs.mu(), 0.5);
    EXPECT_NEAR(bs.f1()[1], 0.7, 1e-15);

    EXPECT_THROW(parse_signal_model(json{{"binary_symmetric", {{"eps", 0.2}}}}), ConfigError);
    EXPECT_THROW(parse_signal_model(json{{"mu", 0.4}, {"signals", {"a"}}, {"f0", {1.0}}}),
                 ConfigError);  // missing f1
}

TEST(ParseRules, AllVariants) {
    EXPECT_NO_THROW(parse_prior_rule(json{{"degroot", json::object()}}, nullptr));
    EXPECT_NO_THROW(parse_prior_rule(json{{"quasibayes", {{"q", 0.7}, {"r", 0.3}}}}, nullptr));
    EXPECT_NO_THROW(
        parse_prior_rule(json{{"size_invariant", {{"complementary_c", 0.6}}}}, nullptr));
    EXPECT_NO_THROW(parse_prior_rule(
        json{{"size_invariant",
              {{"breakpoints", {0.0, 1.0}}, {"values", {0.0, 1.0}}}}},
        nullptr));
    EXPECT_THROW(parse_prior_rule(json{{"degroot", json::object()}, {"extra", 1}}, nullptr),
                 ConfigError);
    EXPECT_THROW(parse_prior_rule(json{{"quasibayes", {{"from_model", true}}}}, nullptr),
                 ConfigError);  // no model in scope

    EXPECT_NO_THROW(parse_decision_rule(json{{"bayes_threshold", json::object()}}));
    EXPECT_NO_THROW(parse_decision_rule(json{{"complementary", {{"c", 0.3}}}}));
    const DecisionRule pw = parse_decision_rule(
        json{{"piecewise",
              {{"breakpoints", {0.5}}, {"values", {0.1, 0.9}}, {"continuity", "left"}}}});
    EXPECT_DOUBLE_EQ(evaluate_decision(pw, 0.5), 0.1);
    EXPECT_THROW(parse_decision_rule(json{{"piecewise",
                                           {{"breakpoints", {0.5}},
                                            {"values", {0.1, 0.9}},
                                            {"continuity", "middle"}}}}),
                 ConfigError);
}

TEST(ParseSimulateConfig, MinimalAndDefaults) {
    const SimulateConfig cfg = parse_simulate_config(minimal_sim_config());
    ASSERT_TRUE(cfg.binary.has_value());
    EXPECT_EQ(cfg.trials, 10u);
    EXPECT_EQ(cfg.checkpoints, std::vector<std::uint64_t>{100});  // defaults to the horizon
    EXPECT_EQ(cfg.binary->conditioning, Conditioning::draw);
    EXPECT_EQ(cfg.binary->init.m, 1u);
}

TEST(ParseSimulateConfig, RejectsUnknownKeys) {
    json j = minimal_sim_config();
    j["typo_key"] = 1;
    EXPECT_THROW(parse_simulate_config(j), ConfigError);
    json j2 = minimal_sim_config();
    j2["model"]["binary_symmetric"]["extra"] = 1;
    EXPECT_THROW(parse_simulate_config(j2), ConfigError);
}

TEST(ParseSimulateConfig, ModelSourceExclusivity) {
    json j = minimal_sim_config();
    j["models"] = {{"cycle", {json{{"binary_symmetric", {{"epsilon", 0.1}}}}}},
                   {"min_variance", 0.005}};
    EXPECT_THROW(parse_simulate_config(j), ConfigError);  // both model and models
    j.erase("model");
    EXPECT_NO_THROW(parse_simulate_config(j));
}

TEST(ParseSimulateConfig, QuasiBayesRequiresMutualAbsoluteContinuity) {
    json j = minimal_sim_config();
    j["prior"] = {{"quasibayes", {{"from_model", true}}}};
    EXPECT_NO_THROW(parse_simulate_config(j));

    j["model"] = {{"mu", 0.5},
                  {"signals", {"a", "b"}},
                  {"f0", {0.0, 1.0}},
                  {"f1", {0.5, 0.5}}};
    EXPECT_THROW(parse_simulate_config(j), ConfigError);

    // explicit parameters hit the same precondition
    j["prior"] = {{"quasibayes", {{"q", 0.7}, {"r", 0.3}}}};
    EXPECT_THROW(parse_simulate_config(j), ConfigError);
}

TEST(ParseSimulateConfig, FromModelResolvesParams) {
    json j = minimal_sim_config();
    j["prior"] = {{"quasibayes", {{"from_model", true}}}};
    const SimulateConfig cfg = parse_simulate_config(j);
    const auto& qb = cfg.binary->prior.quasibayes_params_ref();
    EXPECT_NEAR(qb.q, 0.7, 1e-15);
    EXPECT_NEAR(qb.r, 0.3, 1e-15);
}

TEST(ParseSimulateConfig, CheckpointValidation) {
    json j = minimal_sim_config();
    j["checkpoints"] = {10, 200};
    EXPECT_THROW(parse_simulate_config(j), ConfigError);  // beyond horizon
    j["checkpoints"] = {10, 100};
    EXPECT_NO_THROW(parse_simulate_config(j));
}

TEST(ParseSimulateConfig, NState) {
    const json j{{"nstate",
                  {{"mu", {1.0 / 3, 1.0 / 3, 1.0 / 3}},
                   {"signals", {"a", "b", "c"}},
                   {"likelihoods",
                    {{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}}}}},
                 {"horizon", 50},
                 {"conditioning", "state2"}};
    const SimulateConfig cfg = parse_simulate_config(j);
    ASSERT_TRUE(cfg.nstate.has_value());
    EXPECT_EQ(cfg.nstate_fixed_state, 2u);

    json bad = j;
    bad["prior"] = {{"degroot", json::object()}};
    EXPECT_THROW(parse_simulate_config(bad), ConfigError);
}

TEST(ParseSimulateConfig, BinaryStateRange) {
    json j = minimal_sim_config();
    j["conditioning"] = "state2";
    EXPECT_THROW(parse_simulate_config(j), ConfigError);
    j["conditioning"] = "state1";
    EXPECT_EQ(parse_simulate_config(j).binary->conditioning, Conditioning::state1);
}

TEST(ParseSweepConfig, GridCells) {
    const json j{{"base", minimal_sim_config()},
                 {"grid",
                  {{"epsilon", {0.05, 0.1, 0.2, 0.3}},
                   {"decision",
                    {json{{"probability_matching", json::object()}},
                     json{{"bayes_threshold", json::object()}}}}}}};
    const SweepConfig sweep = parse_sweep_config(j);
    EXPECT_EQ(sweep.cells(), 8u);

    const json cell = sweep_cell_json(sweep, 1, 0, 1);
    const SimulateConfig cfg = parse_simulate_config(cell);
    EXPECT_NEAR(cfg.binary->models.cycle()[0].f1()[1], 0.6, 1e-15);  // eps = 0.1

    EXPECT_THROW(parse_sweep_config(json{{"base", minimal_sim_config()},
                                         {"grid", json::object()}}),
                 ConfigError);  // empty grid
}

TEST(ParseUrnConfig, ModelAndOverrides) {
    const UrnConfig cfg = parse_urn_config(
        json{{"model", {{"binary_symmetric", {{"epsilon", 0.2}}}}},
             {"prior", {{"degroot", json::object()}}},
             {"decision", {{"probability_matching", json::object()}}}});
    EXPECT_TRUE(cfg.model.has_value());

    const UrnConfig ident =
        parse_urn_config(json{{"urn_function", {{"identity", json::object()}}}});
    ASSERT_TRUE(ident.override_function.has_value());
    EXPECT_DOUBLE_EQ((*ident.override_function)(0.3), 0.3);

    const UrnConfig con =
        parse_urn_config(json{{"urn_function", {{"constant", {{"value", 0.7}}}}}});
    EXPECT_DOUBLE_EQ((*con.override_function)(0.1), 0.7);
}

TEST(CanonicalHash, StableAndSensitive) {
    const json a{{"b", 1}, {"a", 2}};
    const json b{{"a", 2}, {"b", 1}};  // same content, different insertion order
    EXPECT_EQ(canonical_config_hash(a), canonical_config_hash(b));
    const json c{{"a", 2}, {"b", 2}};
    EXPECT_NE(canonical_config_hash(a), canonical_config_hash(c));
}

TEST(ConfigRoundTrip, EchoReparses) {
    const SimulateConfig cfg = parse_simulate_config(minimal_sim_config());
    const SimulateConfig again = parse_simulate_config(cfg.echo);
    EXPECT_EQ(canonical_config_hash(cfg.echo), canonical_config_hash(again.echo));
}

TEST(CalibrationEntry, RoundTrip) {
    CalibrationEntry e;
    e.metric = "m";
    e.config_hash = "abc";
    e.seed = 9;
    e.value = 0.5;
    e.trials = 100;
    e.estimate = 0.6;
    e.quantile = 0.01;
    const CalibrationEntry back = calibration_entry_from_json(calibration_entry_to_json(e));
    EXPECT_EQ(back.metric, e.metric);
    EXPECT_DOUBLE_EQ(back.value, e.value);
    EXPECT_EQ(back.trials, e.trials);
}

TEST(Formatting, ShortestRoundTrip) {
    EXPECT_EQ(fmt(0.5), "0.5");
    EXPECT_EQ(fmt(1.0 / 3.0), "0.3333333333333333");
    EXPECT_EQ(std::stod(fmt(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(CsvWriters, RowCounts) {
    const UrnTrajectory traj =
        simulate_urn(UrnFunction::constant(1.0), UrnState{1, 1}, 3, 1);
    const std::string csv = urn_trajectory_csv(traj);
    EXPECT_EQ(static_cast<int>(std::count(csv.begin(), csv.end(), '\n')), 5);  // header + 4 rows
    EXPECT_EQ(csv.substr(0, 18), "t,m,k,x,increment\n");

    AgentProcessConfig cfg(ModelSequence(BinarySymmetricModel(0.2).to_model()),
                           PriorRule::degroot(), DecisionRule::probability_matching(), 20);
    const ExperimentResult r = estimate_learning(cfg, 10, {10, 20}, 3);
    const std::string rcsv = experiment_result_csv("run", r);
    EXPECT_EQ(static_cast<int>(std::count(rcsv.begin(), rcsv.end(), '\n')),
              1 + 2 * 3);  // header + checkpoints x groups
}

TEST(ParseConditioning, Forms) {
    std::size_t fixed = 99;
    EXPECT_EQ(parse_conditioning("draw", &fixed), Conditioning::draw);
    EXPECT_EQ(parse_conditioning("state0", &fixed), Conditioning::state0);
    EXPECT_EQ(fixed, 0u);
    EXPECT_EQ(parse_conditioning("state1", &fixed), Conditioning::state1);
    EXPECT_THROW(parse_conditioning("both", &fixed), ConfigError);
}

}  // namespace
