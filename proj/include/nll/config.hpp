#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nll/analysis.hpp"

namespace nll {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Strict parsing: unknown keys are rejected everywhere, since silently
// ignored keys are the classic reproducibility bug.
// ---------------------------------------------------------------------------
inline void require_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& ctx) {
    if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) ok = true;
        if (!ok) throw ConfigError(ctx + ": unknown key \"" + it.key() + "\"");
    }
}

inline const json& require_field(const json& j, const char* key, const std::string& ctx) {
    if (!j.is_object() || !j.contains(key))
        throw ConfigError(ctx + ": missing required key \"" + std::string(key) + "\"");
    return j.at(key);
}

// FNV-1a over the canonical (sorted-key, whitespace-free) dump.
inline std::string canonical_config_hash(const json& j) {
    const std::string bytes = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

// ---------------------------------------------------------------------------
// Domain types from JSON.
// ---------------------------------------------------------------------------
inline SignalModel parse_signal_model(const json& j) {
    if (j.contains("binary_symmetric")) {
        require_keys(j, {"binary_symmetric"}, "model");
        const json& bs = j.at("binary_symmetric");
        require_keys(bs, {"epsilon"}, "model.binary_symmetric");
        return BinarySymmetricModel(require_field(bs, "epsilon", "model.binary_symmetric")
                                        .get<double>())
            .to_model();
    }
    require_keys(j, {"mu", "signals", "f0", "f1"}, "model");
    return SignalModel(require_field(j, "mu", "model").get<double>(),
                       require_field(j, "signals", "model").get<std::vector<std::string>>(),
                       require_field(j, "f0", "model").get<std::vector<double>>(),
                       require_field(j, "f1", "model").get<std::vector<double>>());
}

inline json signal_model_to_json(const SignalModel& m) {
    return json{{"mu", m.mu()}, {"signals", m.signals()}, {"f0", m.f0()}, {"f1", m.f1()}};
}

inline PriorRule parse_prior_rule(const json& j, const SignalModel* model_for_qb) {
    require_keys(j, {"degroot", "quasibayes", "size_invariant"}, "prior");
    if (j.size() != 1) throw ConfigError("prior: expected exactly one variant key");
    if (j.contains("degroot")) {
        require_keys(j.at("degroot"), {}, "prior.degroot");
        return PriorRule::degroot();
    }
    if (j.contains("quasibayes")) {
        const json& qb = j.at("quasibayes");
        require_keys(qb, {"q", "r", "from_model"}, "prior.quasibayes");
        if (qb.contains("from_model")) {
            if (qb.size() != 1 || !qb.at("from_model").get<bool>())
                throw ConfigError("prior.quasibayes: from_model must stand alone and be true");
            if (model_for_qb == nullptr)
                throw ConfigError("prior.quasibayes: from_model needs a single binary model");
            return PriorRule::quasibayes(*model_for_qb);
        }
        return PriorRule::quasibayes(require_field(qb, "q", "prior.quasibayes").get<double>(),
                                     require_field(qb, "r", "prior.quasibayes").get<double>());
    }
    const json& si = j.at("size_invariant");
    require_keys(si, {"complementary_c", "breakpoints", "values"}, "prior.size_invariant");
    if (si.contains("complementary_c")) {
        if (si.size() != 1)
            throw ConfigError("prior.size_invariant: complementary_c must stand alone");
        return PriorRule::size_invariant(
            MonotoneMap::complementary_bias(si.at("complementary_c").get<double>()));
    }
    return PriorRule::size_invariant(MonotoneMap::piecewise_linear(
        require_field(si, "breakpoints", "prior.size_invariant").get<std::vector<double>>(),
        require_field(si, "values", "prior.size_invariant").get<std::vector<double>>()));
}

inline DecisionRule parse_decision_rule(const json& j) {
    require_keys(j, {"probability_matching", "bayes_threshold", "complementary", "piecewise"},
                 "decision");
    if (j.size() != 1) throw ConfigError("decision: expected exactly one variant key");
    if (j.contains("probability_matching")) {
        require_keys(j.at("probability_matching"), {}, "decision.probability_matching");
        return DecisionRule::probability_matching();
    }
    if (j.contains("bayes_threshold")) {
        require_keys(j.at("bayes_threshold"), {}, "decision.bayes_threshold");
        return DecisionRule::bayes_threshold();
    }
    if (j.contains("complementary")) {
        const json& c = j.at("complementary");
        require_keys(c, {"c"}, "decision.complementary");
        return DecisionRule::complementary(require_field(c, "c", "decision.complementary")
                                               .get<double>());
    }
    const json& pw = j.at("piecewise");
    require_keys(pw, {"breakpoints", "values", "continuity"}, "decision.piecewise");
    ContinuitySide side = ContinuitySide::right;
    if (pw.contains("continuity")) {
        const std::string s = pw.at("continuity").get<std::string>();
        if (s == "left")
            side = ContinuitySide::left;
        else if (s == "right")
            side = ContinuitySide::right;
        else
            throw ConfigError("decision.piecewise: continuity must be \"left\" or \"right\"");
    }
    return DecisionRule::piecewise(
        require_field(pw, "breakpoints", "decision.piecewise").get<std::vector<double>>(),
        require_field(pw, "values", "decision.piecewise").get<std::vector<double>>(), side);
}

inline const char* decision_rule_name(const DecisionRule& r) {
    return std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ProbabilityMatching>) return "probability_matching";
            else if constexpr (std::is_same_v<T, BayesThreshold>) return "bayes_threshold";
            else if constexpr (std::is_same_v<T, ComplementaryRule>) return "complementary";
            else return "piecewise";
        },
        r.variant());
}

inline const char* prior_rule_name(const PriorRule& r) {
    return std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, DeGrootPrior>) return "degroot";
            else if constexpr (std::is_same_v<T, QuasiBayesPrior>) return "quasibayes";
            else if constexpr (std::is_same_v<T, SizeInvariantPrior>) return "size_invariant";
            else return "tabular";
        },
        r.variant());
}

inline Conditioning parse_conditioning(const std::string& s, std::size_t* fixed_state) {
    if (s == "draw") return Conditioning::draw;
    if (s.rfind("state", 0) == 0) {
        const std::string idx = s.substr(5);
        if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError("conditioning: expected \"draw\" or \"state<N>\"");
        const std::size_t state = std::stoul(idx);
        if (fixed_state) *fixed_state = state;
        if (state == 0) return Conditioning::state0;
        return Conditioning::state1;  // n-state runs carry the index separately
    }
    throw ConfigError("conditioning: expected \"draw\" or \"state<N>\"");
}

// ---------------------------------------------------------------------------
// Full simulate configuration.
// ---------------------------------------------------------------------------
struct SimulateConfig {
    std::optional<AgentProcessConfig> binary;
    std::optional<NStateModel> nstate;
    std::size_t nstate_fixed_state = 0;
    Conditioning conditioning = Conditioning::draw;
    std::uint64_t horizon = 1;
    std::uint64_t trials = 1;
    std::vector<std::uint64_t> checkpoints;
    std::vector<double> herd_thresholds{0.1, 0.5, 0.9};
    std::uint64_t trajectory_sample = 0;
    json echo;  // the validated config, canonicalized
};

inline SimulateConfig parse_simulate_config(const json& j) {
    require_keys(j,
                 {"model", "models", "nstate", "prior", "decision", "horizon", "trials",
                  "checkpoints", "conditioning", "init", "herd_thresholds",
                  "trajectory_sample"},
                 "config");
    SimulateConfig cfg;
    cfg.echo = j;

    const int source_count = static_cast<int>(j.contains("model")) +
                             static_cast<int>(j.contains("models")) +
                             static_cast<int>(j.contains("nstate"));
    if (source_count != 1)
        throw ConfigError("config: exactly one of \"model\", \"models\", \"nstate\" required");

    cfg.horizon = require_field(j, "horizon", "config").get<std::uint64_t>();
    if (cfg.horizon < 1) throw ConfigError("config: horizon must be at least 1");
    if (j.contains("trials")) cfg.trials = j.at("trials").get<std::uint64_t>();
    if (cfg.trials < 1) throw ConfigError("config: trials must be at least 1");
    if (j.contains("checkpoints"))
        cfg.checkpoints = j.at("checkpoints").get<std::vector<std::uint64_t>>();
    if (cfg.checkpoints.empty()) cfg.checkpoints = {cfg.horizon};
    for (std::uint64_t c : cfg.checkpoints)
        if (c < 1 || c > cfg.horizon)
            throw ConfigError("config: checkpoints must lie in [1, horizon]");
    if (j.contains("herd_thresholds"))
        cfg.herd_thresholds = j.at("herd_thresholds").get<std::vector<double>>();
    if (j.contains("trajectory_sample"))
        cfg.trajectory_sample = j.at("trajectory_sample").get<std::uint64_t>();
    if (j.contains("conditioning"))
        cfg.conditioning = parse_conditioning(j.at("conditioning").get<std::string>(),
                                              &cfg.nstate_fixed_state);

    if (j.contains("nstate")) {
        if (j.contains("prior") || j.contains("decision"))
            throw ConfigError(
                "config: n-state runs use proportion priors with probability matching; "
                "\"prior\" and \"decision\" are not configurable");
        const json& ns = j.at("nstate");
        require_keys(ns, {"mu", "signals", "likelihoods"}, "nstate");
        cfg.nstate.emplace(require_field(ns, "mu", "nstate").get<std::vector<double>>(),
                           require_field(ns, "signals", "nstate").get<std::vector<std::string>>(),
                           require_field(ns, "likelihoods", "nstate")
                               .get<std::vector<std::vector<double>>>());
        if (cfg.nstate_fixed_state >= cfg.nstate->n())
            throw ConfigError("config: conditioning state out of range");
        return cfg;
    }

    std::optional<ModelSequence> models;
    std::optional<SignalModel> single;
    if (j.contains("model")) {
        single = parse_signal_model(j.at("model"));
        models.emplace(*single);
    } else {
        const json& ms = j.at("models");
        require_keys(ms, {"cycle", "min_variance"}, "models");
        std::vector<SignalModel> cycle;
        for (const json& mj : require_field(ms, "cycle", "models"))
            cycle.push_back(parse_signal_model(mj));
        const double v = require_field(ms, "min_variance", "models").get<double>();
        models.emplace(std::move(cycle), v);
    }

    PriorRule prior =
        parse_prior_rule(require_field(j, "prior", "config"), single ? &*single : nullptr);
    if (prior.is_quasibayes()) {
        for (const SignalModel& m : models->cycle())
            if (!m.mutually_absolutely_continuous())
                throw ConfigError(
                    "config: quasibayes prior formation requires mutually absolutely "
                    "continuous signal distributions");
    }
    DecisionRule decision = parse_decision_rule(require_field(j, "decision", "config"));

    UrnState init{1, 1};
    if (j.contains("init")) {
        const json& ij = j.at("init");
        require_keys(ij, {"m", "k"}, "init");
        try {
            init = UrnState(require_field(ij, "m", "init").get<std::uint64_t>(),
                            require_field(ij, "k", "init").get<std::uint64_t>());
        } catch (const InputError& e) {
            throw ConfigError(std::string("init: ") + e.what());
        }
    }
    if (cfg.nstate_fixed_state > 1)
        throw ConfigError("config: binary runs condition on state 0 or 1");

    cfg.binary.emplace(std::move(*models), std::move(prior), std::move(decision), cfg.horizon,
                       cfg.conditioning, init);
    return cfg;
}

// ---------------------------------------------------------------------------
// Urn command configuration: a (model, prior, decision) triple, or a named
// diagnostic urn function.
// ---------------------------------------------------------------------------
struct UrnConfig {
    std::optional<SignalModel> model;
    std::optional<PriorRule> prior;
    std::optional<DecisionRule> decision;
    std::optional<UrnFunction> override_function;  // identity / constant diagnostics
    json echo;
};

inline UrnConfig parse_urn_config(const json& j) {
    UrnConfig cfg;
    cfg.echo = j;
    if (j.contains("urn_function")) {
        require_keys(j, {"urn_function"}, "urn config");
        const json& u = j.at("urn_function");
        require_keys(u, {"identity", "constant"}, "urn_function");
        if (u.size() != 1) throw ConfigError("urn_function: expected exactly one variant");
        if (u.contains("identity")) {
            cfg.override_function = UrnFunction::identity();
        } else {
            const json& c = u.at("constant");
            require_keys(c, {"value"}, "urn_function.constant");
            cfg.override_function =
                UrnFunction::constant(require_field(c, "value", "urn_function.constant")
                                          .get<double>());
        }
        return cfg;
    }
    require_keys(j, {"model", "prior", "decision"}, "urn config");
    cfg.model = parse_signal_model(require_field(j, "model", "urn config"));
    cfg.prior = parse_prior_rule(require_field(j, "prior", "urn config"), &*cfg.model);
    cfg.decision = parse_decision_rule(require_field(j, "decision", "urn config"));
    return cfg;
}

// ---------------------------------------------------------------------------
// Sweep configuration: a base simulate config plus a parameter grid.
// ---------------------------------------------------------------------------
struct SweepConfig {
    json base;
    std::vector<double> epsilon_axis;
    std::vector<json> prior_axis;
    std::vector<json> decision_axis;
    json echo;

    std::size_t cells() const {
        const std::size_t e = epsilon_axis.empty() ? 1 : epsilon_axis.size();
        const std::size_t p = prior_axis.empty() ? 1 : prior_axis.size();
        const std::size_t d = decision_axis.empty() ? 1 : decision_axis.size();
        return e * p * d;
    }
};

inline SweepConfig parse_sweep_config(const json& j) {
    require_keys(j, {"base", "grid"}, "sweep config");
    SweepConfig cfg;
    cfg.echo = j;
    cfg.base = require_field(j, "base", "sweep config");
    const json& grid = require_field(j, "grid", "sweep config");
    require_keys(grid, {"epsilon", "prior", "decision"}, "grid");
    if (grid.contains("epsilon"))
        cfg.epsilon_axis = grid.at("epsilon").get<std::vector<double>>();
    if (grid.contains("prior"))
        for (const json& p : grid.at("prior")) cfg.prior_axis.push_back(p);
    if (grid.contains("decision"))
        for (const json& d : grid.at("decision")) cfg.decision_axis.push_back(d);
    const bool any_axis = !cfg.epsilon_axis.empty() || !cfg.prior_axis.empty() ||
                          !cfg.decision_axis.empty();
    if (!any_axis) throw ConfigError("sweep config: grid has no cells");
    return cfg;
}

// Materialize one sweep cell as a full simulate config.
inline json sweep_cell_json(const SweepConfig& cfg, std::size_t eps_i, std::size_t prior_i,
                            std::size_t dec_i) {
    json cell = cfg.base;
    if (!cfg.epsilon_axis.empty()) {
        cell.erase("model");
        cell.erase("models");
        cell["model"] = json{{"binary_symmetric", {{"epsilon", cfg.epsilon_axis[eps_i]}}}};
    }
    if (!cfg.prior_axis.empty()) cell["prior"] = cfg.prior_axis[prior_i];
    if (!cfg.decision_axis.empty()) cell["decision"] = cfg.decision_axis[dec_i];
    return cell;
}

// ---------------------------------------------------------------------------
// Result serialization.
// ---------------------------------------------------------------------------
inline json group_stat_to_json(const GroupStat& g) {
    return json{{"n", g.n},
                {"p_correct", g.estimate},
                {"ci_lo", g.ci_lo},
                {"ci_hi", g.ci_hi},
                {"expected_correct", g.expected_correct},
                {"x_quantiles", g.x_quantiles}};
}

inline json experiment_result_to_json(const ExperimentResult& r) {
    json stats = json::array();
    for (const auto& s : r.stats)
        stats.push_back(json{{"step", s.step},
                             {"t", s.t},
                             {"overall", group_stat_to_json(s.overall)},
                             {"state0", group_stat_to_json(s.state0)},
                             {"state1", group_stat_to_json(s.state1)}});
    return json{{"trials", r.trials},
                {"checkpoints", r.checkpoints},
                {"quantile_levels", kQuantileLevels},
                {"stats", stats},
                {"herd",
                 json{{"thresholds", r.herd_thresholds},
                      {"above", r.herd_above},
                      {"below", r.herd_below}}}};
}

inline json nstate_result_to_json(const NStateExperimentResult& r) {
    json stats = json::array();
    for (const auto& s : r.stats)
        stats.push_back(json{{"step", s.step},
                             {"p_correct", s.p_correct},
                             {"ci_lo", s.ci_lo},
                             {"ci_hi", s.ci_hi},
                             {"proportion_quantiles", s.proportion_quantiles}});
    return json{{"trials", r.trials},
                {"checkpoints", r.checkpoints},
                {"quantile_levels", kQuantileLevels},
                {"stats", stats}};
}

inline json fixed_point_report_to_json(const FixedPointReport& r) {
    json crossings = json::array();
    for (const auto& c : r.crossings)
        crossings.push_back(
            json{{"x", c.x}, {"kind", Crossing::name(c.kind)}, {"lo", c.lo}, {"hi", c.hi}});
    return json{{"crossings", crossings},
                {"boundary", json{{"f0", r.boundary_f0}, {"f1", r.boundary_f1}}},
                {"degenerate_identity", r.degenerate_identity}};
}

inline json calibration_entry_to_json(const CalibrationEntry& e) {
    return json{{"metric", e.metric},     {"config_hash", e.config_hash},
                {"seed", e.seed},         {"value", e.value},
                {"trials", e.trials},     {"estimate", e.estimate},
                {"quantile", e.quantile}};
}

inline CalibrationEntry calibration_entry_from_json(const json& j) {
    require_keys(j, {"metric", "config_hash", "seed", "value", "trials", "estimate", "quantile"},
                 "calibration entry");
    CalibrationEntry e;
    e.metric = require_field(j, "metric", "calibration").get<std::string>();
    e.config_hash = require_field(j, "config_hash", "calibration").get<std::string>();
    e.seed = require_field(j, "seed", "calibration").get<std::uint64_t>();
    e.value = require_field(j, "value", "calibration").get<double>();
    e.trials = require_field(j, "trials", "calibration").get<std::uint64_t>();
    if (j.contains("estimate")) e.estimate = j.at("estimate").get<double>();
    if (j.contains("quantile")) e.quantile = j.at("quantile").get<double>();
    return e;
}

}  // namespace nll
