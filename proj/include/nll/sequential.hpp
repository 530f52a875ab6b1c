#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nll/urn.hpp"

namespace nll {

enum class Conditioning { draw, state0, state1 };

// ---------------------------------------------------------------------------
// Per-period model sequence: a single structure, or a cyclic list with a
// declared uniform-informativeness bound on the private-belief variance.
// ---------------------------------------------------------------------------
class ModelSequence {
  public:
    explicit ModelSequence(SignalModel model) { cycle_.push_back(std::move(model)); }

    ModelSequence(std::vector<SignalModel> cycle, double min_variance)
        : cycle_(std::move(cycle)), min_variance_(min_variance) {
        if (cycle_.empty()) throw InputError("model cycle must be nonempty");
        if (cycle_.size() > 1000000) throw InputError("model cycle period exceeds 10^6");
        if (!(min_variance_ > 0.0))
            throw InputError("heterogeneous sequences need a positive informativeness bound");
        for (const auto& m : cycle_) {
            if (std::fabs(m.mu() - cycle_.front().mu()) > kProbabilityTol)
                throw InputError("all models in a cycle must share the prior mu");
            const double v = private_belief_variance(m);
            if (v < min_variance_ - kProbabilityTol)
                throw InformativenessError(
                    "model variance " + std::to_string(v) +
                    " falls below the declared bound " + std::to_string(min_variance_));
        }
    }

    const SignalModel& at_step(std::uint64_t step) const {
        return cycle_[step % cycle_.size()];
    }
    const std::vector<SignalModel>& cycle() const { return cycle_; }
    bool heterogeneous() const { return cycle_.size() > 1; }
    double min_variance() const { return min_variance_; }
    double mu() const { return cycle_.front().mu(); }

  private:
    std::vector<SignalModel> cycle_;
    double min_variance_ = 0.0;
};

struct AgentProcessConfig {
    ModelSequence models;
    PriorRule prior;
    DecisionRule decision;
    UrnState init{1, 1};
    std::uint64_t horizon = 1;
    Conditioning conditioning = Conditioning::draw;

    AgentProcessConfig(ModelSequence m, PriorRule p, DecisionRule d, std::uint64_t h,
                       Conditioning c = Conditioning::draw, UrnState init_ = UrnState{1, 1})
        : models(std::move(m)), prior(std::move(p)), decision(std::move(d)), init(init_),
          horizon(h), conditioning(c) {
        if (horizon < 1) throw InputError("horizon must be at least 1");
    }
};

// ---------------------------------------------------------------------------
// One agent step. Draw discipline: exactly two uniforms, the signal first
// (inverse CDF over the alphabet), then the mixed action (action 1 iff
// u < sigma(posterior), strict).
// ---------------------------------------------------------------------------
struct AgentStep {
    std::size_t signal = 0;
    double prior = 0.5;
    double posterior = 0.5;
    int action = 0;
};

inline AgentStep step_agent(const PriorRule& prior_rule, const DecisionRule& rule,
                            const SignalModel& model, int omega, UrnState history,
                            double u_signal, double u_action) {
    AgentStep out;
    out.signal = detail::draw_signal(omega == 1 ? model.f1() : model.f0(), u_signal);
    out.prior = form_prior(prior_rule, history.m, history.k);
    out.posterior = (out.prior == 0.0 || out.prior == 1.0)
                        ? out.prior
                        : bayes_posterior(private_belief(model, out.signal), out.prior);
    out.action = u_action < evaluate_decision(rule, out.posterior) ? 1 : 0;
    return out;
}

struct AgentRecord {
    std::uint64_t t;  // agent time of the acting agent; m + k = t - 1
    std::uint64_t m;  // history seen by the agent
    std::uint64_t k;
    double x;  // k / (m + k)
    std::uint32_t model_index;
    std::uint32_t signal;
    double prior;
    double posterior;
    int action;
};

struct TrialResult {
    int omega = 1;
    UrnState final_state;
    std::vector<AgentRecord> records;  // filled only when recording was requested
};

namespace detail {

inline int draw_state(Conditioning c, double mu, RandomStream& rng) {
    switch (c) {
        case Conditioning::state0: return 0;
        case Conditioning::state1: return 1;
        default: return rng.uniform() < mu ? 1 : 0;
    }
}

// Core agent loop. The visitor sees every step; keeping it a template lets
// the checkpoint-only callers run without per-step allocation.
template <typename Visitor>
inline TrialResult walk_trial(const AgentProcessConfig& cfg, std::uint64_t seed,
                              Visitor&& visit) {
    RandomStream rng(seed);
    TrialResult result;
    result.omega = draw_state(cfg.conditioning, cfg.models.mu(), rng);

    UrnState state = cfg.init;
    for (std::uint64_t step = 0; step < cfg.horizon; ++step) {
        const std::uint32_t model_index =
            static_cast<std::uint32_t>(step % cfg.models.cycle().size());
        const SignalModel& model = cfg.models.at_step(step);
        const double u_signal = rng.uniform();
        const double u_action = rng.uniform();
        const AgentStep agent =
            step_agent(cfg.prior, cfg.decision, model, result.omega, state, u_signal, u_action);

        AgentRecord rec{state.t(), state.m,
                        state.k,  state.x(),
                        model_index, static_cast<std::uint32_t>(agent.signal),
                        agent.prior, agent.posterior,
                        agent.action};
        visit(step, rec);

        if (agent.action == 1)
            ++state.k;
        else
            ++state.m;
    }
    result.final_state = state;
    return result;
}

}  // namespace detail

inline TrialResult run_trial(const AgentProcessConfig& cfg, std::uint64_t seed,
                             bool record = true) {
    std::vector<AgentRecord> records;
    if (record) records.reserve(cfg.horizon);
    TrialResult result = detail::walk_trial(cfg, seed, [&](std::uint64_t, const AgentRecord& r) {
        if (record) records.push_back(r);
    });
    result.records = std::move(records);
    return result;
}

// Heterogeneous front end; the informativeness bound was validated when the
// ModelSequence was built.
inline TrialResult run_heterogeneous(const AgentProcessConfig& cfg, std::uint64_t seed,
                                     bool record = true) {
    return run_trial(cfg, seed, record);
}

// ---------------------------------------------------------------------------
// n states, n actions. Prior = proportion of each action in the history,
// posterior by Bayes, action sampled from the posterior (probability
// matching). The action is drawn by accumulating posterior mass from the
// highest action index down, so for n = 2 the realized action is exactly
// "1 iff u < posterior on state 1", the binary engine's convention.
// ---------------------------------------------------------------------------
class NStateModel {
  public:
    NStateModel(std::vector<double> mu, std::vector<std::string> signals,
                std::vector<std::vector<double>> likelihoods)
        : mu_(std::move(mu)), signals_(std::move(signals)),
          likelihoods_(std::move(likelihoods)) {
        const std::size_t n = mu_.size();
        if (n < 2) throw InputError("n-state model needs at least 2 states");
        if (likelihoods_.size() != n)
            throw InputError("need one likelihood row per state");
        double total = 0.0;
        for (double w : mu_) {
            if (!(w > 0.0)) throw InputError("state prior must be strictly positive");
            total += w;
        }
        if (std::fabs(total - 1.0) > kProbabilityTol)
            throw InputError("state prior must sum to 1");
        for (const auto& row : likelihoods_) {
            if (row.size() != signals_.size())
                throw InputError("likelihood rows must match the signal alphabet");
            double s = 0.0;
            for (double w : row) {
                if (w < 0.0) throw InputError("likelihoods must be nonnegative");
                s += w;
            }
            if (std::fabs(s - 1.0) > kProbabilityTol)
                throw InputError("each likelihood row must sum to 1");
        }
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) {
                bool distinct = false;
                for (std::size_t s = 0; s < signals_.size(); ++s)
                    if (std::fabs(likelihoods_[a][s] - likelihoods_[b][s]) > kProbabilityTol)
                        distinct = true;
                if (!distinct)
                    throw InputError("states " + std::to_string(a) + " and " +
                                     std::to_string(b) + " have identical signal distributions");
            }
    }

    std::size_t n() const { return mu_.size(); }
    const std::vector<double>& mu() const { return mu_; }
    const std::vector<std::string>& signals() const { return signals_; }
    const std::vector<std::vector<double>>& likelihoods() const { return likelihoods_; }

  private:
    std::vector<double> mu_;
    std::vector<std::string> signals_;
    std::vector<std::vector<double>> likelihoods_;
};

struct NStateRecord {
    std::uint64_t t;
    std::vector<std::uint64_t> counts;  // history before acting; prior = counts / (t-1)
    std::uint32_t signal;
    int action;
};

struct NStateTrialResult {
    std::size_t omega = 0;
    std::vector<std::uint64_t> final_counts;
    std::vector<NStateRecord> records;
};

namespace detail {

template <typename Visitor>
inline NStateTrialResult walk_trial_nstate(const NStateModel& model, std::uint64_t horizon,
                                           std::uint64_t seed, Conditioning conditioning,
                                           std::size_t fixed_state, Visitor&& visit) {
    if (horizon < 1) throw InputError("horizon must be at least 1");
    const std::size_t n = model.n();
    RandomStream rng(seed);

    NStateTrialResult result;
    if (conditioning == Conditioning::draw) {
        // top-index-down accumulation, like the action draw, so the n = 2
        // case realizes the binary engine's "u < mu picks state 1"
        const double u = rng.uniform();
        double acc = 0.0;
        result.omega = 0;
        for (std::size_t i = n; i-- > 0;) {
            acc += model.mu()[i];
            if (u < acc) {
                result.omega = i;
                break;
            }
        }
    } else {
        if (fixed_state >= n) throw InputError("fixed state out of range");
        result.omega = fixed_state;
    }

    std::vector<std::uint64_t> counts(n, 1);  // one synthetic action of each kind
    std::uint64_t total = n;
    std::vector<double> posterior(n);
    const std::vector<double>& lik_omega = model.likelihoods()[result.omega];

    for (std::uint64_t step = 0; step < horizon; ++step) {
        const std::size_t s = draw_signal(lik_omega, rng.uniform());
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            posterior[i] = (static_cast<double>(counts[i]) / static_cast<double>(total)) *
                           model.likelihoods()[i][s];
            norm += posterior[i];
        }
        for (std::size_t i = 0; i < n; ++i) posterior[i] /= norm;

        // accumulate from the top action index down (see class comment)
        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t action = 0;
        for (std::size_t i = n; i-- > 0;) {
            acc += posterior[i];
            if (u < acc) {
                action = i;
                break;
            }
        }

        visit(step, counts, total, s, action);

        ++counts[action];
        ++total;
    }
    result.final_counts = std::move(counts);
    return result;
}

}  // namespace detail

inline NStateTrialResult run_trial_nstate(const NStateModel& model, std::uint64_t horizon,
                                          std::uint64_t seed,
                                          Conditioning conditioning = Conditioning::draw,
                                          std::size_t fixed_state = 0, bool record = true) {
    std::vector<NStateRecord> records;
    if (record) records.reserve(horizon);
    NStateTrialResult result = detail::walk_trial_nstate(
        model, horizon, seed, conditioning, fixed_state,
        [&](std::uint64_t, const std::vector<std::uint64_t>& counts, std::uint64_t total,
            std::size_t s, std::size_t action) {
            if (!record) return;
            NStateRecord rec;
            rec.t = total + 1;
            rec.counts = counts;
            rec.signal = static_cast<std::uint32_t>(s);
            rec.action = static_cast<int>(action);
            records.push_back(std::move(rec));
        });
    result.records = std::move(records);
    return result;
}

// ---------------------------------------------------------------------------
// Random-walk coupling for count-difference prior formation.
//
// l is the number of consecutive 1-actions that outweigh a single 0-action
// in the count-difference prior:
//   l = ceil( ln((1-r)/r) / ln(q/(1-q)) ).
// Note the orientation: ln(r/(1-r)) is negative for r < 1/2, so the ratio
// must put (1-r)/r on top to come out positive. l is the smallest integer
// with l * ln((1-q)/q) + ln((1-r)/r) <= 0, the inequality the coupling
// argument needs, and that inequality is re-checked on the actual floating
// point values (near-tie inputs can push l one above the real-arithmetic
// ceiling).
// ---------------------------------------------------------------------------
inline int compute_block_length(double q, double r) {
    if (!(r > 0.0 && r < 0.5 && q > 0.5 && q < 1.0))
        throw InputError("block length requires 0 < r < 1/2 < q < 1");
    const double lq = std::log(q / (1.0 - q));        // > 0
    const double lr_inv = std::log((1.0 - r) / r);    // > 0
    int l = static_cast<int>(std::ceil(lr_inv / lq));
    if (l < 1) l = 1;
    while (static_cast<double>(l) * lq < lr_inv) ++l;  // guard the inequality in floating point
    return l;
}

struct WalkCoupling {
    double q = 0.0;
    double r = 0.0;
    int l = 1;
    double threshold_b = 0.0;   // prior level at which the walk arms
    double per_step_floor = 0.0;  // v = (3/4)^(1/l)
    bool started = false;
    std::uint64_t start_step = 0;  // zero-based step at which the walk armed
    UrnState start_state;
    std::vector<int> z_path;  // walk positions after each completed block
    std::vector<std::uint64_t> block_steps;  // zero-based step at each block boundary
    bool hit_zero = false;
    bool e_monotone_ok = true;     // count-difference prior never fell below its arming value
    bool integer_slope_ok = true;  // dk >= l * dm held at every block boundary
    double min_in_block_p1 = 1.0;  // worst per-step P(a=1) while the walk was alive
};

// P(a = 1 | prior e, state omega) for the given structure and rule.
inline double action_one_probability(const SignalModel& model, const DecisionRule& rule,
                                     double e, int omega) {
    double acc = 0.0;
    for (std::size_t s = 0; s < model.size(); ++s) {
        const double w = model.likelihood(omega, s);
        if (w == 0.0) continue;
        const double post =
            (e == 0.0 || e == 1.0) ? e : bayes_posterior(private_belief(model, s), e);
        acc += w * evaluate_decision(rule, post);
    }
    return acc;
}

// Smallest prior level b with P(a=1 | e >= b, omega) >= floor, by bisection.
inline double walk_threshold(const SignalModel& model, const DecisionRule& rule, int omega,
                             double floor) {
    if (action_one_probability(model, rule, 1.0, omega) < floor)
        throw Error("decision rule cannot clear the per-step floor even at prior 1");
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (action_one_probability(model, rule, mid, omega) >= floor)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

inline std::pair<TrialResult, WalkCoupling> quasi_walk_coupling(
    const SignalModel& model, const DecisionRule& rule, UrnState start_history,
    std::uint64_t horizon, std::uint64_t seed, int omega = 0, bool record = false) {
    if (!model.mutually_absolutely_continuous())
        throw InputError("walk coupling requires mutually absolutely continuous likelihoods");

    WalkCoupling walk;
    auto [q, r] = quasibayes_params(model);
    walk.q = q;
    walk.r = r;
    walk.l = compute_block_length(q, r);
    walk.per_step_floor = std::pow(0.75, 1.0 / walk.l);
    walk.threshold_b = walk_threshold(model, rule, omega, walk.per_step_floor);

    const double lq = std::log(q / (1.0 - q));
    const double lr = std::log(r / (1.0 - r));
    const double arm_log_odds =
        std::log(walk.threshold_b / (1.0 - walk.threshold_b));

    PriorRule prior = PriorRule::quasibayes(q, r);
    AgentProcessConfig cfg(ModelSequence(model), prior, rule, horizon,
                           omega == 1 ? Conditioning::state1 : Conditioning::state0,
                           start_history);

    int z = 1;
    int ones_in_block = 0;
    bool walk_alive = false;

    auto log_odds_at = [&](const UrnState& s) {
        return quasibayes_log_odds(q, r, s.m, s.k);
    };

    std::vector<AgentRecord> records;
    TrialResult result = detail::walk_trial(cfg, seed, [&](std::uint64_t step,
                                                           const AgentRecord& rec) {
        if (record) records.push_back(rec);
        const UrnState before{rec.m, rec.k};

        if (!walk.started && log_odds_at(before) > arm_log_odds) {
            walk.started = true;
            walk.start_step = step;
            walk.start_state = before;
            walk.z_path.push_back(1);
            walk.block_steps.push_back(step);
            z = 1;
            ones_in_block = 0;
            walk_alive = true;
        }
        if (!walk_alive) return;

        walk.min_in_block_p1 =
            std::min(walk.min_in_block_p1,
                     action_one_probability(cfg.models.at_step(step), rule, rec.prior, omega));

        bool boundary = false;
        if (rec.action == 1) {
            if (++ones_in_block == walk.l) {
                ++z;
                ones_in_block = 0;
                boundary = true;
            }
        } else {
            --z;
            ones_in_block = 0;
            boundary = true;
        }
        if (!boundary) return;

        walk.z_path.push_back(z);
        walk.block_steps.push_back(step + 1);
        if (z <= 0) {
            walk.hit_zero = true;
            walk_alive = false;
            return;
        }
        // Good path so far: the count advantage since arming must outweigh
        // the block slope, which forces the prior's log odds upward. Both
        // checks are evaluated in the factored form whose terms are
        // individually nonnegative, so they are exact.
        const std::uint64_t dk = (rec.action == 1 ? rec.k + 1 : rec.k) - walk.start_state.k;
        const std::uint64_t dm = (rec.action == 0 ? rec.m + 1 : rec.m) - walk.start_state.m;
        if (dk < static_cast<std::uint64_t>(walk.l) * dm) walk.integer_slope_ok = false;
        const double slack = static_cast<double>(walk.l) * lq + lr;  // >= 0 by construction
        const double gain =
            static_cast<double>(dm) * slack +
            static_cast<double>(dk - static_cast<std::uint64_t>(walk.l) * dm) * lq;
        if (!(gain >= 0.0)) walk.e_monotone_ok = false;
    });
    result.records = std::move(records);
    return {std::move(result), std::move(walk)};
}

}  // namespace nll
