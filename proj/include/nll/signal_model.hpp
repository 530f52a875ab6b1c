#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nll/common.hpp"

namespace nll {

inline constexpr double kProbabilityTol = 1e-12;
// Two signals inducing private beliefs closer than this collapse to one atom.
inline constexpr double kBeliefMergeTol = 1e-12;

// ---------------------------------------------------------------------------
// A finite information structure: prior mu on state 1 plus the two
// state-conditional distributions over a finite signal alphabet.
// ---------------------------------------------------------------------------
class SignalModel {
  public:
    SignalModel(double mu, std::vector<std::string> signals,
                std::vector<double> f0, std::vector<double> f1)
        : mu_(mu),
          signals_(std::move(signals)),
          f0_(std::move(f0)),
          f1_(std::move(f1)) {
        validate();
    }

    double mu() const { return mu_; }
    const std::vector<std::string>& signals() const { return signals_; }
    const std::vector<double>& f0() const { return f0_; }
    const std::vector<double>& f1() const { return f1_; }
    std::size_t size() const { return signals_.size(); }

    double likelihood(int state, std::size_t s) const {
        return state == 1 ? f1_[s] : f0_[s];
    }

    // True iff f0 and f1 have identical supports.
    bool mutually_absolutely_continuous() const { return mac_; }

    std::size_t index_of(const std::string& name) const {
        auto it = std::find(signals_.begin(), signals_.end(), name);
        if (it == signals_.end())
            throw InputError("unknown signal identifier: " + name);
        return static_cast<std::size_t>(it - signals_.begin());
    }

  private:
    void validate() {
        if (!(mu_ > 0.0 && mu_ < 1.0))
            throw InputError("mu must lie in (0,1)");
        if (signals_.empty())
            throw InputError("signal alphabet must be nonempty");
        if (f0_.size() != signals_.size() || f1_.size() != signals_.size())
            throw InputError("f0/f1 length must match the signal alphabet");
        double s0 = 0.0, s1 = 0.0;
        bool informative = false;
        mac_ = true;
        for (std::size_t i = 0; i < signals_.size(); ++i) {
            if (f0_[i] < 0.0 || f1_[i] < 0.0)
                throw InputError("signal probabilities must be nonnegative");
            s0 += f0_[i];
            s1 += f1_[i];
            if (std::fabs(f0_[i] - f1_[i]) > kProbabilityTol) informative = true;
            if ((f0_[i] == 0.0) != (f1_[i] == 0.0)) mac_ = false;
        }
        if (std::fabs(s0 - 1.0) > kProbabilityTol ||
            std::fabs(s1 - 1.0) > kProbabilityTol)
            throw InputError("f0 and f1 must each sum to 1");
        if (!informative)
            throw InputError("uninformative structure: f0 == f1");
    }

    double mu_;
    std::vector<std::string> signals_;
    std::vector<double> f0_;
    std::vector<double> f1_;
    bool mac_ = true;
};

// Two signals, Pr(s_w | w) = 1/2 + epsilon for each state.
struct BinarySymmetricModel {
    double epsilon;

    explicit BinarySymmetricModel(double eps) : epsilon(eps) {
        if (!(eps > 0.0 && eps < 0.5))
            throw InputError("epsilon must lie in (0, 1/2)");
    }

    SignalModel to_model(double mu = 0.5) const {
        const double hi = 0.5 + epsilon;
        const double lo = 0.5 - epsilon;
        return SignalModel(mu, {"s0", "s1"}, {hi, lo}, {lo, hi});
    }
};

// ---------------------------------------------------------------------------
// Belief arithmetic.
// ---------------------------------------------------------------------------

// p(s) = P(state 1 | s) under a uniform prior: f1 / (f0 + f1).
inline double private_belief(const SignalModel& model, std::size_t s) {
    if (s >= model.size()) throw InputError("signal index out of range");
    const double a = model.f1()[s];
    const double b = model.f0()[s];
    if (a + b <= 0.0)
        throw DegenerateSignalError("signal has zero likelihood in both states");
    return a / (a + b);
}

inline double private_belief(const SignalModel& model, const std::string& name) {
    return private_belief(model, model.index_of(name));
}

// Posterior p*b / (p*b + (1-p)(1-b)). Priors 0 and 1 are absorbing; the two
// 0/0 corners are rejected rather than given a convention.
inline double bayes_posterior(double p, double b) {
    if (p < 0.0 || p > 1.0 || b < 0.0 || b > 1.0)
        throw InputError("beliefs must lie in [0,1]");
    if ((p == 1.0 && b == 0.0) || (p == 0.0 && b == 1.0))
        throw UndefinedPosteriorError("0/0 posterior at (p,b)=(" +
                                      std::to_string(p) + "," + std::to_string(b) + ")");
    if (b == 0.0 || b == 1.0) return b;
    const double num = p * b;
    const double den = num + (1.0 - p) * (1.0 - b);
    return num / den;
}

// p_mu(s): private belief updated onto the prior mu.
inline double posterior_given_prior(const SignalModel& model, std::size_t s, double mu) {
    return bayes_posterior(private_belief(model, s), mu);
}

// ---------------------------------------------------------------------------
// Distribution of the posterior belief p_mu(s), as a finite atom list.
// ---------------------------------------------------------------------------
struct BeliefAtom {
    double value;
    double mass;
};

struct BeliefDistribution {
    std::vector<BeliefAtom> atoms;  // sorted by value, merged within tolerance
    double mean = 0.0;
    double variance = 0.0;
    double support_lo = 0.0;
    double support_hi = 1.0;

    double cdf(double x) const {
        double acc = 0.0;
        for (const auto& a : atoms)
            if (a.value <= x + kBeliefMergeTol) acc += a.mass;
        return acc;
    }
};

enum class StateCondition { none, state0, state1 };

inline BeliefDistribution belief_distribution(const SignalModel& model, double mu,
                                              StateCondition cond = StateCondition::none) {
    if (!(mu > 0.0 && mu < 1.0)) throw InputError("mu must lie in (0,1)");

    std::vector<BeliefAtom> raw;
    raw.reserve(model.size());
    for (std::size_t s = 0; s < model.size(); ++s) {
        const double w0 = model.f0()[s];
        const double w1 = model.f1()[s];
        if (w0 + w1 <= 0.0) continue;  // carries no probability under any state
        double mass = 0.0;
        switch (cond) {
            case StateCondition::none: mass = mu * w1 + (1.0 - mu) * w0; break;
            case StateCondition::state0: mass = w0; break;
            case StateCondition::state1: mass = w1; break;
        }
        if (mass == 0.0) continue;
        raw.push_back({posterior_given_prior(model, s, mu), mass});
    }

    std::sort(raw.begin(), raw.end(),
              [](const BeliefAtom& a, const BeliefAtom& b) { return a.value < b.value; });

    BeliefDistribution out;
    for (const auto& atom : raw) {
        if (!out.atoms.empty() &&
            atom.value - out.atoms.back().value <= kBeliefMergeTol) {
            // merge, keeping the mass-weighted location
            BeliefAtom& last = out.atoms.back();
            const double m = last.mass + atom.mass;
            last.value = (last.value * last.mass + atom.value * atom.mass) / m;
            last.mass = m;
        } else {
            out.atoms.push_back(atom);
        }
    }

    double mean = 0.0;
    for (const auto& a : out.atoms) mean += a.value * a.mass;
    double var = 0.0;
    for (const auto& a : out.atoms) var += a.mass * (a.value - mean) * (a.value - mean);
    out.mean = mean;
    out.variance = var;
    out.support_lo = out.atoms.front().value;
    out.support_hi = out.atoms.back().value;
    return out;
}

// Variance of the private-belief distribution under a uniform prior; the
// informativeness measure used for heterogeneous sequences.
inline double private_belief_variance(const SignalModel& model) {
    return belief_distribution(model, 0.5).variance;
}

// The binary symmetric structure whose belief distribution under mu = 1/2
// has variance exactly v: two atoms at 1/2 +- sqrt(v).
inline BinarySymmetricModel dominated_binary_model(double v) {
    if (!(v > 0.0 && v < 0.25))
        throw InputError("variance bound must lie in (0, 1/4)");
    return BinarySymmetricModel(std::sqrt(v));
}

// ---------------------------------------------------------------------------
// First-order stochastic dominance of g1 over g0.
// ---------------------------------------------------------------------------
struct FosdResult {
    bool dominates = false;  // CDF of g1 <= CDF of g0 everywhere
    bool strict = false;     // strict inequality somewhere
};

inline FosdResult check_fosd(const BeliefDistribution& g1, const BeliefDistribution& g0) {
    std::vector<double> grid;
    grid.reserve(g1.atoms.size() + g0.atoms.size());
    for (const auto& a : g1.atoms) grid.push_back(a.value);
    for (const auto& a : g0.atoms) grid.push_back(a.value);
    std::sort(grid.begin(), grid.end());

    FosdResult res;
    res.dominates = true;
    for (double x : grid) {
        const double c1 = g1.cdf(x);
        const double c0 = g0.cdf(x);
        if (c1 > c0 + kProbabilityTol) res.dominates = false;
        if (c1 < c0 - kProbabilityTol) res.strict = true;
    }
    if (!res.dominates) res.strict = false;
    return res;
}

}  // namespace nll
