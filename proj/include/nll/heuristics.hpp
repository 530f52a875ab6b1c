#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <variant>
#include <vector>

#include "nll/signal_model.hpp"

namespace nll {

// ---------------------------------------------------------------------------
// Increasing continuous maps [0,1] -> [0,1], used for size-invariant prior
// formation. Two representations:
//   - an exact odds-space bias by a constant c (a Bayes update with an
//     imaginary signal of belief c), kept in closed form so inverse pairs
//     compose to the identity at full precision;
//   - a piecewise-linear table for everything else.
// ---------------------------------------------------------------------------
class MonotoneMap {
  public:
    static MonotoneMap identity() { return complementary_bias(0.5); }

    // g(x) = x*c / (c*x + (1-c)(1-x))
    static MonotoneMap complementary_bias(double c) {
        if (!(c > 0.0 && c < 1.0)) throw InputError("bias c must lie in (0,1)");
        MonotoneMap m;
        m.form_ = Form{Bias{c}};
        return m;
    }

    static MonotoneMap piecewise_linear(std::vector<double> breakpoints,
                                        std::vector<double> values) {
        if (breakpoints.size() != values.size() || breakpoints.size() < 2)
            throw InputError("piecewise map needs matching breakpoints/values, >= 2 points");
        if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0)
            throw InputError("piecewise map must cover [0,1]");
        for (std::size_t i = 0; i < breakpoints.size(); ++i) {
            if (values[i] < 0.0 || values[i] > 1.0)
                throw InputError("piecewise map values must lie in [0,1]");
            if (i > 0 && breakpoints[i] <= breakpoints[i - 1])
                throw InputError("breakpoints must be strictly increasing");
            if (i > 0 && values[i] < values[i - 1])
                throw InputError("piecewise map values must be nondecreasing");
        }
        MonotoneMap m;
        m.form_ = Form{Linear{std::move(breakpoints), std::move(values)}};
        return m;
    }

    double operator()(double x) const {
        if (x < 0.0 || x > 1.0) throw InputError("map input must lie in [0,1]");
        if (const Bias* b = std::get_if<Bias>(&form_)) {
            const double num = x * b->c;
            const double den = num + (1.0 - b->c) * (1.0 - x);
            return num / den;  // den > 0: c is interior and x*c, (1-c)(1-x) cannot both vanish
        }
        const Linear& pl = std::get<Linear>(form_);
        auto it = std::upper_bound(pl.xs.begin(), pl.xs.end(), x);
        if (it == pl.xs.begin()) return pl.ys.front();
        if (it == pl.xs.end()) return pl.ys.back();
        const std::size_t hi = static_cast<std::size_t>(it - pl.xs.begin());
        const std::size_t lo = hi - 1;
        const double t = (x - pl.xs[lo]) / (pl.xs[hi] - pl.xs[lo]);
        return pl.ys[lo] + t * (pl.ys[hi] - pl.ys[lo]);
    }

    bool is_complementary_bias() const { return std::holds_alternative<Bias>(form_); }
    double bias() const { return std::get<Bias>(form_).c; }

  private:
    struct Bias {
        double c;
    };
    struct Linear {
        std::vector<double> xs;
        std::vector<double> ys;
    };
    using Form = std::variant<Bias, Linear>;

    MonotoneMap() = default;
    Form form_{Bias{0.5}};
};

// ---------------------------------------------------------------------------
// Prior formation rules b(m,k).
// ---------------------------------------------------------------------------

// d(k,m) = k / (k+m)
inline double degroot_prior(std::uint64_t m, std::uint64_t k) {
    if (m + k == 0) throw EmptyHistoryError("degroot prior of empty history");
    return static_cast<double>(k) / static_cast<double>(m + k);
}

// (q, r) for an information structure: the posterior a one-shot Bayesian
// assigns to state 1 after seeing an isolated action 1 (resp. 0), both under
// a uniform prior.
inline std::pair<double, double> quasibayes_params(const SignalModel& model) {
    double num_hi = 0.0, den_hi = 0.0, num_lo = 0.0, den_lo = 0.0;
    for (std::size_t s = 0; s < model.size(); ++s) {
        const double w0 = model.f0()[s];
        const double w1 = model.f1()[s];
        if (w0 + w1 <= 0.0) continue;
        if (w1 >= w0) {  // p(s) >= 1/2
            num_hi += w1;
            den_hi += w0 + w1;
        } else {
            num_lo += w1;
            den_lo += w0 + w1;
        }
    }
    if (den_hi <= 0.0 || den_lo <= 0.0)
        throw Error("quasi-Bayes prior undefined: one action never occurs");
    return {num_hi / den_hi, num_lo / den_lo};
}

// log-odds of e(k,m); additive in the counts, so it never saturates even for
// counts far beyond where the probability form would round to 0 or 1.
inline double quasibayes_log_odds(double q, double r, std::uint64_t m, std::uint64_t k) {
    if (!(r > 0.0 && r <= 0.5 && q >= 0.5 && q < 1.0 && r < q))
        throw InputError("quasi-Bayes parameters require 0 < r <= 1/2 <= q < 1, r < q");
    return static_cast<double>(k) * std::log(q / (1.0 - q)) +
           static_cast<double>(m) * std::log(r / (1.0 - r));
}

// e(k,m) = q^k r^m / (q^k r^m + (1-q)^k (1-r)^m), evaluated via log-odds.
inline double quasibayes_prior(double q, double r, std::uint64_t m, std::uint64_t k) {
    const double lambda = quasibayes_log_odds(q, r, m, k);
    if (lambda >= 0.0) return 1.0 / (1.0 + std::exp(-lambda));
    const double e = std::exp(lambda);
    return e / (1.0 + e);
}

struct DeGrootPrior {};

struct QuasiBayesPrior {
    double q;
    double r;

    QuasiBayesPrior(double q_, double r_) : q(q_), r(r_) {
        if (!(r > 0.0 && r <= 0.5 && q >= 0.5 && q < 1.0 && r < q))
            throw InputError("quasi-Bayes parameters require 0 < r <= 1/2 <= q < 1, r < q");
    }
    explicit QuasiBayesPrior(const SignalModel& model) {
        auto [qq, rr] = quasibayes_params(model);
        q = qq;
        r = rr;
    }
};

struct SizeInvariantPrior {
    MonotoneMap g;
};

struct TabularPrior {
    std::map<std::pair<std::uint64_t, std::uint64_t>, double> table;  // (m,k) -> prior
};

class PriorRule {
  public:
    using Variant = std::variant<DeGrootPrior, QuasiBayesPrior, SizeInvariantPrior, TabularPrior>;

    PriorRule(Variant v) : v_(std::move(v)) {}  // NOLINT: implicit by design

    static PriorRule degroot() { return PriorRule(DeGrootPrior{}); }
    static PriorRule quasibayes(double q, double r) { return PriorRule(QuasiBayesPrior(q, r)); }
    static PriorRule quasibayes(const SignalModel& m) { return PriorRule(QuasiBayesPrior(m)); }
    static PriorRule size_invariant(MonotoneMap g) {
        return PriorRule(SizeInvariantPrior{std::move(g)});
    }
    static PriorRule tabular(std::map<std::pair<std::uint64_t, std::uint64_t>, double> t) {
        return PriorRule(TabularPrior{std::move(t)});
    }

    const Variant& variant() const { return v_; }
    bool is_quasibayes() const { return std::holds_alternative<QuasiBayesPrior>(v_); }
    const QuasiBayesPrior& quasibayes_params_ref() const { return std::get<QuasiBayesPrior>(v_); }

    // Size-invariant rules are exactly those expressible as b(m,k) = g(k/(m+k)).
    bool size_representable() const {
        return std::holds_alternative<DeGrootPrior>(v_) ||
               std::holds_alternative<SizeInvariantPrior>(v_);
    }

    // g such that b(m,k) = g(k/(m+k)); only for size-representable rules.
    double proportion_prior(double x) const {
        if (std::holds_alternative<DeGrootPrior>(v_)) return x;
        if (const auto* si = std::get_if<SizeInvariantPrior>(&v_)) return si->g(x);
        throw NotSizeInvariantError("prior rule depends on raw counts, not the proportion");
    }

  private:
    Variant v_;
};

inline double form_prior(const PriorRule& rule, std::uint64_t m, std::uint64_t k) {
    return std::visit(
        [&](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, DeGrootPrior>) {
                return degroot_prior(m, k);
            } else if constexpr (std::is_same_v<T, QuasiBayesPrior>) {
                return quasibayes_prior(r.q, r.r, m, k);
            } else if constexpr (std::is_same_v<T, SizeInvariantPrior>) {
                return r.g(degroot_prior(m, k));
            } else {
                auto it = r.table.find({m, k});
                if (it == r.table.end())
                    throw MissingEntryError("tabular prior has no entry for (m,k)=(" +
                                            std::to_string(m) + "," + std::to_string(k) + ")");
                return it->second;
            }
        },
        rule.variant());
}

// ---------------------------------------------------------------------------
// Decision rules sigma: posterior belief -> probability of action 1.
// Nondecreasing, continuous at 0 and 1, one-sidedly continuous in between.
// ---------------------------------------------------------------------------

enum class ContinuitySide { left, right };

struct ProbabilityMatching {};

struct BayesThreshold {};

// sigma(y) = (1-c) y / ((1-c) y + c (1-y)): the odds-space inverse of the
// complementary bias map with the same c.
struct ComplementaryRule {
    double c;
    explicit ComplementaryRule(double c_) : c(c_) {
        if (!(c > 0.0 && c < 1.0)) throw InputError("complementary c must lie in (0,1)");
    }
};

// Step function with interior breakpoints; the continuity side fixes the
// value taken exactly at a breakpoint.
struct PiecewiseRule {
    std::vector<double> breakpoints;  // strictly increasing, inside (0,1)
    std::vector<double> values;       // one more than breakpoints, nondecreasing
    ContinuitySide side = ContinuitySide::right;

    PiecewiseRule(std::vector<double> bps, std::vector<double> vals,
                  ContinuitySide s = ContinuitySide::right)
        : breakpoints(std::move(bps)), values(std::move(vals)), side(s) {
        if (values.size() != breakpoints.size() + 1)
            throw InputError("piecewise rule needs one more value than breakpoints");
        for (std::size_t i = 0; i < breakpoints.size(); ++i) {
            if (!(breakpoints[i] > 0.0 && breakpoints[i] < 1.0))
                throw InputError("breakpoints must lie strictly inside (0,1)");
            if (i > 0 && breakpoints[i] <= breakpoints[i - 1])
                throw InputError("breakpoints must be strictly increasing");
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] < 0.0 || values[i] > 1.0)
                throw InputError("rule values must lie in [0,1]");
            if (i > 0 && values[i] < values[i - 1])
                throw InputError("decision rule must be nondecreasing");
        }
    }
};

class DecisionRule {
  public:
    using Variant =
        std::variant<ProbabilityMatching, BayesThreshold, ComplementaryRule, PiecewiseRule>;

    DecisionRule(Variant v) : v_(std::move(v)) {}  // NOLINT: implicit by design

    static DecisionRule probability_matching() { return DecisionRule(ProbabilityMatching{}); }
    static DecisionRule bayes_threshold() { return DecisionRule(BayesThreshold{}); }
    static DecisionRule complementary(double c) { return DecisionRule(ComplementaryRule(c)); }
    static DecisionRule piecewise(std::vector<double> bps, std::vector<double> vals,
                                  ContinuitySide s = ContinuitySide::right) {
        return DecisionRule(PiecewiseRule(std::move(bps), std::move(vals), s));
    }

    const Variant& variant() const { return v_; }
    bool is_probability_matching() const {
        return std::holds_alternative<ProbabilityMatching>(v_);
    }

  private:
    Variant v_;
};

inline double evaluate_decision(const DecisionRule& rule, double y) {
    if (y < 0.0 || y > 1.0) throw InputError("posterior must lie in [0,1]");
    return std::visit(
        [&](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, ProbabilityMatching>) {
                return y;
            } else if constexpr (std::is_same_v<T, BayesThreshold>) {
                return y >= 0.5 ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<T, ComplementaryRule>) {
                const double num = (1.0 - r.c) * y;
                const double den = num + r.c * (1.0 - y);
                return num / den;  // den > 0 for interior c
            } else {
                // Piece index = #breakpoints <= y (right-continuous) or
                // #breakpoints < y (left-continuous); they differ only when y
                // sits exactly on a breakpoint.
                const auto piece =
                    r.side == ContinuitySide::right
                        ? std::upper_bound(r.breakpoints.begin(), r.breakpoints.end(), y) -
                              r.breakpoints.begin()
                        : std::lower_bound(r.breakpoints.begin(), r.breakpoints.end(), y) -
                              r.breakpoints.begin();
                return r.values[static_cast<std::size_t>(piece)];
            }
        },
        rule.variant());
}

// The mutually inverse pair (g_c, sigma_c); composing them in either order
// gives the identity in odds space.
inline std::pair<MonotoneMap, DecisionRule> complementary_pair(double c) {
    return {MonotoneMap::complementary_bias(c), DecisionRule::complementary(c)};
}

}  // namespace nll
