#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nll/heuristics.hpp"
#include "nll/signal_model.hpp"

namespace nll {

// |f(x) - x| at or below this counts as touching the diagonal.
inline constexpr double kTouchTol = 1e-9;

// ---------------------------------------------------------------------------
// Urn composition (m zero-balls, k one-balls). The process starts from (1,1),
// i.e. the first agent acts at time t = 3 seeing one action of each kind.
// ---------------------------------------------------------------------------
struct UrnState {
    std::uint64_t m = 1;
    std::uint64_t k = 1;

    UrnState() = default;
    UrnState(std::uint64_t m_, std::uint64_t k_) : m(m_), k(k_) {
        if (m == 0 || k == 0)
            throw InputError("urn state needs at least one ball of each kind");
    }

    double x() const { return static_cast<double>(k) / static_cast<double>(m + k); }
    std::uint64_t t() const { return m + k + 1; }
};

// ---------------------------------------------------------------------------
// Urn function f: proportion of one-balls -> probability the next ball is a
// one-ball. When built from (model, prior rule, decision rule, state) it
// keeps that kernel so simulations can also realize each step as an explicit
// signal draw followed by a mixed action.
// ---------------------------------------------------------------------------
struct UrnKernel {
    SignalModel model;
    PriorRule prior;
    DecisionRule rule;
    int omega;  // conditioning state, 0 or 1
};

class UrnFunction {
  public:
    UrnFunction(std::function<double(double)> eval, std::string description,
                std::optional<UrnKernel> kernel = std::nullopt)
        : eval_(std::move(eval)), description_(std::move(description)),
          kernel_(std::move(kernel)) {}

    static UrnFunction constant(double p) {
        if (p < 0.0 || p > 1.0) throw InputError("constant urn value must lie in [0,1]");
        return UrnFunction([p](double) { return p; }, "constant(" + std::to_string(p) + ")");
    }

    static UrnFunction identity() {
        return UrnFunction([](double x) { return x; }, "identity");
    }

    double operator()(double x) const {
        if (x < 0.0 || x > 1.0) throw InputError("urn proportion must lie in [0,1]");
        return eval_(x);
    }

    const std::string& description() const { return description_; }
    const std::optional<UrnKernel>& kernel() const { return kernel_; }

  private:
    std::function<double(double)> eval_;
    std::string description_;
    std::optional<UrnKernel> kernel_;
};

// f(x) = sum_s Pr(s | omega) * sigma(posterior(p(s), b(x))). Only defined for
// prior rules that are a function of the proportion alone. At b(x) exactly 0
// or 1 the prior is absorbing and the posterior equals it for every signal,
// which keeps the evaluator total at the endpoints.
inline UrnFunction build_urn_function(const SignalModel& model, const PriorRule& prior,
                                      const DecisionRule& rule, int omega) {
    if (!prior.size_representable())
        throw NotSizeInvariantError(
            "urn function requires a proportion-only prior rule (DeGroot or size-invariant)");
    if (omega != 0 && omega != 1) throw InputError("state must be 0 or 1");

    std::vector<double> weights(model.size());
    std::vector<double> beliefs(model.size());
    for (std::size_t s = 0; s < model.size(); ++s) {
        weights[s] = model.likelihood(omega, s);
        beliefs[s] = weights[s] + model.likelihood(1 - omega, s) > 0.0
                         ? private_belief(model, s)
                         : 0.5;  // zero-weight signal, value irrelevant
    }

    auto eval = [weights, beliefs, prior, rule](double x) {
        const double b = prior.proportion_prior(x);
        double acc = 0.0;
        for (std::size_t s = 0; s < weights.size(); ++s) {
            if (weights[s] == 0.0) continue;
            const double post =
                (b == 0.0 || b == 1.0) ? b : bayes_posterior(beliefs[s], b);
            acc += weights[s] * evaluate_decision(rule, post);
        }
        return acc;
    };
    return UrnFunction(std::move(eval), "urn(omega=" + std::to_string(omega) + ")",
                       UrnKernel{model, prior, rule, omega});
}

// ---------------------------------------------------------------------------
// Drift classification of f(x) - x on an interior grid.
// ---------------------------------------------------------------------------
enum class DriftClass { all_above, all_below, mixed };

struct DriftScan {
    DriftClass classification = DriftClass::mixed;
    double min_abs_margin = 0.0;  // min |f(x) - x| over the grid
    double argmin_x = 0.0;
    std::optional<double> witness_above;  // some x with f(x) > x (mixed case)
    std::optional<double> witness_below;  // some x with f(x) < x

    static const char* name(DriftClass c) {
        switch (c) {
            case DriftClass::all_above: return "all-above";
            case DriftClass::all_below: return "all-below";
            default: return "mixed";
        }
    }
};

inline DriftScan drift_sign_scan(const UrnFunction& f, int grid_size) {
    if (grid_size < 3) throw InputError("drift scan needs a grid of at least 3 points");
    DriftScan scan;
    bool any_above = false, any_below = false;
    scan.min_abs_margin = 2.0;
    for (int i = 1; i <= grid_size; ++i) {
        const double x = static_cast<double>(i) / (grid_size + 1);
        const double d = f(x) - x;
        if (d > 0.0) {
            any_above = true;
            if (!scan.witness_above) scan.witness_above = x;
        }
        if (d < 0.0) {
            any_below = true;
            if (!scan.witness_below) scan.witness_below = x;
        }
        if (std::fabs(d) < scan.min_abs_margin) {
            scan.min_abs_margin = std::fabs(d);
            scan.argmin_x = x;
        }
    }
    scan.classification = any_above && !any_below   ? DriftClass::all_above
                          : any_below && !any_above ? DriftClass::all_below
                                                    : DriftClass::mixed;
    return scan;
}

// ---------------------------------------------------------------------------
// Fixed points of f: sign changes of f(x) - x bracketed on a coarse grid and
// refined by bisection; near-zero stretches reported as touchpoints.
// ---------------------------------------------------------------------------
enum class CrossingKind { stable_downcrossing, unstable_upcrossing, touchpoint };

struct Crossing {
    double x = 0.0;
    CrossingKind kind = CrossingKind::touchpoint;
    double lo = 0.0;  // bracketing interval
    double hi = 0.0;

    static const char* name(CrossingKind k) {
        switch (k) {
            case CrossingKind::stable_downcrossing: return "stable-downcrossing";
            case CrossingKind::unstable_upcrossing: return "unstable-upcrossing";
            default: return "touchpoint";
        }
    }
};

struct FixedPointReport {
    std::vector<Crossing> crossings;  // sorted by location
    double boundary_f0 = 0.0;         // f just inside 0
    double boundary_f1 = 0.0;         // f just inside 1
    bool degenerate_identity = false;
};

inline FixedPointReport find_fixed_points(const UrnFunction& f, int coarse_grid = 10000,
                                          double tol = 1e-10) {
    if (tol <= 0.0) throw InputError("tolerance must be positive");
    if (coarse_grid < 8) throw InputError("coarse grid too small");

    const int n = coarse_grid;
    std::vector<double> xs(static_cast<std::size_t>(n) + 1);
    std::vector<double> ds(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        xs[i] = static_cast<double>(i) / n;
        ds[i] = f(xs[i]) - xs[i];
    }

    FixedPointReport report;
    const double delta = 1e-9;
    report.boundary_f0 = f(delta);
    report.boundary_f1 = f(1.0 - delta);

    auto sgn = [](double d) { return d > kTouchTol ? 1 : d < -kTouchTol ? -1 : 0; };

    bool all_touch = true;
    for (int i = 0; i <= n; ++i)
        if (sgn(ds[i]) != 0) all_touch = false;
    if (all_touch) {
        report.degenerate_identity = true;
        double best = 0.5;
        double bestd = 2.0;
        for (int i = 0; i <= n; ++i)
            if (std::fabs(ds[i]) < bestd) {
                bestd = std::fabs(ds[i]);
                best = xs[i];
            }
        report.crossings.push_back({best, CrossingKind::touchpoint, 0.0, 1.0});
        return report;
    }

    // Bisect a sign change of f(x)-x inside [a,b] down to width tol.
    auto bisect = [&](double a, double b, int sa) {
        while (b - a > tol) {
            const double mid = 0.5 * (a + b);
            const double dm = f(mid) - mid;
            if ((dm > 0.0 ? 1 : -1) == sa)
                a = mid;
            else
                b = mid;
        }
        return 0.5 * (a + b);
    };

    int i = 0;
    while (i <= n) {
        const int si = sgn(ds[i]);
        if (si == 0) {
            // run of grid points on the diagonal
            int j = i;
            while (j + 1 <= n && sgn(ds[j + 1]) == 0) ++j;
            const int left = i - 1;
            const int right = j + 1;
            const double lo = left >= 0 ? xs[left] : 0.0;
            const double hi = right <= n ? xs[right] : 1.0;
            double best = xs[i];
            double bestd = std::fabs(ds[i]);
            for (int kk = i; kk <= j; ++kk)
                if (std::fabs(ds[kk]) < bestd) {
                    bestd = std::fabs(ds[kk]);
                    best = xs[kk];
                }
            const int sl = left >= 0 ? sgn(ds[left]) : 0;
            const int sr = right <= n ? sgn(ds[right]) : 0;
            if (sl != 0 && sr != 0 && sl != sr) {
                // the diagonal stretch separates opposite drift signs
                const CrossingKind kind = sl > 0 ? CrossingKind::stable_downcrossing
                                                 : CrossingKind::unstable_upcrossing;
                report.crossings.push_back({best, kind, lo, hi});
            } else {
                report.crossings.push_back({best, CrossingKind::touchpoint, lo, hi});
            }
            i = j + 1;
            continue;
        }
        if (i + 1 <= n && sgn(ds[i + 1]) == -si) {
            const double x = bisect(xs[i], xs[i + 1], si);
            const CrossingKind kind = si > 0 ? CrossingKind::stable_downcrossing
                                             : CrossingKind::unstable_upcrossing;
            report.crossings.push_back({x, kind, xs[i], xs[i + 1]});
        }
        ++i;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Grid dominance check: f_hi >= f_lo pointwise.
// ---------------------------------------------------------------------------
struct DominanceResult {
    bool dominates = false;
    bool strict = false;        // margin exceeds tolerance somewhere
    double worst_margin = 0.0;  // min of f_hi - f_lo over the grid
    double worst_x = 0.0;
};

inline DominanceResult verify_dominance(const UrnFunction& f_hi, const UrnFunction& f_lo,
                                        int grid_size = 99) {
    if (grid_size < 3) throw InputError("dominance grid needs at least 3 points");
    DominanceResult res;
    res.worst_margin = 2.0;
    double best_margin = -2.0;
    for (int i = 1; i <= grid_size; ++i) {
        const double x = static_cast<double>(i) / (grid_size + 1);
        const double margin = f_hi(x) - f_lo(x);
        if (margin < res.worst_margin) {
            res.worst_margin = margin;
            res.worst_x = x;
        }
        best_margin = std::max(best_margin, margin);
    }
    res.dominates = res.worst_margin >= -kProbabilityTol;
    res.strict = res.dominates && best_margin > kProbabilityTol;
    return res;
}

// ---------------------------------------------------------------------------
// Urn simulation. One ball per step. Default discipline: one uniform per
// step, a one-ball added iff u < f(x) (strict). The signal_action discipline
// realizes the same step law through the kernel's two draws (signal by
// inverse CDF, then the mixed action), matching the agent simulator
// draw-for-draw.
// ---------------------------------------------------------------------------
enum class UrnDrawDiscipline { single_uniform, signal_action };

struct UrnStep {
    std::uint64_t t;  // time of the next agent, m + k + 1
    std::uint64_t m;
    std::uint64_t k;
    double x;
    int increment;  // ball added to reach this row; -1 on the initial row
};

using UrnTrajectory = std::vector<UrnStep>;

namespace detail {

inline std::size_t draw_signal(const std::vector<double>& likelihood, double u) {
    double acc = 0.0;
    for (std::size_t s = 0; s < likelihood.size(); ++s) {
        acc += likelihood[s];
        if (u < acc) return s;
    }
    return likelihood.size() - 1;
}

inline int urn_ball(const UrnFunction& f, double x, RandomStream& rng,
                    UrnDrawDiscipline discipline) {
    if (discipline == UrnDrawDiscipline::single_uniform)
        return rng.uniform() < f(x) ? 1 : 0;
    const auto& kernel = f.kernel();
    if (!kernel)
        throw InputError("signal_action discipline requires an urn function with a kernel");
    const std::vector<double>& lik =
        kernel->omega == 1 ? kernel->model.f1() : kernel->model.f0();
    const std::size_t s = draw_signal(lik, rng.uniform());
    const double b = kernel->prior.proportion_prior(x);
    const double post = (b == 0.0 || b == 1.0)
                            ? b
                            : bayes_posterior(private_belief(kernel->model, s), b);
    return rng.uniform() < evaluate_decision(kernel->rule, post) ? 1 : 0;
}

}  // namespace detail

inline UrnTrajectory simulate_urn(const UrnFunction& f, UrnState init, std::uint64_t horizon,
                                  std::uint64_t seed,
                                  UrnDrawDiscipline discipline = UrnDrawDiscipline::single_uniform) {
    if (horizon < 1) throw InputError("horizon must be at least 1");
    RandomStream rng(seed);
    UrnTrajectory traj;
    traj.reserve(horizon + 1);
    UrnState s = init;
    traj.push_back({s.t(), s.m, s.k, s.x(), -1});
    for (std::uint64_t step = 0; step < horizon; ++step) {
        const int ball = detail::urn_ball(f, s.x(), rng, discipline);
        if (ball == 1)
            ++s.k;
        else
            ++s.m;
        traj.push_back({s.t(), s.m, s.k, s.x(), ball});
    }
    return traj;
}

// Coupled pair of urn processes fed by shared uniforms; valid when f at each
// step of the hi process dominates f_lo pointwise, which forces the hi path
// to stay weakly above. The ordering is asserted at every step.
inline std::pair<UrnTrajectory, UrnTrajectory> coupled_simulate_sequence(
    const std::vector<UrnFunction>& hi_cycle, const UrnFunction& f_lo, UrnState init,
    std::uint64_t horizon, std::uint64_t seed) {
    if (hi_cycle.empty()) throw InputError("empty urn-function cycle");
    for (const auto& f_hi : hi_cycle) {
        const DominanceResult dom = verify_dominance(f_hi, f_lo, 99);
        if (!dom.dominates)
            throw InputError("coupling precondition failed: f_hi < f_lo at x=" +
                             std::to_string(dom.worst_x));
    }

    RandomStream rng(seed);
    UrnState hi = init, lo = init;
    UrnTrajectory traj_hi, traj_lo;
    traj_hi.push_back({hi.t(), hi.m, hi.k, hi.x(), -1});
    traj_lo.push_back({lo.t(), lo.m, lo.k, lo.x(), -1});
    for (std::uint64_t step = 0; step < horizon; ++step) {
        const double u = rng.uniform();
        const UrnFunction& f_hi = hi_cycle[step % hi_cycle.size()];
        const int ball_hi = u < f_hi(hi.x()) ? 1 : 0;
        const int ball_lo = u < f_lo(lo.x()) ? 1 : 0;
        if (ball_hi == 1) ++hi.k; else ++hi.m;
        if (ball_lo == 1) ++lo.k; else ++lo.m;
        traj_hi.push_back({hi.t(), hi.m, hi.k, hi.x(), ball_hi});
        traj_lo.push_back({lo.t(), lo.m, lo.k, lo.x(), ball_lo});
        if (hi.k < lo.k)
            throw CouplingViolatedError("coupled paths crossed at step " + std::to_string(step + 1),
                                        step + 1);
    }
    return {std::move(traj_hi), std::move(traj_lo)};
}

inline std::pair<UrnTrajectory, UrnTrajectory> coupled_simulate(const UrnFunction& f_hi,
                                                                const UrnFunction& f_lo,
                                                                UrnState init,
                                                                std::uint64_t horizon,
                                                                std::uint64_t seed) {
    return coupled_simulate_sequence({f_hi}, f_lo, init, horizon, seed);
}

}  // namespace nll
