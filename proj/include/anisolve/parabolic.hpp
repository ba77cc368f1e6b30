#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "anisolve/elliptic.hpp"

namespace anisolve {

/// Nonlocal scalar map b(u) that sets the exponents for a whole time slab.
struct NonlocalMap {
    enum class Kind { GradNorm, LqNorm };
    Kind kind = Kind::GradNorm;
    // GradNorm: the exponent p^- of the directional gradient norm;
    // LqNorm: the Lebesgue exponent q >= 1.
    double param = 2.0;

    void check() const {
        if (kind == Kind::LqNorm && param < 1.0)
            throw StructuralError("Lq nonlocal map requires q >= 1");
        if (kind == Kind::GradNorm && param <= 1.0)
            throw StructuralError("gradient-norm nonlocal map requires p^- > 1");
    }
};

/// b(u): directional surrogate (sum_i modular(D_i u, p^-))^{1/p^-} for the
/// gradient norm, or the plain weighted Lq norm of u.
inline double b_eval(const GridFunction& u, const NonlocalMap& map) {
    map.check();
    if (map.kind == NonlocalMap::Kind::GradNorm) {
        double total = 0.0;
        for (int a = 0; a < u.grid().dim(); ++a)
            total += modular(edge_derivative(u, a), map.param);
        return std::pow(total, 1.0 / map.param);
    }
    const Grid& g = u.grid();
    std::vector<double> terms(u.size());
    for (std::size_t j = 0; j < u.size(); ++j)
        terms[j] = g.nodeWeight(j) * std::pow(std::abs(u[j]), map.param);
    return std::pow(pairwise_sum(terms), 1.0 / map.param);
}

/// u_t - div(|d_i u|^{p_i(b(u))-2} d_i u) = f(x,t) on (0,1)^d x (0,T],
/// u = 0 on the lateral boundary, u(.,0) = u0.
struct ParabolicProblem {
    Grid grid;
    ExponentSpec exponents; // functions of the scalar s = b(u)
    NonlocalMap b;
    SpaceTimeFn source;                              // f(x, t)
    std::function<double(std::array<double, 2>)> u0; // initial data
    double horizon = 1.0;                            // T
    int steps = 1;                                   // N0, h = T/N0
    bool epsilonContinuation = false;                // restore the eps schedule per step

    double stepSize() const { return horizon / steps; }
};

struct StepParams {
    double tolB = 1e-9; // relative stop on the scalar fixed point
    int maxBIter = 100;
    double thetaB = 0.5; // damping of the scalar iteration
    NewtonParams newton;
    ContinuationParams continuation; // only used with epsilonContinuation

    void check() const {
        if (!(thetaB > 0.0 && thetaB <= 1.0))
            throw StructuralError("scalar damping must lie in (0,1]");
        if (tolB <= 0.0 || maxBIter < 1)
            throw StructuralError("invalid scalar fixed-point parameters");
    }
};

/// Steklov average [f]_h(x, t) = (1/h) integral_t^{t+h} f(x, tau) dtau,
/// computed nodewise by 4-panel composite Simpson (exact through cubics).
inline GridFunction steklov_average(const SpaceTimeFn& f, double t, double h,
                                    const Grid& grid) {
    if (h <= 0.0) throw StructuralError("Steklov average needs h > 0");
    static constexpr double w[5] = {1.0, 4.0, 2.0, 4.0, 1.0};
    GridFunction out(grid, false);
    for (std::size_t j = 0; j < grid.nodeCount(); ++j) {
        auto x = grid.nodeCoord(j);
        double acc = 0.0;
        for (int k = 0; k < 5; ++k) {
            double tau = t + h * (static_cast<double>(k) / 4.0);
            try {
                acc += w[k] * f(x, tau);
            } catch (const std::exception& ex) {
                throw EvalError("source at node (x=" + detail::fmt_g(x[0]) + ", y=" +
                                detail::fmt_g(x[1]) + ", tau=" + detail::fmt_g(tau) +
                                "): " + ex.what());
            }
        }
        out[j] = acc / 12.0;
    }
    return out;
}

struct StepReport {
    SolveStatus status = SolveStatus::Converged;
    int scalarIterations = 0;
    double sFinal = 0.0; // final scalar iterate
    double bOfU = 0.0;   // b(u_k); |bOfU - sFinal| <= tolB (1 + |sFinal|)
    std::vector<double> sHistory;
    FrozenReport lastFrozen;
};

namespace detail {

inline ExponentField exponents_at(const ParabolicProblem& prob, double s) {
    std::vector<double> per(static_cast<std::size_t>(prob.grid.dim()));
    for (int a = 0; a < prob.grid.dim(); ++a) {
        try {
            per[static_cast<std::size_t>(a)] = prob.exponents.eval(a, s);
        } catch (const std::exception& ex) {
            throw EvalError("exponent p_" + std::to_string(a + 1) + " at s = " +
                            fmt_g(s) + ": " + ex.what());
        }
    }
    return ExponentField::constant(prob.grid, per);
}

inline FrozenSolution solve_step_problem(const ParabolicProblem& prob,
                                         const ExponentField& q,
                                         const GridFunction& uPrev,
                                         const GridFunction& source,
                                         const StepParams& params) {
    const double sigma = 1.0 / prob.stepSize();
    const double pPlus = std::max(prob.exponents.declaredMax(), q.max());
    GridFunction warm = uPrev;
    if (prob.epsilonContinuation) {
        std::vector<double> schedule;
        for (double eps = params.continuation.eps0;; eps *= params.continuation.epsReduction) {
            schedule.push_back(std::max(eps, params.continuation.epsMin));
            if (eps <= params.continuation.epsMin) break;
        }
        schedule.push_back(0.0);
        FrozenSolution sol{GridFunction(prob.grid, true), {}};
        for (double eps : schedule) {
            FrozenProblem fp(prob.grid, q, eps, pPlus, sigma, uPrev, source);
            sol = solve_frozen(fp, warm, params.newton);
            if (sol.report.status != SolveStatus::Converged) return sol;
            warm = sol.u;
        }
        return sol;
    }
    FrozenProblem fp(prob.grid, q, 0.0, pPlus, sigma, uPrev, source);
    return solve_frozen(fp, warm, params.newton);
}

} // namespace detail

/// One Rothe step: damped scalar fixed point on s = b(u_s), where u_s solves
/// the implicit-Euler frozen problem with spatially constant exponents
/// p_i(s). Starts from s = b(u_prev).
inline std::pair<GridFunction, StepReport> step(const GridFunction& uPrev, int k,
                                                const ParabolicProblem& prob,
                                                const StepParams& params = {}) {
    params.check();
    require_same_grid(uPrev.grid(), prob.grid, "parabolic step");
    const double h = prob.stepSize();
    GridFunction source = steklov_average(prob.source, (k - 1) * h, h, prob.grid);

    StepReport rep;
    double s = b_eval(uPrev, prob.b);
    rep.sHistory.push_back(s);
    ExponentField q = detail::exponents_at(prob, s);
    GridFunction u(prob.grid, true);

    for (int l = 0; l < params.maxBIter; ++l) {
        FrozenSolution sol = detail::solve_step_problem(prob, q, uPrev, source, params);
        rep.lastFrozen = sol.report;
        rep.scalarIterations = l + 1;
        if (sol.report.status != SolveStatus::Converged) {
            rep.status = sol.report.status;
            return {std::move(sol.u), std::move(rep)};
        }
        u = std::move(sol.u);
        double bval = b_eval(u, prob.b);
        double sNext = (1.0 - params.thetaB) * s + params.thetaB * bval;
        rep.sHistory.push_back(sNext);
        rep.bOfU = bval;

        ExponentField qNext = detail::exponents_at(prob, sNext);
        // exponents stationary in s: u is already the fixed-point solve,
        // so accept with s = b(u) directly (constant-exponent fast path)
        if (qNext.drift(q) <= 1e-14 * (1.0 + q.max())) {
            rep.sFinal = bval;
            rep.sHistory.back() = bval;
            return {std::move(u), std::move(rep)};
        }
        bool sClose = std::abs(sNext - s) <= params.tolB * (1.0 + std::abs(s));
        bool consistent = std::abs(bval - s) <= params.tolB * (1.0 + std::abs(s));
        s = sNext;
        q = std::move(qNext);
        if (sClose && consistent) {
            rep.sFinal = sNext;
            return {std::move(u), std::move(rep)};
        }
    }
    rep.status = SolveStatus::NonConvergence;
    rep.sFinal = s;
    return {std::move(u), std::move(rep)};
}

/// Time trajectory u_0, u_1, ..., u_{N0} with the piecewise-constant
/// interpolant u_h(., t) = u_k for t in ((k-1)h, kh] and u_h(., 0) = u_0.
class Trajectory {
public:
    Trajectory(std::vector<GridFunction> states, std::vector<double> scalars, double horizon)
        : states_(std::move(states)), scalars_(std::move(scalars)), horizon_(horizon) {}

    std::size_t stepCount() const { return states_.size() - 1; }
    double horizon() const { return horizon_; }
    const GridFunction& state(std::size_t k) const { return states_[k]; }
    double scalar(std::size_t k) const { return scalars_[k]; }

    const GridFunction& at(double t) const {
        if (t < 0.0 || t > horizon_ + 1e-12 * horizon_)
            throw StructuralError("time " + detail::fmt_g(t) + " outside [0, T]");
        if (stepCount() == 0) return states_[0];
        double h = horizon_ / static_cast<double>(stepCount());
        auto k = static_cast<long>(std::ceil(t / h - 1e-12));
        if (k < 0) k = 0;
        if (k > static_cast<long>(stepCount())) k = static_cast<long>(stepCount());
        return states_[static_cast<std::size_t>(k)];
    }

private:
    std::vector<GridFunction> states_;
    std::vector<double> scalars_; // s_k = b(u_k)
    double horizon_;
};

struct ParabolicStepLedger {
    int k;
    double time;
    double s;             // b(u_k)
    double l2NormSq;      // integral of u_k^2
    double gradModular;   // sum_i modular(D_i u_k, q_i)
    double energyLhs;     // l2NormSq + 2h * gradModular
    double energyRhs;     // previous l2NormSq (+ source work when f != 0)
    double sourceWork;    // 2h * <[f]_h, u_k>
    int scalarIterations;
};

struct ParabolicReport {
    SolveStatus status = SolveStatus::Converged;
    std::vector<ParabolicStepLedger> steps;
    int completedSteps = 0;
};

inline ValidationReport validate(const ParabolicProblem& prob) {
    ValidationReport rep;
    try {
        // parabolic cases need the bound condition (p1) only; the Lipschitz
        // condition (p2) matters when exponents vary pointwise with u
        detail::check_exponent_conditions(prob.exponents, prob.grid.dim(), false, rep);
    } catch (const std::exception& ex) {
        rep.checks.push_back({"(p1) exponent bounds", false, ex.what()});
        return rep;
    }

    bool timeOk = prob.horizon > 0.0 && prob.steps >= 1;
    rep.checks.push_back({"time grid", timeOk,
                          timeOk ? ""
                                 : "need T > 0 and N0 >= 1, got T = " +
                                       detail::fmt_g(prob.horizon) + ", N0 = " +
                                       std::to_string(prob.steps)});

    bool bOk = true;
    std::string bWitness;
    try {
        prob.b.check();
    } catch (const std::exception& ex) {
        bOk = false;
        bWitness = ex.what();
    }
    rep.checks.push_back({"nonlocal map", bOk, bWitness});

    bool u0Ok = true;
    std::string u0Witness;
    try {
        for (std::size_t j = 0; j < prob.grid.nodeCount(); ++j) {
            if (!prob.grid.boundaryNode(j)) continue;
            auto x = prob.grid.nodeCoord(j);
            double v = prob.u0(x);
            if (std::abs(v) > 1e-9) {
                u0Ok = false;
                u0Witness = "u0(x=" + detail::fmt_g(x[0]) + ", y=" + detail::fmt_g(x[1]) +
                            ") = " + detail::fmt_g(v) + " violates u = 0 on the boundary";
                break;
            }
        }
    } catch (const std::exception& ex) {
        u0Ok = false;
        u0Witness = ex.what();
    }
    rep.checks.push_back({"initial data", u0Ok, u0Witness});
    return rep;
}

struct ParabolicSolution {
    Trajectory trajectory;
    ParabolicReport report;
};

/// Rothe method: N0 sequential implicit steps, each resolved by the damped
/// scalar fixed point. The ledger records the discrete energy inequality
/// data per step.
inline ParabolicSolution solve_parabolic(const ParabolicProblem& prob,
                                         const StepParams& params = {}) {
    params.check();
    if (prob.horizon <= 0.0 || prob.steps < 1)
        throw StructuralError("parabolic problem needs T > 0 and N0 >= 1");

    const Grid& g = prob.grid;
    const double h = prob.stepSize();
    GridFunction uPrev = sample_dirichlet(g, prob.u0);

    std::vector<GridFunction> states{uPrev};
    std::vector<double> scalars{b_eval(uPrev, prob.b)};
    ParabolicReport rep;

    double prevL2 = l2_norm_sq(uPrev);
    for (int k = 1; k <= prob.steps; ++k) {
        auto [uk, stepRep] = step(uPrev, k, prob, params);
        if (stepRep.status != SolveStatus::Converged) {
            rep.status = stepRep.status;
            Trajectory partial(std::move(states), std::move(scalars), h * (k - 1));
            return {std::move(partial), std::move(rep)};
        }
        ExponentField q = detail::exponents_at(prob, stepRep.sFinal);
        double gradMod = anisotropic_modular(uk, q);
        double l2 = l2_norm_sq(uk);
        GridFunction source = steklov_average(prob.source, (k - 1) * h, h, g);
        double work = 2.0 * h * l2_inner(source, uk);
        rep.steps.push_back({k, k * h, stepRep.bOfU, l2, gradMod,
                             l2 + 2.0 * h * gradMod, prevL2 + work, work,
                             stepRep.scalarIterations});
        scalars.push_back(stepRep.bOfU);
        states.push_back(uk);
        uPrev = std::move(uk);
        prevL2 = l2;
        rep.completedSteps = k;
    }
    Trajectory traj(std::move(states), std::move(scalars), prob.horizon);
    return {std::move(traj), std::move(rep)};
}

} // namespace anisolve
