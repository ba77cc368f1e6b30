#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "anisolve/exponent_spec.hpp"
#include "anisolve/frozen.hpp"

namespace anisolve {

/// Source term f(x, w): coordinates plus one scalar slot, which carries the
/// iterate value u for elliptic problems and the time t for parabolic ones.
using SpaceTimeFn = std::function<double(std::array<double, 2>, double)>;

/// -div(|d_i u|^{p_i(u)-2} d_i u) = f(x, u) on (0,1)^d with u = 0 on the
/// boundary. Growth data (c, r) bounds |f(x,t)| <= c (1 + |t|^{r-1}).
struct EllipticProblem {
    Grid grid;
    ExponentSpec exponents;
    SpaceTimeFn source;
    double growthC = 1.0;
    double growthR = 1.0;
    bool expectNegativeAtZero = false;
};

struct ContinuationParams {
    double eps0 = 1e-2;
    double epsReduction = 0.5;
    double epsMin = 1e-8;
    double tolPicard = 1e-8;   // sup norm of the iterate difference
    double tolExponent = 1e-8; // sup norm of the frozen exponent drift
    int maxPicard = 50;
    double thetaU = 1.0; // Picard damping, 1 = undamped

    void check() const {
        if (!(epsMin > 0.0 && epsMin <= eps0))
            throw StructuralError("continuation needs 0 < epsMin <= eps0");
        if (!(epsReduction > 0.0 && epsReduction < 1.0))
            throw StructuralError("epsilon reduction factor must lie in (0,1)");
        if (!(thetaU > 0.0 && thetaU <= 1.0))
            throw StructuralError("Picard damping must lie in (0,1]");
        if (maxPicard < 1 || tolPicard <= 0.0 || tolExponent <= 0.0)
            throw StructuralError("invalid Picard parameters");
    }
};

/// Evaluate the exponent field and the source at a known iterate:
/// q_i(edge) = p_i(mean of the two endpoint values), source = f(x, u(x)).
inline std::pair<ExponentField, GridFunction> freeze(const GridFunction& u,
                                                     const EllipticProblem& prob) {
    require_same_grid(u.grid(), prob.grid, "freeze");
    const Grid& g = prob.grid;
    std::vector<std::vector<double>> axes;
    for (int a = 0; a < g.dim(); ++a) {
        std::vector<double> qs(g.edgeCount(a));
        for (std::size_t e = 0; e < qs.size(); ++e) {
            auto [lo, hi] = g.edgeEndpoints(a, e);
            double mean = 0.5 * (u[lo] + u[hi]);
            try {
                qs[e] = prob.exponents.eval(a, mean);
            } catch (const std::exception& ex) {
                auto mid = g.edgeMidpoint(a, e);
                throw EvalError("exponent p_" + std::to_string(a + 1) + " at edge (x=" +
                                detail::fmt_g(mid[0]) + ", y=" + detail::fmt_g(mid[1]) +
                                "): " + ex.what());
            }
        }
        axes.push_back(std::move(qs));
    }
    GridFunction src(g, false);
    for (std::size_t j = 0; j < g.nodeCount(); ++j) {
        auto x = g.nodeCoord(j);
        try {
            src[j] = prob.source(x, u[j]);
        } catch (const std::exception& ex) {
            throw EvalError("source at node (x=" + detail::fmt_g(x[0]) + ", y=" +
                            detail::fmt_g(x[1]) + "): " + ex.what());
        }
    }
    return {ExponentField(g, std::move(axes)), std::move(src)};
}

/// Sampled validation of conditions (p1), (p2) and (f); returns findings,
/// never throws on a failing condition.
inline ValidationReport validate(const EllipticProblem& prob) {
    ValidationReport rep;
    try {
        detail::check_exponent_conditions(prob.exponents, prob.grid.dim(), true, rep);
    } catch (const std::exception& ex) {
        rep.checks.push_back({"(p1) exponent bounds", false, ex.what()});
        return rep;
    }

    double pmin = prob.exponents.declaredMin();
    bool growthOk = true;
    std::string witness;
    if (!(prob.growthR >= 1.0 && prob.growthR < pmin)) {
        growthOk = false;
        witness = "condition (f) needs 1 <= r < p^- ; r = " + detail::fmt_g(prob.growthR) +
                  ", p^- = " + detail::fmt_g(pmin);
    }
    if (prob.growthC <= 0.0 && growthOk) {
        growthOk = false;
        witness = "condition (f) needs c > 0";
    }
    const double span = prob.exponents.samplingSpan;
    const int tSamples = 81;
    if (growthOk) {
        for (std::size_t j = 0; j < prob.grid.nodeCount() && growthOk; ++j) {
            auto x = prob.grid.nodeCoord(j);
            for (int k = 0; k < tSamples; ++k) {
                double t = -span + 2.0 * span * k / (tSamples - 1);
                double fv;
                try {
                    fv = prob.source(x, t);
                } catch (const std::exception& ex) {
                    growthOk = false;
                    witness = std::string("source evaluation failed: ") + ex.what();
                    break;
                }
                double bound = prob.growthC * (1.0 + std::pow(std::abs(t), prob.growthR - 1.0));
                if (std::abs(fv) > bound * (1.0 + 1e-6)) {
                    growthOk = false;
                    witness = "|f(" + detail::fmt_g(x[0]) + ", " + detail::fmt_g(t) +
                              ")| = " + detail::fmt_g(std::abs(fv)) +
                              " exceeds c(1+|t|^{r-1}) = " + detail::fmt_g(bound);
                    break;
                }
            }
        }
    }
    rep.checks.push_back({"(f) growth bound", growthOk, witness});

    if (prob.expectNegativeAtZero) {
        bool negOk = true;
        std::string negWitness;
        for (std::size_t j = 0; j < prob.grid.nodeCount(); ++j) {
            auto x = prob.grid.nodeCoord(j);
            double fv = prob.source(x, 0.0);
            if (!(fv < 0.0)) {
                negOk = false;
                negWitness = "f(x=" + detail::fmt_g(x[0]) + ", 0) = " + detail::fmt_g(fv);
                break;
            }
        }
        rep.checks.push_back({"f(.,0) < 0", negOk, negWitness});
    }
    return rep;
}

struct PicardStageTrace {
    double epsilon;
    int iterations;
    double finalDiff;
    double finalDrift;
    double gradientModular; // anisotropic modular of the accepted iterate
    std::vector<double> diffHistory;
    std::vector<double> driftHistory;
};

struct EllipticReport {
    SolveStatus status = SolveStatus::Converged;
    std::vector<PicardStageTrace> stages;
    int frozenSolves = 0;
    int polishSolves = 0;
    double finalResidual = 0.0;
    double finalResidualTol = 0.0;
    bool nearZeroFixedPoint = false;
};

struct EllipticSolution {
    GridFunction u;
    EllipticReport report;
};

/// Outer continuation over a geometric epsilon schedule with warm starts;
/// inner Picard iteration freezing both the exponent field and the source at
/// the previous iterate. Finishes with polish solves at epsMin until the
/// self-consistent frozen residual meets the Newton tolerance.
inline EllipticSolution solve_elliptic(const EllipticProblem& prob,
                                       const ContinuationParams& cp = {},
                                       const NewtonParams& np = {}) {
    cp.check();
    prob.exponents.checkShape();
    if (prob.exponents.dim() != prob.grid.dim())
        throw StructuralError("exponent spec dimension does not match grid");

    const Grid& g = prob.grid;
    const double pPlus = prob.exponents.declaredMax();
    GridFunction u(g, true);
    EllipticReport rep;

    std::vector<double> schedule;
    for (double eps = cp.eps0;; eps *= cp.epsReduction) {
        schedule.push_back(std::max(eps, cp.epsMin));
        if (eps <= cp.epsMin) break;
    }

    for (double eps : schedule) {
        auto [qPrev, srcPrev] = freeze(u, prob);
        PicardStageTrace stage{eps, 0, 0.0, 0.0, 0.0, {}, {}};
        bool stageConverged = false;
        for (int m = 0; m < cp.maxPicard; ++m) {
            FrozenProblem fp(g, qPrev, eps, pPlus, 0.0, GridFunction(g, true), srcPrev);
            FrozenSolution inner = solve_frozen(fp, u, np);
            ++rep.frozenSolves;
            if (inner.report.status != SolveStatus::Converged) {
                rep.status = inner.report.status;
                rep.stages.push_back(std::move(stage));
                rep.finalResidual = inner.report.finalResidual;
                rep.finalResidualTol = inner.report.tolUsed;
                return {std::move(inner.u), std::move(rep)};
            }
            GridFunction uNext(g, true);
            for (std::size_t j = 0; j < uNext.size(); ++j)
                uNext[j] = (1.0 - cp.thetaU) * u[j] + cp.thetaU * inner.u[j];
            uNext.pinBoundary();

            double diff = 0.0;
            for (std::size_t j = 0; j < uNext.size(); ++j)
                diff = std::max(diff, std::abs(uNext[j] - u[j]));
            auto [qNext, srcNext] = freeze(uNext, prob);
            double drift = qNext.drift(qPrev);

            u = std::move(uNext);
            qPrev = std::move(qNext);
            srcPrev = std::move(srcNext);
            stage.iterations = m + 1;
            stage.finalDiff = diff;
            stage.finalDrift = drift;
            stage.diffHistory.push_back(diff);
            stage.driftHistory.push_back(drift);
            if (diff <= cp.tolPicard && drift <= cp.tolExponent) {
                stageConverged = true;
                break;
            }
        }
        stage.gradientModular = anisotropic_modular(u, qPrev);
        rep.stages.push_back(std::move(stage));
        if (!stageConverged) {
            rep.status = SolveStatus::NonConvergence;
            return {std::move(u), std::move(rep)};
        }
    }

    // polish at epsMin until the frozen problem at the returned iterate is
    // satisfied to the Newton tolerance
    for (int round = 0;; ++round) {
        auto [q, src] = freeze(u, prob);
        FrozenProblem fp(g, std::move(q), cp.epsMin, pPlus, 0.0, GridFunction(g, true),
                         std::move(src));
        double tol = np.tolResidual > 0.0 ? np.tolResidual
                                          : 1e-9 * (1.0 + fp.source.supNorm());
        double res = residual(u, fp).supNorm();
        rep.finalResidual = res;
        rep.finalResidualTol = tol;
        if (res <= tol) break;
        if (round >= cp.maxPicard) {
            rep.status = SolveStatus::NonConvergence;
            break;
        }
        FrozenSolution inner = solve_frozen(fp, u, np);
        ++rep.frozenSolves;
        ++rep.polishSolves;
        if (inner.report.status != SolveStatus::Converged) {
            rep.status = inner.report.status;
            return {std::move(inner.u), std::move(rep)};
        }
        u = std::move(inner.u);
    }

    rep.nearZeroFixedPoint =
        prob.expectNegativeAtZero && u.supNorm() <= 100.0 * cp.tolPicard;
    return {std::move(u), std::move(rep)};
}

} // namespace anisolve
