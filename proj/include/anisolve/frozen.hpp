#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "anisolve/energy.hpp"

namespace anisolve {

enum class SolveStatus { Converged, NonConvergence, LineSearchStall };

inline const char* to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::NonConvergence: return "non_convergence";
    case SolveStatus::LineSearchStall: return "line_search_stall";
    }
    return "unknown";
}

struct NewtonParams {
    double tolResidual = 0.0; // <= 0 means auto: 1e-9 * (1 + sup|source|)
    int maxIter = 100;
    double armijoC = 1e-4;
    double backtrackFactor = 0.5;
    int maxBacktracks = 40;
    double hessianMu = 1e-12; // keeps the Newton model nonsingular at flat gradients
};

struct FrozenReport {
    SolveStatus status = SolveStatus::Converged;
    int iterations = 0;
    double finalResidual = 0.0;
    double tolUsed = 0.0;
    std::vector<double> energyHistory; // strictly decreasing until convergence
    std::vector<int> backtracks;       // per accepted step
};

struct FrozenSolution {
    GridFunction u;
    FrozenReport report;
};

namespace detail {

/// Symmetric positive-definite banded matrix, lower storage, LAPACK-style
/// column-major band layout. Enough for the 3/5-point Newton systems here.
class BandedSpd {
public:
    BandedSpd(std::size_t m, int kd)
        : m_(m), kd_(kd), a_(static_cast<std::size_t>(kd + 1) * m, 0.0) {}

    void add(std::size_t i, std::size_t j, double v) {
        if (i < j) std::swap(i, j);
        a_[(i - j) + j * (kd_ + 1)] += v;
    }

    void factor() {
        for (std::size_t j = 0; j < m_; ++j) {
            double diag = at(j, j);
            std::size_t kmin = j > static_cast<std::size_t>(kd_) ? j - kd_ : 0;
            for (std::size_t k = kmin; k < j; ++k) {
                double l = at(j, k);
                diag -= l * l;
            }
            if (diag <= 0.0)
                throw StructuralError("banded Cholesky: matrix not positive definite at row " +
                                      std::to_string(j));
            double d = std::sqrt(diag);
            at(j, j) = d;
            std::size_t imax = std::min(m_ - 1, j + kd_);
            for (std::size_t i = j + 1; i <= imax; ++i) {
                double v = at(i, j);
                std::size_t kmin2 = i > static_cast<std::size_t>(kd_) ? i - kd_ : 0;
                if (kmin2 < kmin) kmin2 = kmin;
                for (std::size_t k = kmin2; k < j; ++k) v -= at(i, k) * at(j, k);
                at(i, j) = v / d;
            }
        }
    }

    void solveInPlace(std::vector<double>& x) const {
        // forward: L y = b
        for (std::size_t i = 0; i < m_; ++i) {
            double v = x[i];
            std::size_t kmin = i > static_cast<std::size_t>(kd_) ? i - kd_ : 0;
            for (std::size_t k = kmin; k < i; ++k) v -= cat(i, k) * x[k];
            x[i] = v / cat(i, i);
        }
        // backward: L^T x = y
        for (std::size_t ii = m_; ii-- > 0;) {
            double v = x[ii];
            std::size_t imax = std::min(m_ - 1, ii + kd_);
            for (std::size_t k = ii + 1; k <= imax; ++k) v -= cat(k, ii) * x[k];
            x[ii] = v / cat(ii, ii);
        }
    }

private:
    double& at(std::size_t i, std::size_t j) { return a_[(i - j) + j * (kd_ + 1)]; }
    double cat(std::size_t i, std::size_t j) const { return a_[(i - j) + j * (kd_ + 1)]; }

    std::size_t m_;
    int kd_;
    std::vector<double> a_;
};

/// Newton-model Hessian on the interior unknowns. Second-derivative edge
/// weights use (D^2 + mu)^{(q-2)/2} so the model stays SPD at flat spots;
/// energy and residual are untouched.
inline BandedSpd assemble_hessian(const GridFunction& u, const FrozenProblem& fp,
                                  double mu) {
    const Grid& g = fp.grid;
    const std::size_t m = g.interiorCount();
    const int kd = g.dim() == 1 ? 1 : g.n() - 1;
    BandedSpd h(m, kd);
    const double invH = 1.0 / g.h();
    const double invH2 = invH * invH;

    for (int a = 0; a < g.dim(); ++a) {
        const auto& qs = fp.exponents.axis(a);
        for (std::size_t e = 0; e < g.edgeCount(a); ++e) {
            auto [lo, hi] = g.edgeEndpoints(a, e);
            std::size_t ilo = g.interiorIndex(lo);
            std::size_t ihi = g.interiorIndex(hi);
            if (ilo == Grid::npos && ihi == Grid::npos) continue;
            double d = (u[hi] - u[lo]) * invH;
            double d2mu = d * d + mu;
            double q = qs[e];
            double wSecond = (q - 1.0) * std::pow(d2mu, 0.5 * (q - 2.0));
            if (fp.epsilon > 0.0)
                wSecond += fp.epsilon * (fp.regExponent - 1.0) *
                           std::pow(d2mu, 0.5 * (fp.regExponent - 2.0));
            double c = g.edgeWeight(a, e) * wSecond * invH2;
            if (ilo != Grid::npos) h.add(ilo, ilo, c);
            if (ihi != Grid::npos) h.add(ihi, ihi, c);
            if (ilo != Grid::npos && ihi != Grid::npos) h.add(ihi, ilo, -c);
        }
    }
    if (fp.massWeight > 0.0)
        for (std::size_t i = 0; i < m; ++i) {
            std::size_t j = g.interiorToNode(i);
            h.add(i, i, fp.massWeight * g.nodeWeight(j));
        }
    return h;
}

} // namespace detail

/// Damped Newton minimization of the frozen-exponent energy. Returns the
/// unique discrete minimizer up to tolResidual on the sup norm of the
/// gradient; the energy history is strictly decreasing.
inline FrozenSolution solve_frozen(const FrozenProblem& fp, const GridFunction& init,
                                   const NewtonParams& params = {}) {
    require_same_grid(init.grid(), fp.grid, "solve_frozen initial guess");
    if (params.maxIter < 1) throw StructuralError("maxIter must be >= 1");

    const Grid& g = fp.grid;
    GridFunction u = init;
    u.pinBoundary();

    FrozenReport rep;
    rep.tolUsed = params.tolResidual > 0.0
                      ? params.tolResidual
                      : 1e-9 * (1.0 + fp.source.supNorm());

    double e = energy(u, fp);
    rep.energyHistory.push_back(e);
    GridFunction grad = residual(u, fp);
    double gSup = grad.supNorm();

    const std::size_t m = g.interiorCount();
    std::vector<double> dir(m);

    auto tryStep = [&](const std::vector<double>& s, double gTs, int& backtracksOut,
                       double& eOut, GridFunction& uOut) {
        double t = 1.0;
        for (int b = 0; b <= params.maxBacktracks; ++b) {
            GridFunction trial = u;
            for (std::size_t i = 0; i < m; ++i)
                trial[g.interiorToNode(i)] += t * s[i];
            double eTrial = energy(trial, fp);
            if (eTrial <= e + params.armijoC * t * gTs) {
                backtracksOut = b;
                eOut = eTrial;
                uOut = std::move(trial);
                return true;
            }
            t *= params.backtrackFactor;
        }
        return false;
    };

    for (int it = 0; it < params.maxIter; ++it) {
        if (gSup <= rep.tolUsed) {
            rep.status = SolveStatus::Converged;
            rep.iterations = it;
            rep.finalResidual = gSup;
            return {std::move(u), std::move(rep)};
        }
        detail::BandedSpd h = detail::assemble_hessian(u, fp, params.hessianMu);
        h.factor();
        for (std::size_t i = 0; i < m; ++i)
            dir[i] = -grad[g.interiorToNode(i)];
        h.solveInPlace(dir);

        double gTs = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            gTs += grad[g.interiorToNode(i)] * dir[i];

        if (gTs < 0.0 && -gTs <= 1e-14 * (1.0 + std::abs(e))) {
            // the predicted energy decrease is below double resolution;
            // take the full Newton step if it still reduces the residual
            GridFunction trial = u;
            for (std::size_t i = 0; i < m; ++i)
                trial[g.interiorToNode(i)] += dir[i];
            GridFunction gTrial = residual(trial, fp);
            double gTrialSup = gTrial.supNorm();
            if (gTrialSup >= gSup) {
                rep.status = SolveStatus::LineSearchStall;
                rep.iterations = it;
                rep.finalResidual = gSup;
                return {std::move(u), std::move(rep)};
            }
            u = std::move(trial);
            e = energy(u, fp);
            rep.energyHistory.push_back(e);
            rep.backtracks.push_back(0);
            grad = std::move(gTrial);
            gSup = gTrialSup;
            continue;
        }

        int backs = 0;
        double eNext = e;
        GridFunction uNext(g, true);
        bool ok = gTs < 0.0 && tryStep(dir, gTs, backs, eNext, uNext);
        if (!ok) {
            // fall back to one steepest-descent step before giving up
            double gNorm2 = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                dir[i] = -grad[g.interiorToNode(i)];
                gNorm2 += dir[i] * dir[i];
            }
            ok = tryStep(dir, -gNorm2, backs, eNext, uNext);
            if (!ok) {
                rep.status = SolveStatus::LineSearchStall;
                rep.iterations = it;
                rep.finalResidual = gSup;
                return {std::move(u), std::move(rep)};
            }
        }
        u = std::move(uNext);
        e = eNext;
        rep.energyHistory.push_back(e);
        rep.backtracks.push_back(backs);
        grad = residual(u, fp);
        gSup = grad.supNorm();
    }

    rep.status = gSup <= rep.tolUsed ? SolveStatus::Converged : SolveStatus::NonConvergence;
    rep.iterations = params.maxIter;
    rep.finalResidual = gSup;
    return {std::move(u), std::move(rep)};
}

/// Default initial guess: warm-start from the anchor when the mass term is
/// active (the parabolic path), otherwise from zero.
inline FrozenSolution solve_frozen(const FrozenProblem& fp, const NewtonParams& params = {}) {
    if (fp.massWeight > 0.0) return solve_frozen(fp, fp.anchor, params);
    return solve_frozen(fp, GridFunction(fp.grid, true), params);
}

struct ScalingCheck {
    GridFunction uEps;      // solve of -(1+eps) Delta_{p+} u = f
    GridFunction uRef;      // solve with eps = 0
    double factor;          // (1+eps)^{-1/(p+-1)}
    double maxDeviation;    // sup_j |uEps_j - factor * uRef_j|
    double tolUsed;
    FrozenReport repEps, repRef;
};

/// With all exponents equal to p+, the epsilon term rescales the operator to
/// (1+eps) Delta_{p+}, so u_eps = (1+eps)^{-1/(p+-1)} u_0 nodewise.
inline ScalingCheck epsilon_scaling_check(double pPlus, double eps,
                                          const GridFunction& source, const Grid& grid,
                                          const NewtonParams& params = {}) {
    ExponentField q = ExponentField::constant(grid, pPlus);
    FrozenProblem withEps = FrozenProblem::elliptic(grid, q, eps, pPlus, source);
    FrozenProblem without = FrozenProblem::elliptic(grid, q, 0.0, pPlus, source);
    GridFunction zero(grid, true);
    FrozenSolution sEps = solve_frozen(withEps, zero, params);
    FrozenSolution sRef = solve_frozen(without, zero, params);
    double factor = std::pow(1.0 + eps, -1.0 / (pPlus - 1.0));
    double dev = 0.0;
    for (std::size_t j = 0; j < sEps.u.size(); ++j)
        dev = std::max(dev, std::abs(sEps.u[j] - factor * sRef.u[j]));
    return {std::move(sEps.u), std::move(sRef.u), factor, dev,
            sEps.report.tolUsed, std::move(sEps.report), std::move(sRef.report)};
}

} // namespace anisolve
