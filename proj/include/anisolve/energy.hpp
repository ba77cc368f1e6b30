#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "anisolve/spaces.hpp"

namespace anisolve {

/// One convex solve with the exponents held fixed: per-edge exponent field,
/// optional p+ regularization weighted by epsilon, optional mass term
/// sigma*(u - anchor) (sigma = 1/h_t in parabolic steps), frozen source.
struct FrozenProblem {
    Grid grid;
    ExponentField exponents;
    double epsilon;     // >= 0
    double regExponent; // p+, >= every exponent sample
    double massWeight;  // sigma >= 0
    GridFunction anchor;
    GridFunction source;

    FrozenProblem(Grid g, ExponentField q, double eps, double pPlus, double sigma,
                  GridFunction anchorField, GridFunction sourceField)
        : grid(g), exponents(std::move(q)), epsilon(eps), regExponent(pPlus),
          massWeight(sigma), anchor(std::move(anchorField)), source(std::move(sourceField)) {
        if (epsilon < 0.0) throw StructuralError("epsilon must be >= 0");
        if (massWeight < 0.0) throw StructuralError("mass weight must be >= 0");
        if (regExponent < exponents.max() - 1e-12)
            throw StructuralError("regularization exponent p+ must dominate all exponent samples");
        require_same_grid(grid, exponents.grid(), "frozen problem exponents");
        require_same_grid(grid, anchor.grid(), "frozen problem anchor");
        require_same_grid(grid, source.grid(), "frozen problem source");
        if (!anchor.dirichlet())
            throw StructuralError("frozen problem anchor must satisfy the Dirichlet flag");
    }

    /// Elliptic-flavoured problem: no mass term, zero anchor.
    static FrozenProblem elliptic(const Grid& g, ExponentField q, double eps,
                                  double pPlus, GridFunction sourceField) {
        return FrozenProblem(g, std::move(q), eps, pPlus, 0.0, GridFunction(g, true),
                             std::move(sourceField));
    }
};

/// E(u) = sum_i sum_edges w_e [ |D_i u|^q/q + eps |D_i u|^{p+}/p+ ]
///      + (sigma/2) sum_nodes w_j (u - anchor)^2 - sum_nodes w_j source*u.
/// Convex; strictly convex in the interior unknowns through the Dirichlet
/// pinning whenever sigma > 0, eps > 0, or the gradient terms are active.
inline double energy(const GridFunction& u, const FrozenProblem& fp) {
    require_same_grid(u.grid(), fp.grid, "energy");
    const Grid& g = fp.grid;
    const double eps = fp.epsilon;
    const double pPlus = fp.regExponent;

    std::vector<double> terms;
    terms.reserve(g.dim() * g.edgeCount(0) + 2 * g.nodeCount());
    const double invH = 1.0 / g.h();
    for (int a = 0; a < g.dim(); ++a) {
        const auto& qs = fp.exponents.axis(a);
        for (std::size_t e = 0; e < g.edgeCount(a); ++e) {
            auto [lo, hi] = g.edgeEndpoints(a, e);
            double d = (u[hi] - u[lo]) * invH;
            double ad = std::abs(d);
            double q = qs[e];
            double val = std::pow(ad, q) / q;
            if (eps > 0.0) val += eps * std::pow(ad, pPlus) / pPlus;
            terms.push_back(g.edgeWeight(a, e) * val);
        }
    }
    for (std::size_t j = 0; j < g.nodeCount(); ++j) {
        double w = g.nodeWeight(j);
        double val = -fp.source[j] * u[j];
        if (fp.massWeight > 0.0) {
            double diff = u[j] - fp.anchor[j];
            val += 0.5 * fp.massWeight * diff * diff;
        }
        terms.push_back(w * val);
    }
    return pairwise_sum(terms);
}

/// Gradient of the energy with respect to the nodal values; boundary
/// entries are reported as zero.
inline GridFunction residual(const GridFunction& u, const FrozenProblem& fp) {
    require_same_grid(u.grid(), fp.grid, "residual");
    const Grid& g = fp.grid;
    GridFunction r(g, true);
    const double invH = 1.0 / g.h();
    const double eps = fp.epsilon;
    const double pPlus = fp.regExponent;

    for (int a = 0; a < g.dim(); ++a) {
        const auto& qs = fp.exponents.axis(a);
        for (std::size_t e = 0; e < g.edgeCount(a); ++e) {
            auto [lo, hi] = g.edgeEndpoints(a, e);
            double d = (u[hi] - u[lo]) * invH;
            double ad = std::abs(d);
            double q = qs[e];
            double flux = std::pow(ad, q - 2.0) * d;
            if (eps > 0.0) flux += eps * std::pow(ad, pPlus - 2.0) * d;
            flux *= g.edgeWeight(a, e) * invH;
            r[hi] += flux;
            r[lo] -= flux;
        }
    }
    for (std::size_t j = 0; j < g.nodeCount(); ++j) {
        double w = g.nodeWeight(j);
        r[j] -= w * fp.source[j];
        if (fp.massWeight > 0.0) r[j] += w * fp.massWeight * (u[j] - fp.anchor[j]);
    }
    r.pinBoundary();
    return r;
}

struct MonotonicityGap {
    double lhs; // <|a|^{p-2}a - |b|^{p-2}b, a - b>
    double rhs; // 2^{2-p} |a - b|^p
};

/// Vector monotonicity inequality for p >= 2 with the classical constant
/// C3 = 2^{2-p}: lhs >= rhs for all a, b.
inline MonotonicityGap monotonicity_gap(std::span<const double> a,
                                        std::span<const double> b, double p) {
    if (p < 2.0)
        throw StructuralError("monotonicity gap requires p >= 2");
    if (a.size() != b.size())
        throw StructuralError("monotonicity gap needs vectors of equal length");
    double na = 0.0, nb = 0.0, ndiff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a[i] * a[i];
        nb += b[i] * b[i];
        double d = a[i] - b[i];
        ndiff += d * d;
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    ndiff = std::sqrt(ndiff);
    double fa = std::pow(na, p - 2.0);
    double fb = std::pow(nb, p - 2.0);
    double lhs = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        lhs += (fa * a[i] - fb * b[i]) * (a[i] - b[i]);
    double rhs = std::pow(2.0, 2.0 - p) * std::pow(ndiff, p);
    return {lhs, rhs};
}

/// Inner product of two nodal fields (plain, unweighted).
inline double dot(const GridFunction& a, const GridFunction& b) {
    require_same_grid(a.grid(), b.grid(), "dot product");
    std::vector<double> terms(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) terms[j] = a[j] * b[j];
    return pairwise_sum(terms);
}

/// Weighted L2 inner product sum_j w_j a_j b_j.
inline double l2_inner(const GridFunction& a, const GridFunction& b) {
    require_same_grid(a.grid(), b.grid(), "L2 inner product");
    const Grid& g = a.grid();
    std::vector<double> terms(a.size());
    for (std::size_t j = 0; j < a.size(); ++j)
        terms[j] = g.nodeWeight(j) * a[j] * b[j];
    return pairwise_sum(terms);
}

inline double l2_norm_sq(const GridFunction& a) { return l2_inner(a, a); }

} // namespace anisolve
