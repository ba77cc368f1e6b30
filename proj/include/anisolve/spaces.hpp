#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "anisolve/grid.hpp"

namespace anisolve {

/// Per-direction exponent samples at edge midpoints, the frozen q_i(x).
/// Samples below 2 are rejected at construction rather than clamped.
class ExponentField {
public:
    ExponentField(Grid grid, std::vector<std::vector<double>> perAxis)
        : grid_(grid), perAxis_(std::move(perAxis)) {
        if (static_cast<int>(perAxis_.size()) != grid_.dim())
            throw StructuralError("exponent field needs one sample array per axis");
        qmin_ = std::numeric_limits<double>::infinity();
        qmax_ = 0.0;
        for (int a = 0; a < grid_.dim(); ++a) {
            if (perAxis_[static_cast<std::size_t>(a)].size() != grid_.edgeCount(a))
                throw StructuralError("exponent field axis " + std::to_string(a) +
                                      " does not match the edge layout");
            for (double q : perAxis_[static_cast<std::size_t>(a)]) {
                if (!std::isfinite(q) || q < 2.0)
                    throw StructuralError(
                        "exponent sample " + std::to_string(q) +
                        " violates the standing hypothesis q >= 2");
                qmin_ = std::min(qmin_, q);
                qmax_ = std::max(qmax_, q);
            }
        }
    }

    static ExponentField constant(const Grid& grid, std::span<const double> perAxisValue) {
        if (static_cast<int>(perAxisValue.size()) != grid.dim())
            throw StructuralError("need one exponent value per axis");
        std::vector<std::vector<double>> axes;
        for (int a = 0; a < grid.dim(); ++a)
            axes.emplace_back(grid.edgeCount(a), perAxisValue[static_cast<std::size_t>(a)]);
        return ExponentField(grid, std::move(axes));
    }

    static ExponentField constant(const Grid& grid, double value) {
        std::vector<double> per(static_cast<std::size_t>(grid.dim()), value);
        return constant(grid, per);
    }

    const Grid& grid() const { return grid_; }
    double min() const { return qmin_; }
    double max() const { return qmax_; }
    const std::vector<double>& axis(int a) const {
        return perAxis_[static_cast<std::size_t>(a)];
    }
    double at(int a, std::size_t e) const { return perAxis_[static_cast<std::size_t>(a)][e]; }

    /// Largest |difference| against another field on the same layout.
    double drift(const ExponentField& other) const {
        require_same_grid(grid_, other.grid_, "exponent drift");
        double d = 0.0;
        for (int a = 0; a < grid_.dim(); ++a) {
            const auto& mine = axis(a);
            const auto& theirs = other.axis(a);
            for (std::size_t e = 0; e < mine.size(); ++e)
                d = std::max(d, std::abs(mine[e] - theirs[e]));
        }
        return d;
    }

private:
    Grid grid_;
    std::vector<std::vector<double>> perAxis_;
    double qmin_ = 2.0;
    double qmax_ = 2.0;
};

namespace detail {

// The modular/norm layer accepts any exponent with inf q > 1; the stricter
// q >= 2 hypothesis is enforced only on operator-facing ExponentFields.
inline void check_exponent_samples(std::span<const double> q) {
    for (double x : q)
        if (!std::isfinite(x) || x <= 1.0)
            throw StructuralError("exponent sample " + std::to_string(x) +
                                  " outside (1, inf)");
}

template <class WeightAt, class QAt>
double modular_over(std::size_t count, WeightAt w, std::span<const double> v, QAt q,
                    double invScale = 1.0) {
    std::vector<double> terms(count);
    for (std::size_t k = 0; k < count; ++k)
        terms[k] = w(k) * std::pow(std::abs(v[k] * invScale), q(k));
    return pairwise_sum(terms);
}

template <class WeightAt, class QAt>
double luxemburg_over(std::size_t count, WeightAt w, std::span<const double> v, QAt q,
                      double tol) {
    if (tol <= 0.0) throw StructuralError("luxemburg tolerance must be positive");
    bool zero = true;
    for (std::size_t k = 0; k < count; ++k)
        if (v[k] != 0.0) { zero = false; break; }
    if (zero) return 0.0;

    auto defectAt = [&](double tau) {
        return modular_over(count, w, v, q, 1.0 / tau) - 1.0;
    };

    constexpr double tauGuard = 1e-300;
    double lo = 1.0, hi = 1.0;
    double d1 = defectAt(1.0);
    if (std::abs(d1) <= tol) return 1.0;
    if (d1 > 0.0) {
        while (defectAt(hi) > 0.0) {
            hi *= 2.0;
            if (!std::isfinite(hi))
                throw StructuralError("luxemburg bracketing overflow");
        }
    } else {
        while (defectAt(lo) < 0.0) {
            lo *= 0.5;
            if (lo < tauGuard) return tauGuard;
        }
    }
    // modular(u/tau) decreases strictly in tau; bisect on the defect sign
    for (int it = 0; it < 2000; ++it) {
        double mid = 0.5 * (lo + hi);
        double d = defectAt(mid);
        if (std::abs(d) <= tol) return mid;
        if (d > 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-16 * mid) return mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// --- modular rho(u) = sum of cellweight * |u|^q over samples ---------------

inline double modular(const GridFunction& u, const GridFunction& q) {
    require_same_grid(u.grid(), q.grid(), "modular of nodal field");
    detail::check_exponent_samples(q.values());
    const Grid& g = u.grid();
    return detail::modular_over(
        u.size(), [&](std::size_t k) { return g.nodeWeight(k); }, u.values(),
        [&](std::size_t k) { return q[k]; });
}

inline double modular(const GridFunction& u, double q) {
    detail::check_exponent_samples({&q, 1});
    const Grid& g = u.grid();
    return detail::modular_over(
        u.size(), [&](std::size_t k) { return g.nodeWeight(k); }, u.values(),
        [&](std::size_t) { return q; });
}

inline double modular(const EdgeField& f, const EdgeField& q) {
    require_same_grid(f.grid(), q.grid(), "modular of edge field");
    if (f.axis() != q.axis())
        throw StructuralError("layout mismatch: edge field and exponent axis differ");
    detail::check_exponent_samples(q.values());
    const Grid& g = f.grid();
    const int axis = f.axis();
    return detail::modular_over(
        f.size(), [&](std::size_t k) { return g.edgeWeight(axis, k); }, f.values(),
        [&](std::size_t k) { return q[k]; });
}

inline double modular(const EdgeField& f, double q) {
    detail::check_exponent_samples({&q, 1});
    const Grid& g = f.grid();
    const int axis = f.axis();
    return detail::modular_over(
        f.size(), [&](std::size_t k) { return g.edgeWeight(axis, k); }, f.values(),
        [&](std::size_t) { return q; });
}

inline double modular(const EdgeField& f, const ExponentField& q) {
    require_same_grid(f.grid(), q.grid(), "modular of edge field");
    const auto& qs = q.axis(f.axis());
    const Grid& g = f.grid();
    const int axis = f.axis();
    return detail::modular_over(
        f.size(), [&](std::size_t k) { return g.edgeWeight(axis, k); }, f.values(),
        [&](std::size_t k) { return qs[k]; });
}

// --- Luxemburg norm: inf{ tau > 0 : modular(u/tau) <= 1 } ------------------

inline double luxemburg_norm(const GridFunction& u, const GridFunction& q,
                             double tol = 1e-10) {
    require_same_grid(u.grid(), q.grid(), "luxemburg norm");
    detail::check_exponent_samples(q.values());
    const Grid& g = u.grid();
    return detail::luxemburg_over(
        u.size(), [&](std::size_t k) { return g.nodeWeight(k); }, u.values(),
        [&](std::size_t k) { return q[k]; }, tol);
}

inline double luxemburg_norm(const GridFunction& u, double q, double tol = 1e-10) {
    detail::check_exponent_samples({&q, 1});
    const Grid& g = u.grid();
    return detail::luxemburg_over(
        u.size(), [&](std::size_t k) { return g.nodeWeight(k); }, u.values(),
        [&](std::size_t) { return q; }, tol);
}

inline double luxemburg_norm(const EdgeField& f, const EdgeField& q, double tol = 1e-10) {
    require_same_grid(f.grid(), q.grid(), "luxemburg norm");
    if (f.axis() != q.axis())
        throw StructuralError("layout mismatch: edge field and exponent axis differ");
    detail::check_exponent_samples(q.values());
    const Grid& g = f.grid();
    const int axis = f.axis();
    return detail::luxemburg_over(
        f.size(), [&](std::size_t k) { return g.edgeWeight(axis, k); }, f.values(),
        [&](std::size_t k) { return q[k]; }, tol);
}

inline double luxemburg_norm(const EdgeField& f, double q, double tol = 1e-10) {
    detail::check_exponent_samples({&q, 1});
    const Grid& g = f.grid();
    const int axis = f.axis();
    return detail::luxemburg_over(
        f.size(), [&](std::size_t k) { return g.edgeWeight(axis, k); }, f.values(),
        [&](std::size_t) { return q; }, tol);
}

/// Sum over axes of modular(D_i u, q_i); the gradient part of the
/// anisotropic energy.
inline double anisotropic_modular(const GridFunction& u, const ExponentField& q) {
    require_same_grid(u.grid(), q.grid(), "anisotropic modular");
    double total = 0.0;
    for (int a = 0; a < u.grid().dim(); ++a)
        total += modular(edge_derivative(u, a), q);
    return total;
}

struct HolderPairing {
    double lhs; // |integral of u*v|
    double rhs; // (1/r^- + 1/s^-) * ||u||_r * ||v||_s
};

/// Discrete Holder pairing for conjugate exponent fields (1/r + 1/s = 1
/// samplewise). The inequality lhs <= rhs holds for any weights.
inline HolderPairing holder_pairing(const GridFunction& u, const GridFunction& v,
                                    const GridFunction& r, const GridFunction& s) {
    require_same_grid(u.grid(), v.grid(), "holder pairing");
    require_same_grid(u.grid(), r.grid(), "holder pairing");
    require_same_grid(u.grid(), s.grid(), "holder pairing");
    detail::check_exponent_samples(r.values());
    detail::check_exponent_samples(s.values());
    double rmin = std::numeric_limits<double>::infinity();
    double smin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < r.size(); ++k) {
        if (std::abs(1.0 / r[k] + 1.0 / s[k] - 1.0) > 1e-12)
            throw StructuralError("exponent fields are not conjugate at sample " +
                                  std::to_string(k));
        rmin = std::min(rmin, r[k]);
        smin = std::min(smin, s[k]);
    }
    const Grid& g = u.grid();
    std::vector<double> terms(u.size());
    for (std::size_t k = 0; k < u.size(); ++k)
        terms[k] = g.nodeWeight(k) * u[k] * v[k];
    double lhs = std::abs(pairwise_sum(terms));
    double rhs = (1.0 / rmin + 1.0 / smin) * luxemburg_norm(u, r, 1e-12) *
                 luxemburg_norm(v, s, 1e-12);
    return {lhs, rhs};
}

inline HolderPairing holder_pairing(const GridFunction& u, const GridFunction& v,
                                    double r, double s) {
    GridFunction rf = GridFunction::sample(u.grid(), [&](auto) { return r; });
    GridFunction sf = GridFunction::sample(u.grid(), [&](auto) { return s; });
    return holder_pairing(u, v, rf, sf);
}

} // namespace anisolve
