#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anisolve/errors.hpp"

namespace anisolve {

/// Deterministic fixed-order pairwise summation; more accurate than a plain
/// left fold and reproducible across runs.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 32) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

/// Uniform tensor grid over the unit box (0,1)^d, d in {1,2}.
///
/// Nodes sit at j/n per axis; homogeneous-Dirichlet problems treat the
/// interior nodes as unknowns and pin the boundary to zero. Quadrature
/// assigns each sample its dual-cell measure (h per axis, halved on the two
/// boundary planes), so constants integrate to exactly |Omega| = 1 on both
/// the node and the edge layouts.
class Grid {
public:
    Grid(int dim, int cellsPerAxis) : dim_(dim), n_(cellsPerAxis) {
        if (dim_ != 1 && dim_ != 2)
            throw StructuralError("grid dimension must be 1 or 2, got " +
                                  std::to_string(dim_));
        if (n_ < 2)
            throw StructuralError("grid needs at least 2 cells per axis, got " +
                                  std::to_string(n_));
    }

    int dim() const { return dim_; }
    int n() const { return n_; }
    double h() const { return 1.0 / n_; }

    std::size_t nodeCount() const {
        std::size_t m = static_cast<std::size_t>(n_) + 1;
        return dim_ == 1 ? m : m * m;
    }

    std::size_t interiorCount() const {
        std::size_t m = static_cast<std::size_t>(n_) - 1;
        return dim_ == 1 ? m : m * m;
    }

    std::size_t edgeCount(int axis) const {
        checkAxis(axis);
        return dim_ == 1 ? static_cast<std::size_t>(n_)
                         : static_cast<std::size_t>(n_) * (n_ + 1);
    }

    std::size_t nodeIndex(int ix, int iy = 0) const {
        return static_cast<std::size_t>(iy) * (n_ + 1) + ix;
    }

    std::array<int, 2> nodeMulti(std::size_t j) const {
        int m = n_ + 1;
        return {static_cast<int>(j % m), static_cast<int>(j / m)};
    }

    std::array<double, 2> nodeCoord(std::size_t j) const {
        auto [ix, iy] = nodeMulti(j);
        return {ix * h(), dim_ == 2 ? iy * h() : 0.0};
    }

    bool boundaryNode(std::size_t j) const {
        auto [ix, iy] = nodeMulti(j);
        if (ix == 0 || ix == n_) return true;
        return dim_ == 2 && (iy == 0 || iy == n_);
    }

    /// Dual-cell quadrature weight of a node.
    double nodeWeight(std::size_t j) const {
        auto [ix, iy] = nodeMulti(j);
        double w = axisWeight(ix);
        if (dim_ == 2) w *= axisWeight(iy);
        return w;
    }

    /// Edges along `axis` are enumerated with the along-axis index fastest.
    /// Endpoints are the two adjacent node indices (low, high).
    std::pair<std::size_t, std::size_t> edgeEndpoints(int axis, std::size_t e) const {
        checkAxis(axis);
        if (dim_ == 1)
            return {e, e + 1};
        if (axis == 0) {
            int ex = static_cast<int>(e % n_);
            int ey = static_cast<int>(e / n_);
            return {nodeIndex(ex, ey), nodeIndex(ex + 1, ey)};
        }
        int ex = static_cast<int>(e % (n_ + 1));
        int ey = static_cast<int>(e / (n_ + 1));
        return {nodeIndex(ex, ey), nodeIndex(ex, ey + 1)};
    }

    std::array<double, 2> edgeMidpoint(int axis, std::size_t e) const {
        auto [lo, hi] = edgeEndpoints(axis, e);
        auto a = nodeCoord(lo);
        auto b = nodeCoord(hi);
        return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
    }

    /// Dual-cell quadrature weight of an edge midpoint: full cell measure
    /// along the edge, trapezoidal halving in the transverse direction.
    double edgeWeight(int axis, std::size_t e) const {
        checkAxis(axis);
        if (dim_ == 1) return h();
        if (axis == 0) {
            int ey = static_cast<int>(e / n_);
            return h() * axisWeight(ey);
        }
        int ex = static_cast<int>(e % (n_ + 1));
        return h() * axisWeight(ex);
    }

    /// Interior-unknown numbering (row-major over interior nodes);
    /// returns npos for boundary nodes.
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    std::size_t interiorIndex(std::size_t node) const {
        auto [ix, iy] = nodeMulti(node);
        if (ix <= 0 || ix >= n_) return npos;
        if (dim_ == 2 && (iy <= 0 || iy >= n_)) return npos;
        if (dim_ == 1) return static_cast<std::size_t>(ix - 1);
        return static_cast<std::size_t>(iy - 1) * (n_ - 1) + (ix - 1);
    }

    std::size_t interiorToNode(std::size_t i) const {
        if (dim_ == 1) return i + 1;
        int m = n_ - 1;
        int ix = static_cast<int>(i % m) + 1;
        int iy = static_cast<int>(i / m) + 1;
        return nodeIndex(ix, iy);
    }

    bool operator==(const Grid& o) const { return dim_ == o.dim_ && n_ == o.n_; }

private:
    void checkAxis(int axis) const {
        if (axis < 0 || axis >= dim_)
            throw StructuralError("axis " + std::to_string(axis) +
                                  " out of range for dimension " + std::to_string(dim_));
    }

    double axisWeight(int idx) const {
        return (idx == 0 || idx == n_) ? 0.5 * h() : h();
    }

    int dim_;
    int n_;
};

/// Nodal scalar field; optionally pinned to zero on the boundary
/// (homogeneous Dirichlet).
class GridFunction {
public:
    explicit GridFunction(Grid grid, bool dirichlet = true)
        : grid_(grid), dirichlet_(dirichlet), v_(grid.nodeCount(), 0.0) {}

    GridFunction(Grid grid, std::vector<double> values, bool dirichlet)
        : grid_(grid), dirichlet_(dirichlet), v_(std::move(values)) {
        if (v_.size() != grid_.nodeCount())
            throw StructuralError("grid function size does not match grid");
        for (double x : v_)
            if (!std::isfinite(x))
                throw StructuralError("grid function contains a non-finite value");
        if (dirichlet_) enforceBoundary();
    }

    template <class Fn>
    static GridFunction sample(const Grid& grid, Fn&& f, bool dirichlet = false) {
        std::vector<double> v(grid.nodeCount());
        for (std::size_t j = 0; j < v.size(); ++j)
            v[j] = f(grid.nodeCoord(j));
        return GridFunction(grid, std::move(v), dirichlet);
    }

    const Grid& grid() const { return grid_; }
    bool dirichlet() const { return dirichlet_; }
    std::size_t size() const { return v_.size(); }

    double operator[](std::size_t j) const { return v_[j]; }
    double& operator[](std::size_t j) { return v_[j]; }

    std::span<const double> values() const { return v_; }
    std::span<double> values() { return v_; }

    void pinBoundary() {
        for (std::size_t j = 0; j < v_.size(); ++j)
            if (grid_.boundaryNode(j)) v_[j] = 0.0;
    }

    double supNorm() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

    bool allZero() const {
        for (double x : v_)
            if (x != 0.0) return false;
        return true;
    }

private:
    void enforceBoundary() {
        for (std::size_t j = 0; j < v_.size(); ++j)
            if (grid_.boundaryNode(j) && v_[j] != 0.0)
                throw StructuralError(
                    "Dirichlet grid function has nonzero boundary value at node " +
                    std::to_string(j));
    }

    Grid grid_;
    bool dirichlet_;
    std::vector<double> v_;
};

/// Scalar field sampled at the midpoints of grid edges along one axis.
class EdgeField {
public:
    EdgeField(Grid grid, int axis)
        : grid_(grid), axis_(axis), v_(grid.edgeCount(axis), 0.0) {}

    EdgeField(Grid grid, int axis, std::vector<double> values)
        : grid_(grid), axis_(axis), v_(std::move(values)) {
        if (v_.size() != grid_.edgeCount(axis_))
            throw StructuralError("edge field size does not match grid layout");
    }

    const Grid& grid() const { return grid_; }
    int axis() const { return axis_; }
    std::size_t size() const { return v_.size(); }

    double operator[](std::size_t e) const { return v_[e]; }
    double& operator[](std::size_t e) { return v_[e]; }

    std::span<const double> values() const { return v_; }

private:
    Grid grid_;
    int axis_;
    std::vector<double> v_;
};

/// Sample a function expected to vanish on the boundary; values within
/// boundaryTol of zero are pinned exactly, anything larger is an error.
template <class Fn>
GridFunction sample_dirichlet(const Grid& grid, Fn&& f, double boundaryTol = 1e-9) {
    GridFunction raw = GridFunction::sample(grid, f, false);
    for (std::size_t j = 0; j < raw.size(); ++j)
        if (grid.boundaryNode(j) && std::abs(raw[j]) > boundaryTol)
            throw StructuralError("sampled data violates the Dirichlet boundary at node " +
                                  std::to_string(j));
    raw.pinBoundary();
    return GridFunction(grid,
                        std::vector<double>(raw.values().begin(), raw.values().end()),
                        true);
}

/// Forward-difference derivative (u_high - u_low)/h on every edge along `axis`.
inline EdgeField edge_derivative(const GridFunction& u, int axis) {
    const Grid& g = u.grid();
    EdgeField d(g, axis);
    const double invH = 1.0 / g.h();
    for (std::size_t e = 0; e < d.size(); ++e) {
        auto [lo, hi] = g.edgeEndpoints(axis, e);
        d[e] = (u[hi] - u[lo]) * invH;
    }
    return d;
}

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b))
        throw StructuralError(std::string("layout mismatch: ") + what);
}

} // namespace anisolve
