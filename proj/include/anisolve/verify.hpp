#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "anisolve/frozen.hpp"
#include "anisolve/rng.hpp"

namespace anisolve {

struct PropertyResult {
    std::string name;
    bool pass = true;
    int trials = 0;
    double seconds = 0.0;
    std::string witness; // first failing case, empty when pass
};

namespace verify_detail {

inline GridFunction random_dirichlet(const Grid& g, Rng& rng, double amp = 2.0) {
    GridFunction u(g, true);
    for (std::size_t j = 0; j < u.size(); ++j)
        if (!g.boundaryNode(j)) u[j] = rng.uniform(-amp, amp);
    return u;
}

inline GridFunction random_nodal(const Grid& g, Rng& rng, double lo, double hi) {
    return GridFunction::sample(g, [&](auto) { return rng.uniform(lo, hi); });
}

inline ExponentField random_exponents(const Grid& g, Rng& rng, double lo, double hi) {
    std::vector<std::vector<double>> axes;
    for (int a = 0; a < g.dim(); ++a) {
        std::vector<double> qs(g.edgeCount(a));
        for (auto& q : qs) q = rng.uniform(lo, hi);
        axes.push_back(std::move(qs));
    }
    return ExponentField(g, std::move(axes));
}

inline FrozenProblem random_problem(const Grid& g, Rng& rng, double eps, double sigma) {
    return FrozenProblem(g, random_exponents(g, rng, 2.2, 4.5), eps, 6.0, sigma,
                         random_dirichlet(g, rng), random_nodal(g, rng, -2.0, 2.0));
}

/// Random low-frequency field with O(1) discrete gradients. Finite-difference
/// gradient checks need this: nodewise-random fields carry O(1/h) slopes, and
/// |D|^q then inflates the energy until central-difference cancellation
/// swamps the tolerance.
inline GridFunction random_smooth_dirichlet(const Grid& g, Rng& rng) {
    constexpr double pi = 3.141592653589793;
    GridFunction u(g, true);
    if (g.dim() == 1) {
        double c1 = rng.uniform(-0.7, 0.7);
        double c2 = rng.uniform(-0.7, 0.7);
        double c3 = rng.uniform(-0.7, 0.7);
        for (std::size_t j = 0; j < u.size(); ++j) {
            double x = g.nodeCoord(j)[0];
            u[j] = c1 * std::sin(pi * x) + c2 * std::sin(2.0 * pi * x) +
                   c3 * std::sin(3.0 * pi * x);
        }
    } else {
        double c[2][2];
        for (auto& row : c)
            for (auto& v : row) v = rng.uniform(-0.7, 0.7);
        for (std::size_t j = 0; j < u.size(); ++j) {
            auto xy = g.nodeCoord(j);
            double val = 0.0;
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    val += c[k][l] * std::sin((k + 1) * pi * xy[0]) *
                           std::sin((l + 1) * pi * xy[1]);
            u[j] = val;
        }
    }
    u.pinBoundary();
    return u;
}

template <class Body>
PropertyResult timed(const std::string& name, int trials, Body&& body) {
    PropertyResult res;
    res.name = name;
    res.trials = trials;
    auto t0 = std::chrono::steady_clock::now();
    body(res);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

inline void fail(PropertyResult& res, const std::string& witness) {
    if (res.pass) {
        res.pass = false;
        res.witness = witness;
    }
}

} // namespace verify_detail

/// Modular-norm relations of the variable-exponent space, all three
/// branches (norm > 1, < 1, = 1), relative tolerance 1e-8.
inline PropertyResult prop_modular_norm_relations(Rng rng, int casesPerBranch) {
    using namespace verify_detail;
    return timed("modular_norm_relations", 3 * casesPerBranch, [&](PropertyResult& res) {
        const double tol = 1e-8;
        for (int branch = 0; branch < 3; ++branch) {
            for (int c = 0; c < casesPerBranch; ++c) {
                Grid g(1, rng.uniformInt(8, 64));
                GridFunction u = random_dirichlet(g, rng);
                if (u.allZero()) u[g.nodeIndex(1)] = 1.0;
                GridFunction q = random_nodal(g, rng, 1.2, 6.0);
                double qmin = 1e300, qmax = 0.0;
                for (std::size_t j = 0; j < q.size(); ++j) {
                    qmin = std::min(qmin, q[j]);
                    qmax = std::max(qmax, q[j]);
                }
                double nrm0 = luxemburg_norm(u, q);
                double target = branch == 0   ? rng.uniform(1.2, 4.0)
                                : branch == 1 ? rng.uniform(0.2, 0.85)
                                              : 1.0;
                for (std::size_t j = 0; j < u.size(); ++j) u[j] *= target / nrm0;
                double nrm = luxemburg_norm(u, q);
                double rho = modular(u, q);

                bool ok = true;
                if (branch == 0)
                    ok = rho >= std::pow(nrm, qmin) * (1.0 - tol) &&
                         rho <= std::pow(nrm, qmax) * (1.0 + tol) && nrm > 1.0 && rho > 1.0;
                else if (branch == 1)
                    ok = rho >= std::pow(nrm, qmax) * (1.0 - tol) &&
                         rho <= std::pow(nrm, qmin) * (1.0 + tol) && nrm < 1.0 && rho < 1.0;
                else
                    ok = std::abs(rho - 1.0) <= 1e-6 && std::abs(nrm - 1.0) <= 1e-6;
                if (!ok)
                    fail(res, "branch " + std::to_string(branch) + ", case " +
                                  std::to_string(c) + ": norm " + std::to_string(nrm) +
                                  ", modular " + std::to_string(rho));
            }
        }
    });
}

/// modular(u / ||u||) = 1 within the bisection tolerance.
inline PropertyResult prop_unit_ball_normalization(Rng rng, int trials) {
    using namespace verify_detail;
    return timed("unit_ball_normalization", trials, [&](PropertyResult& res) {
        for (int c = 0; c < trials; ++c) {
            Grid g(1, rng.uniformInt(8, 48));
            GridFunction u = random_dirichlet(g, rng, rng.uniform(0.1, 30.0));
            if (u.allZero()) u[g.nodeIndex(1)] = 0.5;
            GridFunction q = random_nodal(g, rng, 1.3, 5.0);
            double nrm = luxemburg_norm(u, q);
            GridFunction unit = u;
            for (std::size_t j = 0; j < unit.size(); ++j) unit[j] /= nrm;
            double rho = modular(unit, q);
            if (std::abs(rho - 1.0) > 2e-10)
                fail(res, "case " + std::to_string(c) + ": modular(u/norm) = " +
                              std::to_string(rho));
        }
    });
}

/// Luxemburg norm is absolutely homogeneous although the modular is not.
inline PropertyResult prop_norm_homogeneity(Rng rng, int trials) {
    using namespace verify_detail;
    return timed("norm_homogeneity", trials, [&](PropertyResult& res) {
        for (int c = 0; c < trials; ++c) {
            Grid g(1, rng.uniformInt(8, 32));
            GridFunction u = random_dirichlet(g, rng);
            if (u.allZero()) u[g.nodeIndex(1)] = 1.0;
            GridFunction q = random_nodal(g, rng, 1.4, 4.5);
            double lambda = rng.uniform(-40.0, 40.0);
            if (std::abs(lambda) < 1e-3) lambda = 1e-3;
            GridFunction v = u;
            for (std::size_t j = 0; j < v.size(); ++j) v[j] *= lambda;
            double lhs = luxemburg_norm(v, q);
            double rhs = std::abs(lambda) * luxemburg_norm(u, q);
            if (std::abs(lhs - rhs) > 1e-8 * (1.0 + rhs))
                fail(res, "case " + std::to_string(c) + ": |lambda| scaling off by " +
                              std::to_string(lhs - rhs));
        }
    });
}

/// Discrete Holder inequality on random conjugate exponent fields.
inline PropertyResult prop_holder_inequality(Rng rng, int trials) {
    using namespace verify_detail;
    return timed("holder_inequality", trials, [&](PropertyResult& res) {
        for (int c = 0; c < trials; ++c) {
            Grid g(1, rng.uniformInt(8, 64));
            GridFunction u = random_nodal(g, rng, -3.0, 3.0);
            GridFunction v = random_nodal(g, rng, -3.0, 3.0);
            double amp = rng.uniform(0.0, 0.5);
            double phase = rng.uniform(0.0, 6.283185307179586);
            GridFunction r = GridFunction::sample(g, [&](auto x) {
                return 2.5 + amp * std::sin(6.283185307179586 * x[0] + phase);
            });
            GridFunction s = GridFunction::sample(g, [&](auto x) {
                double rv = 2.5 + amp * std::sin(6.283185307179586 * x[0] + phase);
                return rv / (rv - 1.0);
            });
            auto [lhs, rhs] = holder_pairing(u, v, r, s);
            if (!(lhs <= rhs + 1e-10))
                fail(res, "case " + std::to_string(c) + ": lhs " + std::to_string(lhs) +
                              " > rhs " + std::to_string(rhs));
        }
    });
}

/// Vector monotonicity inequality with C3 = 2^{2-p}, p in {2, 2.7, 3, 4, 6}.
inline PropertyResult prop_monotonicity_inequality(Rng rng, int pairsPerExponent) {
    using namespace verify_detail;
    return timed("monotonicity_inequality", 5 * pairsPerExponent, [&](PropertyResult& res) {
        for (double p : {2.0, 2.7, 3.0, 4.0, 6.0}) {
            for (int c = 0; c < pairsPerExponent; ++c) {
                double a[2] = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
                double b[2] = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
                auto gap = monotonicity_gap({a, 2}, {b, 2}, p);
                if (!(gap.lhs >= gap.rhs - 1e-12 * std::max(1.0, std::abs(gap.lhs))))
                    fail(res, "p = " + std::to_string(p) + ": lhs " +
                                  std::to_string(gap.lhs) + " < rhs " +
                                  std::to_string(gap.rhs));
            }
        }
    });
}

/// residual() equals the central finite-difference gradient of energy().
inline PropertyResult prop_gradient_consistency(Rng rng, int problems) {
    using namespace verify_detail;
    return timed("gradient_consistency", problems, [&](PropertyResult& res) {
        for (int c = 0; c < problems; ++c) {
            int d = c % 2 ? 2 : 1;
            Grid g(d, d == 1 ? rng.uniformInt(4, 14) : rng.uniformInt(3, 7));
            double eps = (c / 2) % 2 ? 1e-2 : 0.0;
            double sigma = (c / 4) % 2 ? 10.0 : 0.0;
            FrozenProblem fp(g, random_exponents(g, rng, 2.2, 4.5), eps, 6.0, sigma,
                             random_smooth_dirichlet(g, rng),
                             random_nodal(g, rng, -2.0, 2.0));
            GridFunction u = random_smooth_dirichlet(g, rng);
            GridFunction r = residual(u, fp);
            for (std::size_t i = 0; i < g.interiorCount(); ++i) {
                std::size_t j = g.interiorToNode(i);
                double step = 1e-6 * (1.0 + std::abs(u[j]));
                GridFunction up = u, dn = u;
                up[j] += step;
                dn[j] -= step;
                double fd = (energy(up, fp) - energy(dn, fp)) / (2.0 * step);
                if (std::abs(fd - r[j]) >
                    1e-6 * (1.0 + std::max(std::abs(fd), std::abs(r[j])))) {
                    fail(res, "problem " + std::to_string(c) + ", node " +
                                  std::to_string(j) + ": fd " + std::to_string(fd) +
                                  " vs residual " + std::to_string(r[j]));
                    break;
                }
            }
        }
    });
}

/// Energy convexity along random segments.
inline PropertyResult prop_energy_convexity(Rng rng, int trials) {
    using namespace verify_detail;
    return timed("energy_convexity", trials, [&](PropertyResult& res) {
        for (int c = 0; c < trials; ++c) {
            Grid g(1, rng.uniformInt(4, 20));
            FrozenProblem fp = random_problem(g, rng, c % 2 ? 1e-2 : 0.0,
                                              c % 3 ? 0.0 : 5.0);
            GridFunction u = random_dirichlet(g, rng);
            GridFunction v = random_dirichlet(g, rng);
            double theta = rng.uniform(0.05, 0.95);
            GridFunction mix(g, true);
            for (std::size_t j = 0; j < mix.size(); ++j)
                mix[j] = theta * u[j] + (1.0 - theta) * v[j];
            double lhs = energy(mix, fp);
            double rhs = theta * energy(u, fp) + (1.0 - theta) * energy(v, fp);
            if (!(lhs <= rhs + 1e-12))
                fail(res, "case " + std::to_string(c) + ": segment violation " +
                              std::to_string(lhs - rhs));
        }
    });
}

/// <residual(u) - residual(v), u - v> >= 0 with source and anchor fixed.
inline PropertyResult prop_operator_monotonicity(Rng rng, int trials) {
    using namespace verify_detail;
    return timed("operator_monotonicity", trials, [&](PropertyResult& res) {
        for (int c = 0; c < trials; ++c) {
            int d = c % 2 ? 2 : 1;
            Grid g(d, d == 1 ? rng.uniformInt(6, 16) : rng.uniformInt(3, 6));
            FrozenProblem fp = random_problem(g, rng, 0.0, c % 2 ? 3.0 : 0.0);
            GridFunction u = random_dirichlet(g, rng);
            GridFunction v = random_dirichlet(g, rng);
            GridFunction ru = residual(u, fp);
            GridFunction rv = residual(v, fp);
            double inner = 0.0;
            for (std::size_t j = 0; j < u.size(); ++j)
                inner += (ru[j] - rv[j]) * (u[j] - v[j]);
            if (!(inner >= -1e-12))
                fail(res, "case " + std::to_string(c) + ": pairing " + std::to_string(inner));
        }
    });
}

/// q = 2, eps = 0 reproduces the 3-point / 5-point Laplacian stencil.
inline PropertyResult prop_linear_case_reduction(Rng rng, int trials) {
    using namespace verify_detail;
    return timed("linear_case_reduction", trials, [&](PropertyResult& res) {
        for (int c = 0; c < trials; ++c) {
            int d = c % 2 ? 2 : 1;
            Grid g(d, d == 1 ? rng.uniformInt(4, 24) : rng.uniformInt(3, 8));
            GridFunction src = random_nodal(g, rng, -2.0, 2.0);
            FrozenProblem fp =
                FrozenProblem::elliptic(g, ExponentField::constant(g, 2.0), 0.0, 2.0, src);
            GridFunction u = random_dirichlet(g, rng);
            GridFunction r = residual(u, fp);
            double h2 = g.h() * g.h();
            for (std::size_t i = 0; i < g.interiorCount(); ++i) {
                std::size_t j = g.interiorToNode(i);
                auto [ix, iy] = g.nodeMulti(j);
                double stencil = 2.0 * d * u[j] -
                                 (u[g.nodeIndex(ix - 1, iy)] + u[g.nodeIndex(ix + 1, iy)]);
                if (d == 2)
                    stencil -= u[g.nodeIndex(ix, iy - 1)] + u[g.nodeIndex(ix, iy + 1)];
                stencil = stencil / h2 - src[j];
                double got = r[j] / g.nodeWeight(j);
                if (std::abs(got - stencil) > 1e-10 * (1.0 + std::abs(stencil))) {
                    fail(res, "case " + std::to_string(c) + ", node " + std::to_string(j));
                    break;
                }
            }
        }
    });
}

/// The Newton iteration keeps a monotone energy record and converges.
inline PropertyResult prop_frozen_energy_monotone(Rng rng, int trials) {
    using namespace verify_detail;
    return timed("frozen_energy_monotone", trials, [&](PropertyResult& res) {
        for (int c = 0; c < trials; ++c) {
            Grid g(1, rng.uniformInt(8, 32));
            FrozenProblem fp = random_problem(g, rng, 0.0, c % 2 ? 2.0 : 0.0);
            FrozenSolution sol = solve_frozen(fp, random_dirichlet(g, rng, 0.5));
            if (sol.report.status != SolveStatus::Converged) {
                fail(res, "case " + std::to_string(c) + " did not converge");
                continue;
            }
            const auto& hist = sol.report.energyHistory;
            for (std::size_t k = 1; k < hist.size(); ++k)
                if (!(hist[k] <= hist[k - 1] + 1e-14 * (1.0 + std::abs(hist[k - 1])))) {
                    fail(res, "case " + std::to_string(c) + ": energy rose at step " +
                                  std::to_string(k));
                    break;
                }
        }
    });
}

/// Distinct initial guesses land on the same discrete minimizer.
inline PropertyResult prop_frozen_uniqueness(Rng rng, int trials) {
    using namespace verify_detail;
    return timed("frozen_uniqueness", trials, [&](PropertyResult& res) {
        for (int c = 0; c < trials; ++c) {
            Grid g(1, rng.uniformInt(8, 32));
            FrozenProblem fp = random_problem(g, rng, 0.0, 0.0);
            FrozenSolution a = solve_frozen(fp, random_dirichlet(g, rng, 0.5));
            FrozenSolution b = solve_frozen(fp, random_dirichlet(g, rng, 0.5));
            if (a.report.status != SolveStatus::Converged ||
                b.report.status != SolveStatus::Converged) {
                fail(res, "case " + std::to_string(c) + " did not converge");
                continue;
            }
            double dev = 0.0;
            for (std::size_t j = 0; j < a.u.size(); ++j)
                dev = std::max(dev, std::abs(a.u[j] - b.u[j]));
            if (!(dev <= 10.0 * a.report.tolUsed))
                fail(res, "case " + std::to_string(c) + ": iterates differ by " +
                              std::to_string(dev));
        }
    });
}

/// Coercivity: far out along any direction the energy exceeds E(0).
inline PropertyResult prop_coercivity(Rng rng, int trials) {
    using namespace verify_detail;
    return timed("coercivity", trials, [&](PropertyResult& res) {
        for (int c = 0; c < trials; ++c) {
            Grid g(1, rng.uniformInt(6, 24));
            FrozenProblem fp = random_problem(g, rng, c % 2 ? 1e-2 : 0.0, 0.0);
            GridFunction w = random_dirichlet(g, rng);
            double sup = w.supNorm();
            if (sup == 0.0) continue;
            GridFunction ray(g, true);
            for (std::size_t j = 0; j < ray.size(); ++j) ray[j] = 1e3 * w[j] / sup;
            if (!(energy(ray, fp) > energy(GridFunction(g, true), fp)))
                fail(res, "case " + std::to_string(c) + ": ray energy did not dominate");
        }
    });
}

/// The full randomized invariant suite behind the `verify` subcommand.
/// Streams are derived from one master seed so any failure is reproducible.
inline std::vector<PropertyResult> run_verify(std::uint64_t seed, int trials) {
    Rng master(seed);
    std::vector<PropertyResult> results;
    results.push_back(prop_modular_norm_relations(master.split(), trials));
    results.push_back(prop_unit_ball_normalization(master.split(), trials));
    results.push_back(prop_norm_homogeneity(master.split(), trials));
    results.push_back(prop_holder_inequality(master.split(), trials));
    results.push_back(prop_monotonicity_inequality(master.split(), trials * 10));
    results.push_back(prop_gradient_consistency(master.split(), std::max(8, trials / 4)));
    results.push_back(prop_energy_convexity(master.split(), trials));
    results.push_back(prop_operator_monotonicity(master.split(), trials));
    results.push_back(prop_linear_case_reduction(master.split(), std::max(4, trials / 5)));
    results.push_back(prop_frozen_energy_monotone(master.split(), std::max(4, trials / 10)));
    results.push_back(prop_frozen_uniqueness(master.split(), std::max(4, trials / 10)));
    results.push_back(prop_coercivity(master.split(), trials));
    return results;
}

} // namespace anisolve
