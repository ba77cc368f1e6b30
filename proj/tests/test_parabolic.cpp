#include <catch2/catch.hpp>

#include "anisolve/parabolic.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace anisolve;

namespace {

constexpr double kPi = 3.141592653589793;

ExponentSpec constant_spec1(double p) {
    return {{[p](double) { return p; }}, {p}, {p}, {0.0}, 10.0};
}

ExponentSpec tanh_spec1(double base) {
    return {{[base](double s) { return base + std::tanh(s); }},
            {base - 1.0},
            {base + 1.0},
            {1.0},
            10.0};
}

ParabolicProblem heat_problem(int n, double T, int steps) {
    return {Grid(1, n),
            constant_spec1(2.0),
            {NonlocalMap::Kind::GradNorm, 2.0},
            [](auto, double) { return 0.0; },
            [](std::array<double, 2> x) { return std::sin(kPi * x[0]); },
            T,
            steps,
            false};
}

} // namespace

TEST_CASE("steklov average is exact through cubics") {
    Grid g(1, 4);
    double t = 0.3, h = 0.05;

    GridFunction c = steklov_average([](auto, double) { return 7.5; }, t, h, g);
    for (std::size_t j = 0; j < c.size(); ++j) CHECK(c[j] == Approx(7.5).margin(1e-13));

    GridFunction lin = steklov_average([](auto, double tau) { return tau; }, t, h, g);
    for (std::size_t j = 0; j < lin.size(); ++j)
        CHECK(lin[j] == Approx(t + h / 2.0).margin(1e-13));

    GridFunction quad = steklov_average([](auto, double tau) { return tau * tau; }, t, h, g);
    for (std::size_t j = 0; j < quad.size(); ++j)
        CHECK(quad[j] == Approx(t * t + t * h + h * h / 3.0).margin(1e-13));

    GridFunction cub = steklov_average(
        [](std::array<double, 2> x, double tau) { return (1.0 + x[0]) * tau * tau * tau; },
        t, h, g);
    for (std::size_t j = 0; j < cub.size(); ++j) {
        double x0 = g.nodeCoord(j)[0];
        double exact = (1.0 + x0) * (std::pow(t + h, 4.0) - std::pow(t, 4.0)) / (4.0 * h);
        CHECK(cub[j] == Approx(exact).margin(1e-12));
    }

    CHECK_THROWS_AS(steklov_average([](auto, double) { return 0.0; }, 0.0, 0.0, g),
                    StructuralError);
}

TEST_CASE("nonlocal map evaluation") {
    Grid g2(1, 2);
    CHECK(b_eval(GridFunction(g2, true), {NonlocalMap::Kind::GradNorm, 2.0}) == 0.0);

    GridFunction hat(g2, {0.0, 0.5, 0.0}, true);
    CHECK(b_eval(hat, {NonlocalMap::Kind::GradNorm, 2.0}) == Approx(1.0).epsilon(1e-14));

    Grid g(1, 128);
    GridFunction sine = sample_dirichlet(g, [](auto x) { return std::sin(kPi * x[0]); });
    CHECK(b_eval(sine, {NonlocalMap::Kind::LqNorm, 2.0}) ==
          Approx(std::sqrt(0.5)).margin(1e-3));

    CHECK_THROWS_AS(b_eval(hat, NonlocalMap{NonlocalMap::Kind::LqNorm, 0.5}),
                    StructuralError);
}

TEST_CASE("constant-exponent step is one implicit Euler heat step") {
    int n = 64, steps = 10;
    double T = 0.1;
    ParabolicProblem prob = heat_problem(n, T, steps);
    const Grid& g = prob.grid;
    GridFunction uPrev = sample_dirichlet(g, prob.u0);

    auto [u1, rep] = step(uPrev, 1, prob);
    REQUIRE(rep.status == SolveStatus::Converged);
    CHECK(rep.scalarIterations == 1); // exponent does not depend on s

    // sin(pi x) is an exact eigenvector of the discrete Laplacian
    double hx = g.h(), ht = T / steps;
    double lambda = 4.0 / (hx * hx) * std::pow(std::sin(kPi * hx / 2.0), 2.0);
    double decay = 1.0 / (1.0 + ht * lambda);
    for (std::size_t j = 0; j < u1.size(); ++j)
        CHECK(u1[j] == Approx(decay * uPrev[j]).margin(1e-8));
}

TEST_CASE("zero data stays zero") {
    ParabolicProblem prob{Grid(1, 16),
                          tanh_spec1(3.0),
                          {NonlocalMap::Kind::GradNorm, 2.0},
                          [](auto, double) { return 0.0; },
                          [](auto) { return 0.0; },
                          0.5,
                          5,
                          false};
    ParabolicSolution sol = solve_parabolic(prob);
    REQUIRE(sol.report.status == SolveStatus::Converged);
    for (std::size_t k = 0; k <= sol.trajectory.stepCount(); ++k) {
        CHECK(sol.trajectory.state(k).allZero());
        CHECK(sol.trajectory.scalar(k) == 0.0);
    }
}

TEST_CASE("scalar fixed point agrees with an independent bisection oracle") {
    Grid g(1, 64);
    ParabolicProblem prob{g,
                          tanh_spec1(3.0),
                          {NonlocalMap::Kind::GradNorm, 2.0},
                          [](auto, double) { return 1.0; },
                          [](auto) { return 0.0; },
                          0.1,
                          1,
                          false};
    GridFunction zero(g, true);
    auto [u1, rep] = step(zero, 1, prob, {});
    REQUIRE(rep.status == SolveStatus::Converged);
    CHECK(std::abs(b_eval(u1, prob.b) - rep.sFinal) <= 1e-9 * (1.0 + std::abs(rep.sFinal)));

    double h = prob.stepSize();
    GridFunction source = steklov_average(prob.source, 0.0, h, g);
    auto solveAt = [&](double s) {
        double p = 3.0 + std::tanh(s);
        FrozenProblem fp(g, ExponentField::constant(g, p), 0.0, 4.0, 1.0 / h, zero, source);
        return solve_frozen(fp, zero).u;
    };
    double sOracle = oracle::bisect(
        [&](double s) { return b_eval(solveAt(s), prob.b) - s; }, 0.0, 5.0, 1e-11);
    CHECK(std::abs(rep.sFinal - sOracle) <= 1e-6);
}

TEST_CASE("heat equation oracle at T = 0.1") {
    ParabolicProblem prob = heat_problem(128, 0.1, 200);
    ParabolicSolution sol = solve_parabolic(prob);
    REQUIRE(sol.report.status == SolveStatus::Converged);

    const GridFunction& uT = sol.trajectory.state(200);
    double amp = std::exp(-kPi * kPi * 0.1);
    CHECK(amp == Approx(0.3727).margin(2e-4));
    double worst = 0.0;
    for (std::size_t j = 0; j < uT.size(); ++j) {
        double x0 = prob.grid.nodeCoord(j)[0];
        worst = std::max(worst, std::abs(uT[j] - amp * std::sin(kPi * x0)));
    }
    CHECK(worst / amp <= 0.02);
}

TEST_CASE("interpolant contract") {
    ParabolicProblem prob = heat_problem(16, 0.2, 4);
    ParabolicSolution sol = solve_parabolic(prob);
    REQUIRE(sol.report.status == SolveStatus::Converged);
    const Trajectory& traj = sol.trajectory;
    double h = 0.05;
    CHECK(&traj.at(0.0) == &traj.state(0));
    for (int k = 1; k <= 4; ++k) {
        CHECK(&traj.at(k * h) == &traj.state(static_cast<std::size_t>(k)));
        CHECK(&traj.at((k - 1) * h + 1e-9) == &traj.state(static_cast<std::size_t>(k)));
    }
    CHECK_THROWS_AS(traj.at(-0.1), StructuralError);
    CHECK_THROWS_AS(traj.at(0.3), StructuralError);
}

TEST_CASE("discrete energy ledger with f = 0") {
    for (int variant = 0; variant < 2; ++variant) {
        NonlocalMap map = variant == 0 ? NonlocalMap{NonlocalMap::Kind::GradNorm, 2.0}
                                       : NonlocalMap{NonlocalMap::Kind::LqNorm, 2.0};
        ParabolicProblem prob{Grid(1, 48),
                              tanh_spec1(3.0),
                              map,
                              [](auto, double) { return 0.0; },
                              [](std::array<double, 2> x) {
                                  return std::sin(kPi * x[0]) + 0.3 * std::sin(3.0 * kPi * x[0]);
                              },
                              0.2,
                              8,
                              false};
        ParabolicSolution sol = solve_parabolic(prob);
        REQUIRE(sol.report.status == SolveStatus::Converged);
        double tol = 1e-9 * 1.0; // auto Newton tolerance with zero source
        double prev = l2_norm_sq(sol.trajectory.state(0));
        for (const auto& led : sol.report.steps) {
            CHECK(led.energyLhs <= led.energyRhs + 100.0 * tol);
            CHECK(led.l2NormSq <= prev + 100.0 * tol);
            CHECK(std::abs(b_eval(sol.trajectory.state(static_cast<std::size_t>(led.k)),
                                  prob.b) -
                           led.s) <= 1e-9 * (1.0 + std::abs(led.s)));
            prev = led.l2NormSq;
        }
    }
}

TEST_CASE("uniform L-infinity L2 bound with the explicit Young constant") {
    ParabolicProblem prob{Grid(1, 32),
                          tanh_spec1(3.0),
                          {NonlocalMap::Kind::GradNorm, 2.0},
                          [](std::array<double, 2> x, double t) {
                              return 2.0 * std::cos(3.0 * t) * x[0];
                          },
                          [](std::array<double, 2> x) { return std::sin(kPi * x[0]); },
                          0.5,
                          20,
                          false};
    ParabolicSolution sol = solve_parabolic(prob);
    REQUIRE(sol.report.status == SolveStatus::Converged);

    double pminus = prob.exponents.declaredMin();
    double conj = pminus / (pminus - 1.0);
    double maxSourceL2 = 0.0;
    double h = prob.stepSize();
    for (int k = 1; k <= prob.steps; ++k) {
        GridFunction fk = steklov_average(prob.source, (k - 1) * h, h, prob.grid);
        maxSourceL2 = std::max(maxSourceL2, std::sqrt(l2_norm_sq(fk)));
    }
    // <f,u> <= ||f|| * (1/2)||D u||_{p^-} <= delta rho + delta^{-1/(p^- - 1)} (||f||/2)^{(p^-)'}
    // with delta = 1/2 and rho <= sum_i rho_i + 1
    double C = 1.0 + 2.0 * std::pow(2.0, 1.0 / (pminus - 1.0)) *
                         std::pow(0.5 * maxSourceL2, conj);
    double bound = l2_norm_sq(sol.trajectory.state(0)) + C * prob.horizon + 1e-6;
    for (const auto& led : sol.report.steps) CHECK(led.l2NormSq <= bound);
}

TEST_CASE("nonconvergent step hands back the partial trajectory") {
    ParabolicProblem prob{Grid(1, 16),
                          tanh_spec1(3.0),
                          {NonlocalMap::Kind::GradNorm, 2.0},
                          [](auto, double) { return 1.0; },
                          [](auto) { return 0.0; },
                          0.1,
                          2,
                          false};
    StepParams sp;
    sp.maxBIter = 1;
    ParabolicSolution sol = solve_parabolic(prob, sp);
    CHECK(sol.report.status == SolveStatus::NonConvergence);
    CHECK(sol.report.completedSteps == 0);
    CHECK(sol.trajectory.stepCount() == 0);
}

TEST_CASE("parabolic validation") {
    ParabolicProblem good{Grid(1, 8),
                          tanh_spec1(3.0),
                          {NonlocalMap::Kind::LqNorm, 2.0},
                          [](auto, double) { return 0.0; },
                          [](std::array<double, 2> x) { return x[0] * (1.0 - x[0]); },
                          1.0,
                          4,
                          false};
    CHECK(validate(good).ok());

    ParabolicProblem badU0 = good;
    badU0.u0 = [](std::array<double, 2> x) { return 1.0 + x[0]; };
    CHECK(!validate(badU0).ok());

    ParabolicProblem badT = good;
    badT.horizon = -1.0;
    CHECK(!validate(badT).ok());

    ParabolicProblem badB = good;
    badB.b = {NonlocalMap::Kind::LqNorm, 0.2};
    CHECK(!validate(badB).ok());
}

TEST_CASE("epsilon continuation variant matches the direct step") {
    Grid g(1, 32);
    ParabolicProblem direct{g,
                            tanh_spec1(3.0),
                            {NonlocalMap::Kind::GradNorm, 2.0},
                            [](auto, double) { return 1.0; },
                            [](auto) { return 0.0; },
                            0.1,
                            1,
                            false};
    ParabolicProblem continued = direct;
    continued.epsilonContinuation = true;

    GridFunction zero(g, true);
    auto [uA, repA] = step(zero, 1, direct);
    auto [uB, repB] = step(zero, 1, continued);
    REQUIRE(repA.status == SolveStatus::Converged);
    REQUIRE(repB.status == SolveStatus::Converged);
    double dev = 0.0;
    for (std::size_t j = 0; j < uA.size(); ++j)
        dev = std::max(dev, std::abs(uA[j] - uB[j]));
    CHECK(dev <= 1e-7);
}
