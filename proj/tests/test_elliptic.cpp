#include <catch2/catch.hpp>

#include "anisolve/elliptic.hpp"
#include "anisolve/expr.hpp"

#include <cmath>

using namespace anisolve;

namespace {

ExponentSpec tanh_spec(double base = 3.0, double span = 10.0) {
    ExponentSpec spec;
    spec.p = {[base](double t) { return base + std::tanh(t); }};
    spec.lower = {base - 1.0};
    spec.upper = {base + 1.0};
    spec.lipschitz = {1.0};
    spec.samplingSpan = span;
    return spec;
}

ExponentSpec constant_spec(double p) {
    ExponentSpec spec;
    spec.p = {[p](double) { return p; }};
    spec.lower = {p};
    spec.upper = {p};
    spec.lipschitz = {0.0};
    return spec;
}

ExponentSpec affine_spec() {
    // p(t) = 3 + t, adequate for iterates within [-0.5, 0.5]
    ExponentSpec spec;
    spec.p = {[](double t) { return 3.0 + t; }};
    spec.lower = {2.5};
    spec.upper = {3.5};
    spec.lipschitz = {1.0};
    spec.samplingSpan = 0.5;
    return spec;
}

} // namespace

TEST_CASE("freeze evaluates exponents at edge means and sources at nodes") {
    Grid g(1, 4);
    EllipticProblem constProb{g, constant_spec(3.0),
                              [](auto, double) { return 1.0; }, 1.0, 1.0, false};
    GridFunction bump(g, {0.0, 0.2, -0.1, 0.4, 0.0}, true);
    auto [qc, srcc] = freeze(bump, constProb);
    for (std::size_t e = 0; e < g.edgeCount(0); ++e) CHECK(qc.at(0, e) == 3.0);
    for (std::size_t j = 0; j < srcc.size(); ++j) CHECK(srcc[j] == 1.0);

    EllipticProblem tanhProb{g, tanh_spec(), [](auto, double) { return 1.0; }, 1.0, 1.0,
                             false};
    auto [qz, srcz] = freeze(GridFunction(g, true), tanhProb);
    for (std::size_t e = 0; e < g.edgeCount(0); ++e) CHECK(qz.at(0, e) == 3.0);

    EllipticProblem affProb{g, affine_spec(), [](auto, double) { return 1.0; }, 1.0, 1.0,
                            false};
    GridFunction para = GridFunction::sample(
        g, [](auto x) { return x[0] * (1.0 - x[0]) / 2.0; }, true);
    auto [qa, srca] = freeze(para, affProb);
    CHECK(qa.at(0, 0) == Approx(3.0 + 0.5 * 0.09375).epsilon(1e-14));
    CHECK(qa.at(0, 1) == Approx(3.0 + 0.5 * (0.09375 + 0.125)).epsilon(1e-14));
    CHECK(qa.at(0, 2) == Approx(3.0 + 0.5 * (0.125 + 0.09375)).epsilon(1e-14));
    CHECK(qa.at(0, 3) == Approx(3.0 + 0.5 * 0.09375).epsilon(1e-14));
}

TEST_CASE("validation of (p1), (p2) and (f)") {
    Grid g(1, 8);

    EllipticProblem good{g, tanh_spec(), [](auto, double) { return -1.0; }, 1.0, 1.0, true};
    ValidationReport repGood = validate(good);
    INFO(repGood.summary());
    CHECK(repGood.ok());

    // constant exponent below 2 fails (p1)
    ExponentSpec low;
    low.p = {[](double) { return 1.5; }};
    low.lower = {1.5};
    low.upper = {1.5};
    low.lipschitz = {0.0};
    EllipticProblem lowProb{g, low, [](auto, double) { return -1.0; }, 1.0, 1.0, false};
    ValidationReport repLow = validate(lowProb);
    CHECK(!repLow.ok());
    CHECK(!repLow.checks[0].pass);

    // understated Lipschitz constant fails (p2)
    ExponentSpec lip = tanh_spec();
    lip.lipschitz = {0.2};
    EllipticProblem lipProb{g, lip, [](auto, double) { return -1.0; }, 1.0, 1.0, false};
    CHECK(!validate(lipProb).ok());

    // cubic growth with declared r = 2 fails the sampled growth bound
    EllipticProblem cubic{g, tanh_spec(),
                          [](auto, double u) { return u * u * u; }, 1.0, 2.0, false};
    ValidationReport repCubic = validate(cubic);
    CHECK(!repCubic.ok());

    // r >= p^- fails condition (f) outright
    EllipticProblem rTooBig{g, tanh_spec(), [](auto, double) { return -1.0; }, 1.0, 2.5,
                            false};
    ValidationReport repR = validate(rTooBig);
    CHECK(!repR.ok());
    bool cited = false;
    for (const auto& c : repR.checks)
        if (!c.pass && c.condition.find("(f)") != std::string::npos) cited = true;
    CHECK(cited);

    // 2D needs p^- > 2
    Grid g2(2, 4);
    EllipticProblem flat2d{g2,
                           {{[](double) { return 2.5; }, [](double) { return 2.5; }},
                            {2.5, 2.5},
                            {2.5, 2.5},
                            {0.0, 0.0},
                            10.0},
                           [](auto, double) { return -1.0; },
                           1.0,
                           1.0,
                           false};
    CHECK(validate(flat2d).ok());
    EllipticProblem shallow2d = flat2d;
    shallow2d.exponents.p = {[](double) { return 2.0; }, [](double) { return 2.0; }};
    shallow2d.exponents.lower = {2.0, 2.0};
    shallow2d.exponents.upper = {2.0, 2.0};
    CHECK(!validate(shallow2d).ok());
}

TEST_CASE("constant exponent collapses to a single frozen solve") {
    Grid g(1, 64);
    EllipticProblem prob{g, constant_spec(3.0), [](auto, double) { return 1.0; }, 1.0,
                         1.0, false};
    ContinuationParams cp;
    cp.epsMin = 1e-12;
    EllipticSolution sol = solve_elliptic(prob, cp);
    REQUIRE(sol.report.status == SolveStatus::Converged);

    GridFunction one = GridFunction::sample(g, [](auto) { return 1.0; });
    FrozenSolution direct = solve_frozen(
        FrozenProblem::elliptic(g, ExponentField::constant(g, 3.0), 0.0, 3.0, one),
        GridFunction(g, true));
    double dev = 0.0;
    for (std::size_t j = 0; j < sol.u.size(); ++j)
        dev = std::max(dev, std::abs(sol.u[j] - direct.u[j]));
    CHECK(dev <= 10.0 * cp.tolPicard);
}

TEST_CASE("manufactured p(u) case is recovered") {
    Grid g(1, 64);
    GridFunction uStar = GridFunction::sample(
        g, [](auto x) { return x[0] * (1.0 - x[0]) / 2.0; }, true);

    EllipticProblem shell{g, affine_spec(), [](auto, double) { return 0.0; }, 1.0, 1.0,
                          false};
    auto [qStar, ignored] = freeze(uStar, shell);
    FrozenProblem hollow = FrozenProblem::elliptic(g, qStar, 0.0, 3.5, GridFunction(g, false));
    GridFunction defect = residual(uStar, hollow);
    std::vector<double> sourceValues(g.nodeCount(), 0.0);
    for (std::size_t j = 0; j < g.nodeCount(); ++j)
        sourceValues[j] = defect[j] / g.nodeWeight(j);

    const int n = g.n();
    EllipticProblem prob{g, affine_spec(),
                         [sourceValues, n](std::array<double, 2> x, double) {
                             auto ix = static_cast<std::size_t>(std::lround(x[0] * n));
                             return sourceValues[ix];
                         },
                         1.0, 1.0, false};

    ContinuationParams cp;
    cp.epsMin = 1e-12;
    EllipticSolution sol = solve_elliptic(prob, cp);
    REQUIRE(sol.report.status == SolveStatus::Converged);
    double dev = 0.0;
    for (std::size_t j = 0; j < sol.u.size(); ++j)
        dev = std::max(dev, std::abs(sol.u[j] - uStar[j]));
    CHECK(dev <= 10.0 * cp.tolPicard);

    // self-consistency: freezing the returned iterate and solving once more
    // moves it by no more than the Picard tolerance allows
    auto [qSelf, srcSelf] = freeze(sol.u, prob);
    FrozenSolution again = solve_frozen(
        FrozenProblem::elliptic(g, qSelf, 0.0, 3.5, srcSelf), sol.u);
    double drift = 0.0;
    for (std::size_t j = 0; j < sol.u.size(); ++j)
        drift = std::max(drift, std::abs(again.u[j] - sol.u[j]));
    CHECK(drift <= 10.0 * cp.tolPicard);

    // final weak-form defect honors the Newton tolerance
    CHECK(sol.report.finalResidual <= sol.report.finalResidualTol);

    // a priori trace: the gradient modular of accepted iterates does not grow
    // as epsilon decreases (5% slack)
    double runningMax = 0.0;
    for (std::size_t k = 0; k < sol.report.stages.size(); ++k) {
        double m = sol.report.stages[k].gradientModular;
        if (k > 0) CHECK(m <= 1.05 * runningMax);
        runningMax = std::max(runningMax, m);
    }

    // undamped Picard is eventually contractive on this case
    const auto& history = sol.report.stages.front().diffHistory;
    REQUIRE(history.size() >= 4);
    for (std::size_t k = history.size() - 3; k < history.size(); ++k)
        CHECK(history[k] < history[k - 1]);
}

TEST_CASE("2-D solve: symmetry and self-consistency") {
    Grid g(2, 12);
    ExponentSpec spec;
    spec.p = {[](double t) { return 3.0 + 0.5 * std::tanh(t); },
              [](double t) { return 3.2 + 0.3 * std::tanh(t); }};
    spec.lower = {2.5, 2.9};
    spec.upper = {3.5, 3.5};
    spec.lipschitz = {0.5, 0.3};
    EllipticProblem prob{g, spec, [](auto, double) { return -1.0; }, 1.0, 1.0, true};
    REQUIRE(validate(prob).ok());

    ContinuationParams cp;
    EllipticSolution sol = solve_elliptic(prob, cp);
    REQUIRE(sol.report.status == SolveStatus::Converged);

    std::size_t center = g.nodeIndex(6, 6);
    CHECK(sol.u[center] < 0.0); // negative source pushes the solution down

    // reflection symmetry in both axes (data is x- and y-independent)
    for (int iy = 0; iy <= 12; ++iy)
        for (int ix = 0; ix <= 12; ++ix) {
            double v = sol.u[g.nodeIndex(ix, iy)];
            CHECK(v == Approx(sol.u[g.nodeIndex(12 - ix, iy)]).margin(1e-9));
            CHECK(v == Approx(sol.u[g.nodeIndex(ix, 12 - iy)]).margin(1e-9));
        }

    auto [qSelf, srcSelf] = freeze(sol.u, prob);
    FrozenSolution again = solve_frozen(
        FrozenProblem::elliptic(g, qSelf, 0.0, 3.5, srcSelf), sol.u);
    double drift = 0.0;
    for (std::size_t j = 0; j < sol.u.size(); ++j)
        drift = std::max(drift, std::abs(again.u[j] - sol.u[j]));
    CHECK(drift <= 10.0 * cp.tolPicard);
}

TEST_CASE("zero source returns the zero solution immediately") {
    Grid g(1, 32);
    EllipticProblem prob{g, tanh_spec(), [](auto, double) { return 0.0; }, 1.0, 1.0,
                         false};
    EllipticSolution sol = solve_elliptic(prob);
    REQUIRE(sol.report.status == SolveStatus::Converged);
    CHECK(sol.u.allZero());
    for (const auto& st : sol.report.stages) CHECK(st.iterations == 1);
    CHECK(sol.report.polishSolves == 0);
}

TEST_CASE("near-zero fixed points are flagged when f(.,0) < 0 was expected") {
    Grid g(1, 16);
    EllipticProblem prob{g, tanh_spec(), [](auto, double) { return -1e-13; }, 1.0, 1.0,
                         true};
    EllipticSolution sol = solve_elliptic(prob);
    REQUIRE(sol.report.status == SolveStatus::Converged);
    CHECK(sol.report.nearZeroFixedPoint);
}

TEST_CASE("expression failures surface with the evaluation site") {
    Grid g(1, 4);
    Expr bad = Expr::parse("1/x");
    EllipticProblem prob{g, tanh_spec(),
                         [bad](std::array<double, 2> x, double) {
                             return bad.eval(EvalEnv{}.set(Var::X, x[0]));
                         },
                         1.0, 1.0, false};
    try {
        freeze(GridFunction(g, true), prob);
        FAIL("expected EvalError");
    } catch (const EvalError& e) {
        std::string msg = e.what();
        CHECK(msg.find("node (x=0") != std::string::npos);
        CHECK(msg.find("division by zero") != std::string::npos);
    }
}

TEST_CASE("picard budget exhaustion reports NonConvergence") {
    Grid g(1, 16);
    EllipticProblem prob{g, affine_spec(), [](auto, double) { return 1.0; }, 1.0, 1.0,
                         false};
    ContinuationParams cp;
    cp.maxPicard = 1;
    cp.tolPicard = 1e-14;
    EllipticSolution sol = solve_elliptic(prob, cp);
    CHECK(sol.report.status == SolveStatus::NonConvergence);
}
