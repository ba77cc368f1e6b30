#include <catch2/catch.hpp>

#include "anisolve/expr.hpp"
#include "anisolve/rng.hpp"

#include <cmath>
#include <string>
#include <vector>

using anisolve::EvalEnv;
using anisolve::Expr;
using anisolve::Var;

namespace {

double ev(const std::string& src, const EvalEnv& env = {}) {
    return Expr::parse(src).eval(env);
}

} // namespace

TEST_CASE("precedence and associativity") {
    CHECK(ev("2+3*4") == 14.0);
    CHECK(ev("2^3^2") == 512.0); // right-associative
    CHECK(ev("2*3+4") == 10.0);
    CHECK(ev("2-3-4") == -5.0); // left-associative
    CHECK(ev("12/3/2") == 2.0);
    CHECK(ev("(2+3)*4") == 20.0);
    CHECK(ev("-2^2") == -4.0); // ^ binds tighter than unary minus
    CHECK(ev("(-2)^2") == 4.0);
    CHECK(ev("2^-1") == 0.5);
    CHECK(ev("-x^2", EvalEnv{}.set(Var::X, 3.0)) == -9.0);
    CHECK(ev("2*-3") == -6.0);
}

TEST_CASE("evaluation of sources and exponents") {
    CHECK(ev("x*(1-x)/2", EvalEnv{}.set(Var::X, 0.5)) == 0.125);
    CHECK(ev("sin(3.141592653589793*x)", EvalEnv{}.set(Var::X, 0.5)) == Approx(1.0));
    CHECK(ev("3 + tanh(t)", EvalEnv{}.set(Var::T, 0.0)) == 3.0);

    // tanh(10)+3 stays just below the upper clamp bound
    double v = ev("clamp(tanh(u)+3, 2.5, 4)", EvalEnv{}.set(Var::U, 10.0));
    CHECK(v == Approx(std::tanh(10.0) + 3.0));
    CHECK(v < 4.0);
    CHECK(v > 3.999999);
    CHECK(ev("clamp(u, 2.5, 4)", EvalEnv{}.set(Var::U, 10.0)) == 4.0);
    CHECK(ev("min(2, max(1, 5))") == 2.0);
    CHECK(ev("abs(-3.5)") == 3.5);
    CHECK(ev("exp(0)") == 1.0);
    CHECK(ev("cos(0)") == 1.0);
}

TEST_CASE("parse errors carry byte offsets") {
    try {
        Expr::parse("2+*3");
        FAIL("expected ParseError");
    } catch (const anisolve::ParseError& e) {
        CHECK(e.offset() == 2);
    }

    CHECK_THROWS_AS(Expr::parse("foo(2)"), anisolve::ParseError);
    CHECK_THROWS_AS(Expr::parse("min(1)"), anisolve::ParseError);
    CHECK_THROWS_AS(Expr::parse("clamp(1,2)"), anisolve::ParseError);
    CHECK_THROWS_AS(Expr::parse("sin(1,2)"), anisolve::ParseError);
    CHECK_THROWS_AS(Expr::parse("1 2"), anisolve::ParseError);
    CHECK_THROWS_AS(Expr::parse("(1"), anisolve::ParseError);
    CHECK_THROWS_AS(Expr::parse(""), anisolve::ParseError);
    CHECK_THROWS_AS(Expr::parse("q+1"), anisolve::ParseError);
}

TEST_CASE("evaluation errors") {
    CHECK_THROWS_AS(ev("1/t", EvalEnv{}.set(Var::T, 0.0)), anisolve::EvalError);
    CHECK_THROWS_AS(ev("0^-1"), anisolve::EvalError);
    CHECK_THROWS_AS(ev("(-2)^0.5"), anisolve::EvalError);
    CHECK_THROWS_AS(ev("clamp(1, 2, 0)"), anisolve::EvalError);
    CHECK_THROWS_AS(ev("x"), anisolve::EvalError); // unbound variable
}

TEST_CASE("print then reparse yields an identical tree") {
    std::vector<std::string> sources = {
        "2+3*4",
        "2^3^2",
        "-x^2",
        "clamp(tanh(u)+3, 2.5, 4)",
        "x*(1-x)/2",
        "sin(3.141592653589793*x)*exp(-t)",
        "min(max(u, -1), 1) + 0.5e-3",
        "2^-3 - -4",
    };
    for (const auto& src : sources) {
        Expr a = Expr::parse(src);
        Expr b = Expr::parse(a.str());
        INFO(src << "  ->  " << a.str());
        CHECK(a.sameTree(b));
    }
}

namespace {

// Independent shunting-yard evaluator over the same token stream; used as
// the precedence oracle. Unary minus sits between '*'/'/' and '^'.
double shunting_eval(const std::string& src, bool& ok) {
    struct Tok { char kind; double num; }; // kind: 'n'=number, else operator char, 'u'=unary minus
    std::vector<Tok> output;
    std::vector<char> ops;
    auto prec = [](char c) {
        switch (c) {
        case '+': case '-': return 1;
        case '*': case '/': return 2;
        case 'u': return 3;
        case '^': return 4;
        }
        return 0;
    };
    auto rightAssoc = [](char c) { return c == '^' || c == 'u'; };

    bool prevWasOperand = false;
    std::size_t i = 0;
    ok = true;
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            char* end = nullptr;
            double v = std::strtod(src.c_str() + i, &end);
            output.push_back({'n', v});
            i = static_cast<std::size_t>(end - src.c_str());
            prevWasOperand = true;
            continue;
        }
        if (c == '(') {
            ops.push_back('(');
            ++i;
            prevWasOperand = false;
            continue;
        }
        if (c == ')') {
            while (!ops.empty() && ops.back() != '(') {
                output.push_back({ops.back(), 0});
                ops.pop_back();
            }
            if (ops.empty()) { ok = false; return 0; }
            ops.pop_back();
            ++i;
            prevWasOperand = true;
            continue;
        }
        char op = c;
        if (op == '-' && !prevWasOperand) op = 'u';
        // prefix operators bind the upcoming operand and never pop
        if (op != 'u') {
            while (!ops.empty() && ops.back() != '(' &&
                   (prec(ops.back()) > prec(op) ||
                    (prec(ops.back()) == prec(op) && !rightAssoc(op)))) {
                output.push_back({ops.back(), 0});
                ops.pop_back();
            }
        }
        ops.push_back(op);
        ++i;
        prevWasOperand = false;
    }
    while (!ops.empty()) {
        if (ops.back() == '(') { ok = false; return 0; }
        output.push_back({ops.back(), 0});
        ops.pop_back();
    }

    std::vector<double> stack;
    for (const auto& t : output) {
        if (t.kind == 'n') { stack.push_back(t.num); continue; }
        if (t.kind == 'u') {
            if (stack.empty()) { ok = false; return 0; }
            stack.back() = -stack.back();
            continue;
        }
        if (stack.size() < 2) { ok = false; return 0; }
        double b = stack.back(); stack.pop_back();
        double a = stack.back(); stack.pop_back();
        switch (t.kind) {
        case '+': stack.push_back(a + b); break;
        case '-': stack.push_back(a - b); break;
        case '*': stack.push_back(a * b); break;
        case '/': stack.push_back(a / b); break;
        case '^': stack.push_back(std::pow(a, b)); break;
        default: ok = false; return 0;
        }
    }
    if (stack.size() != 1) { ok = false; return 0; }
    return stack.front();
}

std::string random_numeric_expr(anisolve::Rng& rng, int depth) {
    if (depth <= 0 || rng.uniform() < 0.3) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", rng.uniform(0.5, 2.0));
        return buf;
    }
    double pick = rng.uniform();
    if (pick < 0.15) return "-" + random_numeric_expr(rng, depth - 1);
    if (pick < 0.3) return "(" + random_numeric_expr(rng, depth - 1) + ")";
    static const char* ops[] = {"+", "-", "*", "/", "^"};
    const char* op = ops[rng.uniformInt(0, 4)];
    std::string lhs = random_numeric_expr(rng, depth - 1);
    std::string rhs = random_numeric_expr(rng, depth - 1);
    return lhs + op + rhs;
}

} // namespace

TEST_CASE("random expressions agree with the shunting-yard oracle") {
    anisolve::Rng rng(20240811ULL);
    int checked = 0;
    for (int trial = 0; trial < 400; ++trial) {
        std::string src = random_numeric_expr(rng, 4);
        bool ok = true;
        double ref = shunting_eval(src, ok);
        REQUIRE(ok);
        if (!std::isfinite(ref)) continue; // exponent blow-ups are not precedence checks
        double mine = ev(src);
        INFO(src);
        CHECK(mine == Approx(ref).epsilon(1e-12).margin(1e-12));
        ++checked;
    }
    CHECK(checked > 300);

    // round-trip the same corpus
    anisolve::Rng rng2(77ULL);
    for (int trial = 0; trial < 200; ++trial) {
        std::string src = random_numeric_expr(rng2, 4);
        Expr a = Expr::parse(src);
        CHECK(a.sameTree(Expr::parse(a.str())));
    }
}
