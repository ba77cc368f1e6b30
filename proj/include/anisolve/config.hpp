#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "anisolve/elliptic.hpp"
#include "anisolve/expr.hpp"
#include "anisolve/parabolic.hpp"

namespace anisolve {

using nlohmann::json;

/// Everything a solver run needs, read from one JSON case document.
/// The schema is strict: unknown keys are rejected, defaults are documented
/// in configs/schema.json.
struct CaseConfig {
    json raw;

    int dim = 1;
    int n = 16;
    std::string mode; // "elliptic" | "parabolic"

    std::vector<Expr> exponentExprs;
    std::vector<std::array<double, 2>> exponentBounds;
    std::vector<double> exponentLipschitz;
    double samplingSpan = 10.0;

    Expr sourceExpr;

    // elliptic
    double growthC = 1.0;
    double growthR = 1.0;
    bool expectNegativeAtZero = false;

    // parabolic
    std::string bKind = "grad_norm";
    double bQ = 2.0;
    Expr u0Expr;
    double horizon = 1.0;
    int steps = 1;
    bool epsilonContinuation = false;
    std::vector<double> snapshotTimes;
    std::string outputDirectory; // empty: use the CLI --out value

    NewtonParams newton;
    ContinuationParams continuation;
    double tolB = 1e-9;
    int maxBIter = 100;
    double thetaB = 0.5;

    std::uint64_t seed = 42;

    std::vector<int> convergenceLevels;
    bool hasReference = false;
    Expr referenceExpr;
};

namespace detail {

inline void check_keys(const json& obj, const std::string& where,
                       const std::set<std::string>& allowed) {
    if (!obj.is_object())
        throw ConfigError(where + " must be a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

inline const json& need(const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ConfigError(where + " is missing required key '" + key + "'");
    return *it;
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("key '") + key + "' has the wrong type");
    }
}

inline Expr parse_config_expr(const json& j, const std::string& where,
                              const std::set<Var>& allowedVars) {
    if (!j.is_string())
        throw ConfigError(where + " must be an expression string");
    Expr e;
    try {
        e = Expr::parse(j.get<std::string>());
    } catch (const ParseError& pe) {
        throw ConfigError(where + ": " + pe.what() + " (byte offset " +
                          std::to_string(pe.offset()) + ")");
    }
    for (Var v : {Var::X, Var::Y, Var::T, Var::U, Var::S})
        if (e.usesVar(v) && !allowedVars.count(v))
            throw ConfigError(where + " may not reference variable '" +
                              std::string(var_name(v)) + "'");
    return e;
}

} // namespace detail

namespace detail {

inline CaseConfig parse_config_impl(const json& doc) {
    using detail::check_keys;
    using detail::get_or;
    using detail::need;

    check_keys(doc, "config",
               {"grid", "mode", "exponents", "source", "elliptic", "parabolic", "solver",
                "output", "seed", "convergence"});

    CaseConfig cfg;
    cfg.raw = doc;

    const json& grid = need(doc, "config", "grid");
    check_keys(grid, "grid", {"d", "n"});
    cfg.dim = need(grid, "grid", "d").get<int>();
    cfg.n = need(grid, "grid", "n").get<int>();
    if (cfg.dim != 1 && cfg.dim != 2) throw ConfigError("grid.d must be 1 or 2");
    if (cfg.n < 2) throw ConfigError("grid.n must be at least 2");

    cfg.mode = need(doc, "config", "mode").get<std::string>();
    if (cfg.mode != "elliptic" && cfg.mode != "parabolic")
        throw ConfigError("mode must be 'elliptic' or 'parabolic'");

    const json& exps = need(doc, "config", "exponents");
    check_keys(exps, "exponents", {"expressions", "bounds", "lipschitz", "sampling_span"});
    const json& exprList = need(exps, "exponents", "expressions");
    if (!exprList.is_array() || static_cast<int>(exprList.size()) != cfg.dim)
        throw ConfigError("exponents.expressions must list one expression per axis");
    for (const auto& e : exprList)
        cfg.exponentExprs.push_back(detail::parse_config_expr(
            e, "exponent expression", {Var::T, Var::S}));
    const json& bounds = need(exps, "exponents", "bounds");
    if (!bounds.is_array() || static_cast<int>(bounds.size()) != cfg.dim)
        throw ConfigError("exponents.bounds must list [low, high] per axis");
    for (const auto& b : bounds) {
        if (!b.is_array() || b.size() != 2)
            throw ConfigError("each exponent bound must be a [low, high] pair");
        cfg.exponentBounds.push_back({b[0].get<double>(), b[1].get<double>()});
    }
    const json& lip = need(exps, "exponents", "lipschitz");
    if (!lip.is_array() || static_cast<int>(lip.size()) != cfg.dim)
        throw ConfigError("exponents.lipschitz must list one constant per axis");
    for (const auto& c : lip) cfg.exponentLipschitz.push_back(c.get<double>());
    cfg.samplingSpan = get_or(exps, "sampling_span", 10.0);

    std::set<Var> sourceVars{Var::X};
    if (cfg.dim == 2) sourceVars.insert(Var::Y);
    sourceVars.insert(cfg.mode == "elliptic" ? Var::U : Var::T);
    cfg.sourceExpr =
        detail::parse_config_expr(need(doc, "config", "source"), "source", sourceVars);

    if (cfg.mode == "elliptic") {
        if (doc.contains("parabolic"))
            throw ConfigError("elliptic mode does not take a 'parabolic' section");
        const json& ell = need(doc, "config", "elliptic");
        check_keys(ell, "elliptic", {"growth_c", "growth_r", "expect_negative_at_zero"});
        cfg.growthC = need(ell, "elliptic", "growth_c").get<double>();
        cfg.growthR = need(ell, "elliptic", "growth_r").get<double>();
        cfg.expectNegativeAtZero = get_or(ell, "expect_negative_at_zero", false);
    } else {
        if (doc.contains("elliptic"))
            throw ConfigError("parabolic mode does not take an 'elliptic' section");
        const json& par = need(doc, "config", "parabolic");
        check_keys(par, "parabolic", {"b", "u0", "T", "N0", "epsilon_continuation"});
        const json& b = need(par, "parabolic", "b");
        check_keys(b, "parabolic.b", {"kind", "q"});
        cfg.bKind = need(b, "parabolic.b", "kind").get<std::string>();
        if (cfg.bKind == "lq_norm") {
            cfg.bQ = need(b, "parabolic.b", "q").get<double>();
        } else if (cfg.bKind == "grad_norm") {
            if (b.contains("q"))
                throw ConfigError("parabolic.b.q applies only to kind 'lq_norm'");
        } else {
            throw ConfigError("parabolic.b.kind must be 'grad_norm' or 'lq_norm'");
        }
        std::set<Var> u0Vars{Var::X};
        if (cfg.dim == 2) u0Vars.insert(Var::Y);
        cfg.u0Expr = detail::parse_config_expr(need(par, "parabolic", "u0"), "u0", u0Vars);
        cfg.horizon = need(par, "parabolic", "T").get<double>();
        cfg.steps = need(par, "parabolic", "N0").get<int>();
        cfg.epsilonContinuation = get_or(par, "epsilon_continuation", false);
    }

    if (doc.contains("solver")) {
        const json& s = doc["solver"];
        check_keys(s, "solver",
                   {"tol_residual", "max_newton", "tol_picard", "tol_exponent",
                    "max_picard", "theta_u", "tol_b", "max_b_iter", "theta_b", "eps0",
                    "eps_reduction", "eps_min"});
        cfg.newton.tolResidual = get_or(s, "tol_residual", 0.0);
        cfg.newton.maxIter = get_or(s, "max_newton", 100);
        cfg.continuation.tolPicard = get_or(s, "tol_picard", 1e-8);
        cfg.continuation.tolExponent = get_or(s, "tol_exponent", 1e-8);
        cfg.continuation.maxPicard = get_or(s, "max_picard", 50);
        cfg.continuation.thetaU = get_or(s, "theta_u", 1.0);
        cfg.continuation.eps0 = get_or(s, "eps0", 1e-2);
        cfg.continuation.epsReduction = get_or(s, "eps_reduction", 0.5);
        cfg.continuation.epsMin = get_or(s, "eps_min", 1e-8);
        cfg.tolB = get_or(s, "tol_b", 1e-9);
        cfg.maxBIter = get_or(s, "max_b_iter", 100);
        cfg.thetaB = get_or(s, "theta_b", 0.5);
    }

    if (doc.contains("output")) {
        const json& out = doc["output"];
        check_keys(out, "output", {"directory", "snapshot_times"});
        cfg.outputDirectory = get_or<std::string>(out, "directory", "");
        if (out.contains("snapshot_times")) {
            if (cfg.mode != "parabolic")
                throw ConfigError("output.snapshot_times applies to parabolic mode only");
            for (const auto& t : out["snapshot_times"])
                cfg.snapshotTimes.push_back(t.get<double>());
        }
    }

    cfg.seed = get_or(doc, "seed", static_cast<std::uint64_t>(42));

    if (doc.contains("convergence")) {
        const json& conv = doc["convergence"];
        check_keys(conv, "convergence", {"levels", "reference"});
        if (conv.contains("levels"))
            for (const auto& lv : conv["levels"]) cfg.convergenceLevels.push_back(lv.get<int>());
        if (conv.contains("reference")) {
            std::set<Var> refVars{Var::X, Var::T};
            if (cfg.dim == 2) refVars.insert(Var::Y);
            cfg.referenceExpr = detail::parse_config_expr(conv["reference"],
                                                          "convergence.reference", refVars);
            cfg.hasReference = true;
        }
    }
    return cfg;
}

} // namespace detail

inline CaseConfig parse_config(const json& doc) {
    try {
        return detail::parse_config_impl(doc);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
}

/// Assemble the exponent spec shared by both modes; the formal scalar
/// argument may be written as t or s in config expressions.
inline ExponentSpec make_exponent_spec(const CaseConfig& cfg) {
    ExponentSpec spec;
    for (int i = 0; i < cfg.dim; ++i) {
        Expr e = cfg.exponentExprs[static_cast<std::size_t>(i)];
        spec.p.push_back([e](double t) {
            return e.eval(EvalEnv{}.set(Var::T, t).set(Var::S, t));
        });
        spec.lower.push_back(cfg.exponentBounds[static_cast<std::size_t>(i)][0]);
        spec.upper.push_back(cfg.exponentBounds[static_cast<std::size_t>(i)][1]);
        spec.lipschitz.push_back(cfg.exponentLipschitz[static_cast<std::size_t>(i)]);
    }
    spec.samplingSpan = cfg.samplingSpan;
    return spec;
}

inline EllipticProblem make_elliptic_problem(const CaseConfig& cfg, int nOverride = 0) {
    if (cfg.mode != "elliptic") throw ConfigError("config is not an elliptic case");
    Grid g(cfg.dim, nOverride > 0 ? nOverride : cfg.n);
    Expr src = cfg.sourceExpr;
    int dim = cfg.dim;
    SpaceTimeFn f = [src, dim](std::array<double, 2> x, double u) {
        EvalEnv env;
        env.set(Var::X, x[0]).set(Var::U, u);
        if (dim == 2) env.set(Var::Y, x[1]);
        return src.eval(env);
    };
    return {g, make_exponent_spec(cfg), std::move(f), cfg.growthC, cfg.growthR,
            cfg.expectNegativeAtZero};
}

inline ParabolicProblem make_parabolic_problem(const CaseConfig& cfg, int nOverride = 0) {
    if (cfg.mode != "parabolic") throw ConfigError("config is not a parabolic case");
    Grid g(cfg.dim, nOverride > 0 ? nOverride : cfg.n);
    ExponentSpec spec = make_exponent_spec(cfg);

    NonlocalMap map;
    if (cfg.bKind == "grad_norm") {
        map.kind = NonlocalMap::Kind::GradNorm;
        map.param = spec.declaredMin();
    } else {
        map.kind = NonlocalMap::Kind::LqNorm;
        map.param = cfg.bQ;
    }

    Expr src = cfg.sourceExpr;
    Expr u0 = cfg.u0Expr;
    int dim = cfg.dim;
    SpaceTimeFn f = [src, dim](std::array<double, 2> x, double t) {
        EvalEnv env;
        env.set(Var::X, x[0]).set(Var::T, t);
        if (dim == 2) env.set(Var::Y, x[1]);
        return src.eval(env);
    };
    auto initial = [u0, dim](std::array<double, 2> x) {
        EvalEnv env;
        env.set(Var::X, x[0]);
        if (dim == 2) env.set(Var::Y, x[1]);
        return u0.eval(env);
    };
    return {g,        spec,      map, std::move(f), std::move(initial),
            cfg.horizon, cfg.steps, cfg.epsilonContinuation};
}

inline StepParams make_step_params(const CaseConfig& cfg) {
    StepParams sp;
    sp.tolB = cfg.tolB;
    sp.maxBIter = cfg.maxBIter;
    sp.thetaB = cfg.thetaB;
    sp.newton = cfg.newton;
    sp.continuation = cfg.continuation;
    return sp;
}

} // namespace anisolve
