#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>
#include <vector>

#include "anisolve/config.hpp"
#include "anisolve/csv.hpp"
#include "anisolve/log.hpp"

namespace anisolve {

struct RunResult {
    int exitCode = 0; // 0 ok, 2 validation failure, 3 non-convergence
    json summary;
    std::vector<std::string> artifacts;
};

namespace detail {

inline json validation_json(const ValidationReport& rep) {
    json arr = json::array();
    for (const auto& c : rep.checks)
        arr.push_back({{"condition", c.condition}, {"pass", c.pass}, {"witness", c.witness}});
    return arr;
}

inline json elliptic_report_json(const EllipticReport& rep) {
    json stages = json::array();
    for (const auto& st : rep.stages)
        stages.push_back({{"epsilon", st.epsilon},
                          {"iterations", st.iterations},
                          {"final_diff", st.finalDiff},
                          {"final_drift", st.finalDrift},
                          {"gradient_modular", st.gradientModular},
                          {"diff_history", st.diffHistory},
                          {"drift_history", st.driftHistory}});
    return {{"status", to_string(rep.status)},
            {"stages", stages},
            {"frozen_solves", rep.frozenSolves},
            {"polish_solves", rep.polishSolves},
            {"final_residual", rep.finalResidual},
            {"final_residual_tol", rep.finalResidualTol},
            {"near_zero_fixed_point", rep.nearZeroFixedPoint}};
}

inline json parabolic_ledger_json(const ParabolicReport& rep) {
    json steps = json::array();
    for (const auto& led : rep.steps)
        steps.push_back({{"k", led.k},
                         {"t", led.time},
                         {"s", led.s},
                         {"l2_norm_sq", led.l2NormSq},
                         {"grad_modular", led.gradModular},
                         {"energy_lhs", led.energyLhs},
                         {"energy_rhs", led.energyRhs},
                         {"energy_slack", led.energyLhs - led.energyRhs},
                         {"source_work", led.sourceWork},
                         {"scalar_iterations", led.scalarIterations}});
    return {{"status", to_string(rep.status)},
            {"completed_steps", rep.completedSteps},
            {"steps", steps}};
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw Error("failed writing " + path.string());
}

inline std::string snapshot_name(double t) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "snapshot_t%g.csv", t);
    return buf;
}

} // namespace detail

/// Validate, solve and emit artifacts for one case. Writes CSV field files,
/// a JSON summary (and a parabolic ledger), and returns the exit code the
/// CLI reports: 0 success, 2 validation failure, 3 non-convergence.
inline RunResult run_case(const CaseConfig& cfg, const std::filesystem::path& outDir) {
    namespace fs = std::filesystem;
    auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(outDir);

    RunResult result;
    json& summary = result.summary;
    summary["config"] = cfg.raw;
    summary["config_hash"] = hex64(fnv1a(cfg.raw.dump()));
    summary["mode"] = cfg.mode;
    summary["seed"] = cfg.seed;

    auto finish = [&](int code, const std::string& status) {
        result.exitCode = code;
        summary["status"] = status;
        summary["exit_code"] = code;
        summary["artifacts"] = result.artifacts;
        summary["wall_time_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        detail::write_text_file(outDir / "summary.json", summary.dump(2) + "\n");
        return result;
    };
    auto emit = [&](const std::string& name, const std::string& text) {
        detail::write_text_file(outDir / name, text);
        result.artifacts.push_back(name);
    };

    if (cfg.mode == "elliptic") {
        EllipticProblem prob = make_elliptic_problem(cfg);
        ValidationReport val = validate(prob);
        summary["validation"] = detail::validation_json(val);
        if (!val.ok()) {
            log_error("validation failed:\n" + val.summary());
            return finish(2, "validation_failed");
        }
        log_info("validation passed, solving elliptic case (n = " +
                 std::to_string(cfg.n) + ")");
        EllipticSolution sol = solve_elliptic(prob, cfg.continuation, cfg.newton);
        std::ostringstream csv;
        write_solution_csv(csv, sol.u);
        emit("solution.csv", csv.str());
        summary["solver"] = detail::elliptic_report_json(sol.report);
        if (sol.report.status != SolveStatus::Converged)
            return finish(3, "non_convergence");
        return finish(0, "ok");
    }

    ParabolicProblem prob = make_parabolic_problem(cfg);
    ValidationReport val = validate(prob);
    summary["validation"] = detail::validation_json(val);
    if (!val.ok()) {
        log_error("validation failed:\n" + val.summary());
        return finish(2, "validation_failed");
    }
    log_info("validation passed, solving parabolic case (n = " + std::to_string(cfg.n) +
             ", N0 = " + std::to_string(cfg.steps) + ")");
    ParabolicSolution sol = solve_parabolic(prob, make_step_params(cfg));
    emit("ledger.json", detail::parabolic_ledger_json(sol.report).dump(2) + "\n");
    std::vector<double> snapshots = cfg.snapshotTimes;
    if (snapshots.empty()) snapshots.push_back(prob.horizon);
    for (double t : snapshots) {
        if (t < 0.0 || t > sol.trajectory.horizon() + 1e-12) {
            log_error("snapshot time " + format_g17(t) + " outside the computed horizon");
            continue;
        }
        std::ostringstream csv;
        write_solution_csv(csv, sol.trajectory.at(t));
        emit(detail::snapshot_name(t), csv.str());
    }
    summary["solver"] = detail::parabolic_ledger_json(sol.report);
    if (sol.report.status != SolveStatus::Converged) return finish(3, "non_convergence");
    return finish(0, "ok");
}

struct ConvergenceRow {
    int n;
    double linfError;
    double observedOrder; // NaN on the first level
};

/// Re-solve the case over a ladder of grid resolutions and report L-infinity
/// errors against the configured reference expression, or against the finest
/// level when no closed form is available.
inline std::vector<ConvergenceRow> convergence_study(const CaseConfig& cfg,
                                                     std::vector<int> levels,
                                                     int jobs = 1) {
    if (levels.empty()) levels = cfg.convergenceLevels;
    if (levels.size() < 2)
        throw ConfigError("convergence study needs at least two levels");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (levels[i] <= levels[i - 1])
            throw ConfigError("convergence levels must be strictly increasing");
    int finest = levels.back();
    for (int n : levels)
        if (finest % n != 0)
            throw ConfigError("each level must divide the finest level " +
                              std::to_string(finest));

    std::vector<GridFunction> fields;
    fields.reserve(levels.size());
    for (int n : levels) fields.emplace_back(Grid(cfg.dim, n), true);

    auto solveLevel = [&](std::size_t idx) {
        int n = levels[idx];
        if (cfg.mode == "elliptic") {
            EllipticSolution sol =
                solve_elliptic(make_elliptic_problem(cfg, n), cfg.continuation, cfg.newton);
            if (sol.report.status != SolveStatus::Converged)
                throw Error("level n = " + std::to_string(n) + " did not converge");
            fields[idx] = std::move(sol.u);
        } else {
            ParabolicSolution sol =
                solve_parabolic(make_parabolic_problem(cfg, n), make_step_params(cfg));
            if (sol.report.status != SolveStatus::Converged)
                throw Error("level n = " + std::to_string(n) + " did not converge");
            fields[idx] = sol.trajectory.at(sol.trajectory.horizon());
        }
    };

    if (jobs > 1) {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(levels.size());
        for (int w = 0; w < jobs && w < static_cast<int>(levels.size()); ++w)
            pool.emplace_back([&, w] {
                for (std::size_t idx = static_cast<std::size_t>(w); idx < levels.size();
                     idx += static_cast<std::size_t>(jobs)) {
                    try {
                        solveLevel(idx);
                    } catch (...) {
                        errors[idx] = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    } else {
        for (std::size_t idx = 0; idx < levels.size(); ++idx) solveLevel(idx);
    }

    auto referenceAt = [&](std::array<double, 2> x) {
        EvalEnv env;
        env.set(Var::X, x[0]).set(Var::T, cfg.mode == "parabolic" ? cfg.horizon : 0.0);
        if (cfg.dim == 2) env.set(Var::Y, x[1]);
        return cfg.referenceExpr.eval(env);
    };

    std::vector<ConvergenceRow> rows;
    for (std::size_t idx = 0; idx < levels.size(); ++idx) {
        const GridFunction& u = fields[idx];
        const Grid& g = u.grid();
        double err = 0.0;
        if (cfg.hasReference) {
            for (std::size_t j = 0; j < u.size(); ++j)
                err = std::max(err, std::abs(u[j] - referenceAt(g.nodeCoord(j))));
        } else {
            if (idx + 1 == levels.size()) break; // finest level is the reference
            const GridFunction& fine = fields.back();
            int ratio = finest / levels[idx];
            for (std::size_t j = 0; j < u.size(); ++j) {
                auto [ix, iy] = g.nodeMulti(j);
                std::size_t jf = fine.grid().nodeIndex(ix * ratio, iy * ratio);
                err = std::max(err, std::abs(u[j] - fine[jf]));
            }
        }
        double order = std::numeric_limits<double>::quiet_NaN();
        if (!rows.empty() && rows.back().linfError > 0.0 && err > 0.0)
            order = std::log2(rows.back().linfError / err) /
                    std::log2(static_cast<double>(levels[idx]) / levels[idx - 1]);
        rows.push_back({levels[idx], err, order});
    }
    return rows;
}

inline std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
    std::string out = "n,linf_error,observed_order\n";
    for (const auto& r : rows) {
        out += std::to_string(r.n);
        out += ',';
        out += format_g17(r.linfError);
        out += ',';
        if (std::isfinite(r.observedOrder)) out += format_g17(r.observedOrder);
        out += '\n';
    }
    return out;
}

} // namespace anisolve
