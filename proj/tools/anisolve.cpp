#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "anisolve/log.hpp"
#include "anisolve/run.hpp"
#include "anisolve/verify.hpp"

namespace fs = std::filesystem;
using namespace anisolve;

namespace {

json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read config file " + path);
    json doc;
    try {
        is >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return doc;
}

int run_command(const std::string& configPath, const std::string& outDir,
                bool haveOut, std::uint64_t seedOverride, bool haveSeed) {
    json doc = load_json(configPath);
    if (haveSeed) doc["seed"] = seedOverride;
    CaseConfig cfg = parse_config(doc);
    std::string dir = haveOut || cfg.outputDirectory.empty() ? outDir : cfg.outputDirectory;
    RunResult result = run_case(cfg, dir);
    std::printf("%s: %s (exit %d), artifacts in %s\n", configPath.c_str(),
                result.summary["status"].get<std::string>().c_str(), result.exitCode,
                dir.c_str());
    return result.exitCode;
}

int convergence_command(const std::string& configPath, const std::string& outDir,
                        std::vector<int> levels, int jobs) {
    json doc = load_json(configPath);
    CaseConfig cfg = parse_config(doc);
    std::vector<ConvergenceRow> rows = convergence_study(cfg, std::move(levels), jobs);
    fs::create_directories(outDir);
    fs::path table = fs::path(outDir) / "convergence.csv";
    detail::write_text_file(table, convergence_csv(rows));
    std::printf("wrote %s (%zu levels)\n", table.string().c_str(), rows.size());
    return 0;
}

int verify_command(std::uint64_t seed, int trials) {
    std::vector<PropertyResult> results = run_verify(seed, trials);
    bool allPass = true;
    for (const auto& r : results) {
        std::printf("%s %-28s trials=%-6d %.3fs%s%s\n", r.pass ? "PASS" : "FAIL",
                    r.name.c_str(), r.trials, r.seconds, r.pass ? "" : "  ",
                    r.witness.c_str());
        allPass = allPass && r.pass;
    }
    std::printf("%s\n", allPass ? "all properties hold" : "property violations found");
    return allPass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"anisolve: anisotropic variable-exponent elliptic/parabolic solver"};
    app.require_subcommand(1);

    std::string configPath;
    std::string outDir = ".";
    std::uint64_t seed = 42;
    int trials = 200;
    int jobs = 1;
    std::vector<int> levels;

    CLI::App* run = app.add_subcommand("run", "validate and solve one case config");
    run->add_option("--config", configPath, "case config JSON")->required();
    CLI::Option* runOut =
        run->add_option("--out", outDir, "output directory (overrides output.directory)");
    CLI::Option* runSeed = run->add_option("--seed", seed, "override the config seed");

    CLI::App* conv =
        app.add_subcommand("convergence", "solve the case over a ladder of grids");
    conv->add_option("--config", configPath, "case config JSON")->required();
    conv->add_option("--out", outDir, "output directory");
    conv->add_option("--levels", levels, "grid resolutions (default: config levels)");
    conv->add_option("--jobs", jobs, "parallel level solves");

    CLI::App* verify =
        app.add_subcommand("verify", "run the randomized invariant suite");
    verify->add_option("--seed", seed, "master seed for the random streams");
    verify->add_option("--trials", trials, "trial budget per property");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return run_command(configPath, outDir, runOut->count() > 0, seed,
                               runSeed->count() > 0);
        if (conv->parsed())
            return convergence_command(configPath, outDir, levels, jobs);
        return verify_command(seed, trials);
    } catch (const ConfigError& e) {
        log_error(std::string("config error: ") + e.what());
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
}
