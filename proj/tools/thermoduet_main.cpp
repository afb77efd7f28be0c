// thermoduet CLI — scenario runs, oracle verification, sweeps, and regime
// classification for the coupled-thermal-reservoir simulator.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "thermoduet/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPhysics = 3;
constexpr int kExitVerification = 4;

struct GlobalArgs {
    std::string out_dir;
    int workers = 1;
    double tol_quad = 1e-6;
    std::optional<long long> seed;
};

std::string default_out_dir() {
    const char* env = std::getenv("THERMODUET_OUT");
    return env != nullptr ? env : ".";
}

thermoduet::ScenarioConfig load(const std::string& path, const GlobalArgs& g) {
    thermoduet::ScenarioConfig cfg = thermoduet::load_scenario(path);
    if (g.seed) cfg.params.seed = static_cast<std::uint64_t>(*g.seed);
    return cfg;
}

thermoduet::PipelineOptions pipeline_options(const GlobalArgs& g) {
    thermoduet::PipelineOptions opt;
    opt.workers = g.workers;
    opt.tol_quad_rel = g.tol_quad;
    return opt;
}

void print_report(const thermoduet::VerifyReport& rep) {
    for (const auto& line : rep.lines) {
        std::printf("%-28s max deviation %.3e  tol %.1e  [%s]\n", line.name.c_str(),
                    line.deviation, line.tolerance, line.pass ? "pass" : "FAIL");
    }
    std::printf("verification %s in %.2f s\n", rep.pass ? "PASSED" : "FAILED",
                rep.elapsed_seconds);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermoduet — exact thermodynamics of two coupled thermal bosonic reservoirs"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs g;
    g.out_dir = default_out_dir();
    app.add_option("--out", g.out_dir, "Output directory");
    app.add_option("--workers", g.workers, "Worker threads for trajectory evaluation");
    app.add_option("--tol-quad", g.tol_quad, "Relative md quadrature tolerance");
    app.add_option("--seed", g.seed, "Override the config RNG seed");

    std::string config_path;
    auto* cmd_run = app.add_subcommand("run", "Evolve a scenario and write a trajectory CSV");
    cmd_run->add_option("config", config_path, "Scenario config file")->required();
    auto* cmd_va = app.add_subcommand("verify-analytic",
                                      "Check the numeric pipeline against the closed forms");
    cmd_va->add_option("config", config_path, "Scenario config file")->required();
    auto* cmd_vf =
        app.add_subcommand("verify-fock", "Check the Gaussian engine against the Fock oracle");
    cmd_vf->add_option("config", config_path, "Scenario config file")->required();
    auto* cmd_sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    cmd_sweep->add_option("config", config_path, "Scenario config file")->required();
    auto* cmd_classify = app.add_subcommand("classify", "Print the parameter-regime report");
    cmd_classify->add_option("config", config_path, "Scenario config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (cmd_classify->parsed()) {
            const auto cfg = load(config_path, g);
            cfg.params.validate();
            std::cout << thermoduet::format_regime_report(thermoduet::classify_regime(cfg.params));
            return kExitOk;
        }
        if (cmd_run->parsed()) {
            const auto cfg = load(config_path, g);
            const auto res = thermoduet::run_scenario(cfg, pipeline_options(g));
            std::filesystem::create_directories(g.out_dir);
            const auto csv_path = std::filesystem::path(g.out_dir) / "trajectory.csv";
            std::ofstream out(csv_path);
            if (!out) throw thermoduet::ConfigError("cannot write " + csv_path.string());
            thermoduet::write_trajectory_csv(out, res.trajectory, cfg);
            std::cout << thermoduet::format_regime_report(res.regime);
            std::cout << "wrote " << csv_path.string() << "\n";
            if (res.warning_count > 0)
                std::cout << "warning: " << res.warning_count
                          << " md samples missing (singular windows)\n";
            return kExitOk;
        }
        if (cmd_va->parsed()) {
            const auto cfg = load(config_path, g);
            const auto rep = thermoduet::verify_analytic(cfg, pipeline_options(g));
            print_report(rep);
            return rep.pass ? kExitOk : kExitVerification;
        }
        if (cmd_vf->parsed()) {
            const auto cfg = load(config_path, g);
            const auto rep = thermoduet::verify_fock(cfg, pipeline_options(g));
            print_report(rep);
            return rep.pass ? kExitOk : kExitVerification;
        }
        if (cmd_sweep->parsed()) {
            const auto cfg = load(config_path, g);
            const auto res = thermoduet::run_sweep(cfg, pipeline_options(g), g.out_dir);
            for (std::size_t i = 0; i < res.points.size(); ++i) {
                const auto& pt = res.points[i];
                if (pt.failed)
                    std::cout << "point " << i << " FAILED: " << pt.error << "\n";
                else
                    std::cout << "point " << i << " -> " << pt.csv_name
                              << (pt.plateau ? " (plateau)" : "") << "\n";
            }
            std::cout << "sweep summary written to "
                      << (std::filesystem::path(g.out_dir) / "summary.csv").string() << "\n";
            return res.failures == static_cast<int>(res.points.size()) && !res.points.empty()
                       ? kExitPhysics
                       : kExitOk;
        }
    } catch (const thermoduet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const thermoduet::PhysicsError& e) {
        std::cerr << "physics error: " << e.what() << "\n";
        return kExitPhysics;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPhysics;
    }
    return kExitOk;
}
