// acir: simulate the implicit alpha-CIR scheme and run convergence studies.
//
//   acir simulate     --config run.ini --out results/
//   acir strong-error --config run.ini --seed 7 --workers 4
//   acir probe        --config probe.ini
//   acir sweep        --config sigma2_sweep.ini

#include "acir/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

int main(int argc, char** argv) {
    CLI::App app{"Positivity preserving implicit scheme for the alpha-CIR process"};
    app.set_version_flag("--version", acir::version_string);
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out_dir = ".";
    app.add_option("--config", config_path, "Configuration file (key = value, [sections])")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Override mc.seed");
    app.add_option("--workers", workers, "Override mc.workers")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "Output directory");

    auto* simulate = app.add_subcommand("simulate", "Simulate one path and write path.csv");
    auto* strong = app.add_subcommand("strong-error", "Coupled strong-error study (CSV + SVG)");
    auto* probe = app.add_subcommand("probe", "Run the probe selected by run.probe");
    auto* sweep = app.add_subcommand("sweep", "Strong-error study for each [sweep] value");
    for (auto* sub : {simulate, strong, probe, sweep}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? acir::exit_ok : acir::exit_usage;
    }

    acir::RunConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            cfg = acir::parse_config(in);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return acir::exit_usage;
    }
    if (seed) cfg.mc.seed = *seed;
    if (workers) cfg.mc.parallel_workers = *workers;

    try {
        if (*simulate) return acir::cmd_simulate(cfg, out_dir, std::cout, std::cerr);
        if (*strong) return acir::cmd_strong_error(cfg, out_dir, std::cout, std::cerr);
        if (*probe) return acir::cmd_probe(cfg, out_dir, std::cout, std::cerr);
        return acir::cmd_sweep(cfg, out_dir, std::cout, std::cerr);
    } catch (const acir::ExplosionAbort& e) {
        std::cerr << "error: " << e.what() << '\n';
        return acir::exit_abort;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return acir::exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return acir::exit_abort;
    }
}
