// mkdv <mode> --config <path> [--out <dir>] [--emit-plot-data] [--workers N]

#include "mkdv/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace mkdv;
    CLI::App app{"Numerical experiments for the modified KdV equation"};
    std::string mode, config_path, out_dir = "out";
    bool plot = false;
    std::optional<long long> workers;
    app.add_option("mode", mode, "evolve | linear | probe | profile | painleve | selfsimilar | appdata | complete | sweep")
        ->required();
    app.add_option("--config", config_path, "JSON experiment configuration")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_flag("--emit-plot-data", plot, "also write whitespace-separated plot/*.dat files");
    app.add_option("--workers", workers, "worker threads (fallback: MKDV_WORKERS)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    try {
        std::string text;
        try {
            text = io::read_file(config_path);
        } catch (const IoError& e) {
            std::cerr << "mkdv: config error: " << e.what() << "\n";
            return exit_config;
        }
        const auto cfg = parse_config(text, mode);
        RunOptions opt{out_dir, plot, resolve_workers(workers)};
        run_experiment(cfg, opt);
        std::cout << "mkdv: " << mode << " finished; outputs in " << out_dir << "\n";
        return exit_ok;
    } catch (const ConfigError& e) {
        std::cerr << "mkdv: config error: " << e.what() << "\n";
        return exit_config;
    } catch (const DomainError& e) {
        std::cerr << "mkdv: invalid parameters: " << e.what() << "\n";
        return exit_config;
    } catch (const DivergenceError& e) {
        std::cerr << "mkdv: divergence: " << e.what() << "\n";
        return exit_divergence;
    } catch (const IoError& e) {
        std::cerr << "mkdv: I/O error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "mkdv: I/O error: " << e.what() << "\n";
        return exit_io;
    }
}
