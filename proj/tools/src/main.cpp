#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fbsde_cli/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"fbsde-kit: decoupling-field solver for FBSDEs with diagonal generators"};
    std::string config;
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool quiet = false;
    app.add_option("--config", config, "Experiment config (JSON)")->required();
    auto* out_opt = app.add_option("--out-dir", out_dir, "Output directory (overrides output.dir)");
    auto* seed_opt = app.add_option("--seed", seed, "Seed (overrides the config seed)");
    auto* threads_opt = app.add_option("--threads", threads, "Worker threads; 0 uses all cores");
    app.add_flag("--quiet", quiet, "Do not print the JSON summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << fbsde::cli::error_json("usage", e.what()).dump() << '\n';
        return fbsde::cli::kExitConfig;
    }

    fbsde::cli::RunOptions opts;
    if (*out_opt) opts.out_dir = out_dir;
    if (*seed_opt) opts.seed = seed;
    if (*threads_opt) opts.threads = threads;
    opts.quiet = quiet;
    return fbsde::cli::run_file(config, opts, std::cout, std::cerr);
}
