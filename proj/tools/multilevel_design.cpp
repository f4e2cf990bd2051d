// multilevel-design <mode> --config <path> [--seed N] [--reps N] [--out DIR]
//
// Flags override the matching config values. MLD_THREADS caps the number of
// simulation workers without changing any output.

#include "mld/config.hpp"
#include "mld/run.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Anticipated treatment variance for multilevel randomized designs"};
    std::string mode_name;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    std::optional<std::string> out_dir;
    app.add_option("mode", mode_name, "closed-form | simulate | compare | validate")
        ->required()
        ->check(CLI::IsMember({"closed-form", "simulate", "compare", "validate"}));
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--seed", seed, "override the master seed");
    app.add_option("--reps", reps, "override the replicate count");
    app.add_option("--out", out_dir, "override the output directory");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mld::kExitConfigError;
    }

    mld::RunConfig config;
    try {
        config = mld::parse_config(config_path);
    } catch (const mld::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return mld::kExitConfigError;
    }
    config.mode = *mld::mode_from_string(mode_name);
    if (seed) config.seed = *seed;
    if (reps) config.replicates = *reps;
    if (out_dir) config.out_dir = *out_dir;

    config.threads = 0;  // one worker per hardware thread unless capped
    if (const char* env = std::getenv("MLD_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n < 1) throw std::invalid_argument("MLD_THREADS");
            config.threads = static_cast<unsigned>(n);
        } catch (const std::exception&) {
            std::cerr << "configuration error: BadValue(\"MLD_THREADS\"): expected a positive integer\n";
            return mld::kExitConfigError;
        }
    }

    return mld::run(config, std::cerr);
}
