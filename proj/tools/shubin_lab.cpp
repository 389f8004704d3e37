#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "shubin/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for anisotropic Shubin operators"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    shubin::RunRequest req;
    std::string config, out = "out";
    int threads = 0;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "override run.seed");
    app.add_option("--config", config, "INI configuration file")->required();
    app.add_option("--out", out, "output directory");
    app.add_option("--threads", threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    for (const auto& name : shubin::subcommands()) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : shubin::exit_config;
    }

    req.command = app.get_subcommands().front()->get_name();
    req.config = config;
    req.out = out;
    req.threads = threads;
    if (*seed_opt) req.seed = seed;
    return shubin::run(req, std::cerr);
}
