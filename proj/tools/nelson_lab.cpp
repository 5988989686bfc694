#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nelson/config.hpp"
#include "nelson/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Numerical lab for infrared-cutoff Nelson fiber Hamiltonians"};
    app.require_subcommand(1, 1);

    std::optional<std::string> configPath;
    nelson::ConfigOverrides ov;
    app.add_option("--config", configPath, "INI configuration file");
    app.add_option("--lambda", ov.lambda, "coupling (also replaces the sweep coupling list)");
    app.add_option("--sigma", ov.sigma, "infrared cutoff");
    app.add_option("--epsilon", ov.epsilon, "scale ratio sigma_{n+1}/sigma_n");
    app.add_option("--scales", ov.scales, "number of sweep scales");
    app.add_option("--q-max", ov.qMax, "maximal photon number of the truncated Fock space");
    app.add_option("--out", ov.out, "output directory (NELSON_LAB_OUT takes precedence)");
    app.add_option("--jobs", ov.jobs, "worker cap");

    for (const auto& name : nelson::command_names()) app.add_subcommand(name, "run " + name)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        const nelson::RunConfig cfg = nelson::load_config(configPath, ov);
        const std::string command = app.get_subcommands().front()->get_name();
        return nelson::run_command(command, cfg, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "nelson_lab: " << e.what() << "\n";
        return 2;
    }
}
