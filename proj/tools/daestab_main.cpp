#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "daestab/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"daestab: semilinear DAE decomposition, simulation and "
                 "Lagrange stability certificates"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<double> t_end;
    std::optional<std::string> out_dir;
    std::optional<unsigned> seed;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config JSON document")->required();
        sub->add_option("--t-end", t_end, "override integration.t_end");
        sub->add_option("--out", out_dir, "override the output directory");
        sub->add_option("--seed", seed, "override the sampling seed");
    };

    const char* modes[] = {"decompose", "simulate", "check-stability",
                           "check-instability", "sweep"};
    const char* descs[] = {
        "write projectors, G^-1 and identity residuals",
        "integrate the model and write trajectory.csv + summary.json",
        "sample the Lagrange stability hypotheses",
        "sample the Lagrange instability (finite escape) hypotheses",
        "run simulate per parameter value, concurrently"};
    for (int i = 0; i < 5; ++i)
        add_common(app.add_subcommand(modes[i], descs[i]));

    CLI11_PARSE(app, argc, argv);

    daestab::cli::Overrides ov;
    ov.mode = app.get_subcommands().front()->get_name();
    ov.t_end = t_end;
    ov.out_dir = out_dir;
    ov.seed = seed;

    auto outcome = daestab::cli::run_file(config_path, ov);
    if (!outcome.message.empty())
        std::fprintf(outcome.exit_code ? stderr : stdout, "%s\n",
                     outcome.message.c_str());
    return outcome.exit_code;
}
