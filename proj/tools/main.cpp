#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "hydroquad/commands.hpp"
#include "hydroquad/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"paddling-quadruped pipeline: synthetic force logs, learned "
                 "hydrodynamic model, swim simulation, gait search"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_path, model_path, mode_str;
    std::string model_tag = "ef";
    std::uint64_t seed = 0;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config document");
        sub->add_option("--seed", seed, "master seed, overrides the config");
        sub->add_option("--out", out_dir, "output directory");
    };
    const auto add_model_flags = [&](CLI::App* sub) {
        sub->add_option("--model", model_path, "trained model file");
        sub->add_option("--model-tag", model_tag, "force model: ef or lstm")
            ->check(CLI::IsMember({"ef", "lstm"}));
        sub->add_option("--mode", mode_str, "swim mode")
            ->check(CLI::IsMember({"straight", "turn"}));
    };

    CLI::App* synth = app.add_subcommand("synth", "generate the synthetic force-log corpus");
    add_common(synth);
    CLI::App* train = app.add_subcommand("train", "train the sequence model on a force log");
    add_common(train);
    train->add_option("--data", data_path, "force log to train on");
    CLI::App* compare =
        app.add_subcommand("compare", "learned vs quasi-steady error comparison");
    add_common(compare);
    compare->add_option("--data", data_path, "force log to evaluate on");
    compare->add_option("--model", model_path, "trained model file");
    CLI::App* simulate =
        app.add_subcommand("simulate", "integrate one swim and export the trajectory");
    add_common(simulate);
    add_model_flags(simulate);
    CLI::App* optimize =
        app.add_subcommand("optimize", "gait search with the three swimming objectives");
    add_common(optimize);
    add_model_flags(optimize);

    CLI11_PARSE(app, argc, argv);

    try {
        hydroquad::CommandArgs args;
        if (!config_path.empty()) args.cfg = hydroquad::load_run_config(config_path);
        CLI::App* sub = app.get_subcommands().front();
        if (sub->count("--seed")) args.cfg.seed = seed;
        args.cfg.pipeline.train.seed = args.cfg.seed;
        args.cfg.opt.seed = args.cfg.seed;
        args.out_dir = out_dir.empty() ? args.cfg.paths.out : out_dir;
        args.data_path = data_path;
        args.model_path = model_path;
        args.model_tag = model_tag;
        if (!mode_str.empty())
            args.mode = mode_str == "turn" ? hydroquad::SimMode::turn
                                           : hydroquad::SimMode::straight;

        const std::string name = sub->get_name();
        if (name == "synth") return hydroquad::cmd_synth(args);
        if (name == "train") return hydroquad::cmd_train(args);
        if (name == "compare") return hydroquad::cmd_compare(args);
        if (name == "simulate") return hydroquad::cmd_simulate(args);
        return hydroquad::cmd_optimize(args);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
