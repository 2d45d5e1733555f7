// flexac: command-line driver for the associative-steering pipeline.
//
//   flexac make-fixture --seed 1 --out fixture/
//   flexac profile      --activations fixture/activations.actv --metric cosine --out runs/profile
//   flexac intervene    --model fixture/model.toym --pairs fixture/pairs.jsonl --layers 0 1 2 --out runs/iv
//   flexac build-vector --activations fixture/activations.actv --layers 5 --K 50 --out runs/gen.strv
//   flexac steer        --model fixture/model.toym --gen runs/gen.strv --alpha-gen 1 --prompt 1,2,3 --steps 8 --out runs/steer
//   flexac vdat | chair | pope | pca ...
//
// Every subcommand also takes --config <run_config.json>; explicit flags win
// over values from the file. Exit codes: 0 ok, 2 input error, 3 numeric error.

#include <functional>
#include <iostream>
#include <memory>
#include <vector>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/run_config.hpp"
#include "flexac/errors.hpp"

namespace {

using flexac::cli::RunConfig;

/// Collects "if the user passed this flag, copy it into the config" actions so
/// that flags can be layered over a --config file after parsing.
class Overrides {
public:
    template <typename T>
    void option(CLI::App* app, const std::string& name, T RunConfig::*member, const std::string& help) {
        auto storage = std::make_shared<T>();
        CLI::Option* opt = app->add_option(name, *storage, help);
        if constexpr (std::is_same_v<T, std::vector<std::uint32_t>>) {
            opt->delimiter(',');
        }
        actions_.push_back([opt, storage, member](RunConfig& cfg) {
            if (opt->count() > 0) cfg.*member = *storage;
        });
    }

    void flag(CLI::App* app, const std::string& name, bool RunConfig::*member, bool value,
              const std::string& help) {
        CLI::Option* opt = app->add_flag(name, help);
        actions_.push_back([opt, member, value](RunConfig& cfg) {
            if (opt->count() > 0) cfg.*member = value;
        });
    }

    void apply(RunConfig& cfg) const {
        for (const auto& action : actions_) action(cfg);
    }

private:
    std::vector<std::function<void(RunConfig&)>> actions_;
};

struct Subcommand {
    CLI::App* app;
    std::string config_path;
    Overrides overrides;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flexac: locate, build and apply associative steering vectors"};
    app.require_subcommand(1);

    std::vector<std::unique_ptr<Subcommand>> subs;
    auto add = [&](const std::string& name, const std::string& help) -> Subcommand& {
        auto sub = std::make_unique<Subcommand>();
        sub->app = app.add_subcommand(name, help);
        sub->app->add_option("--config", sub->config_path, "Run config JSON (flags override it)");
        subs.push_back(std::move(sub));
        return *subs.back();
    };

    {
        auto& s = add("init-model", "Write a seeded toy model as TOYM1");
        s.overrides.option(s.app, "--model", &RunConfig::model, "seed:<seed>:<vocab>:<dim>:<layers>:<mlp>");
        s.overrides.option(s.app, "--out", &RunConfig::output_file, "Output .toym file");
    }
    {
        auto& s = add("make-fixture", "Write a synthetic model, token pairs and activation sets");
        s.overrides.option(s.app, "--model", &RunConfig::model, "TOYM1 path or seed spec");
        s.overrides.option(s.app, "--seed", &RunConfig::seed, "Seed for pair sampling (and default model)");
        s.overrides.option(s.app, "--num-pairs", &RunConfig::fixture_pairs, "Number of general pairs");
        s.overrides.option(s.app, "--out", &RunConfig::output_dir, "Output directory");
    }
    {
        auto& s = add("profile", "Per-layer associative vs grounded distance profile");
        s.overrides.option(s.app, "--activations", &RunConfig::activations, "ACTV1 file");
        s.overrides.option(s.app, "--metric", &RunConfig::metric, "cosine|euclidean");
        s.overrides.option(s.app, "--out", &RunConfig::output_dir, "Output directory");
    }
    {
        auto& s = add("intervene", "Layer replacement sweep on the toy model");
        s.overrides.option(s.app, "--model", &RunConfig::model, "TOYM1 path or seed spec");
        s.overrides.option(s.app, "--pairs", &RunConfig::pairs, "JSON lines of token pairs");
        s.overrides.option(s.app, "--layers", &RunConfig::layers, "Layers to replace (default: all)");
        s.overrides.option(s.app, "--metric", &RunConfig::metric, "cosine|euclidean");
        s.overrides.option(s.app, "--out", &RunConfig::output_dir, "Output directory");
    }
    {
        auto& s = add("build-vector", "Build general, task or random steering vectors");
        s.overrides.option(s.app, "--activations", &RunConfig::activations, "ACTV1 file");
        s.overrides.option(s.app, "--layers", &RunConfig::layers, "Layers to build vectors for");
        s.overrides.option(s.app, "--K", &RunConfig::k, "Top-K pairs to average");
        s.overrides.option(s.app, "--kind", &RunConfig::kind, "general|task|random");
        s.overrides.option(s.app, "--selection-scope", &RunConfig::selection_scope,
                           "per_layer|reference_layer:<l>");
        s.overrides.option(s.app, "--seed", &RunConfig::seed, "Seed for random vectors");
        s.overrides.option(s.app, "--target-norm", &RunConfig::target_norm, "Norm of random vectors");
        s.overrides.option(s.app, "--dim", &RunConfig::hidden_dim, "Hidden dim for random vectors");
        s.overrides.option(s.app, "--out", &RunConfig::output_file, "Output .strv file");
    }
    {
        auto& s = add("steer", "Greedy generation with inference-time control");
        s.overrides.option(s.app, "--model", &RunConfig::model, "TOYM1 path or seed spec");
        s.overrides.option(s.app, "--gen", &RunConfig::gen_vectors, "General vectors (.strv)");
        s.overrides.option(s.app, "--task", &RunConfig::task_vectors, "Task vectors (.strv)");
        s.overrides.option(s.app, "--layers", &RunConfig::layers, "Control layers (default: vector layers)");
        s.overrides.option(s.app, "--alpha-gen", &RunConfig::alpha_gen, "General coefficient");
        s.overrides.option(s.app, "--alpha-task", &RunConfig::alpha_task, "Task coefficient");
        s.overrides.flag(s.app, "--sic", &RunConfig::sic, true, "Enable steering intensity calibration");
        s.overrides.flag(s.app, "--renorm", &RunConfig::renorm, true, "Preserve hidden-state norm");
        s.overrides.option(s.app, "--prompt", &RunConfig::prompt, "Prompt tokens, e.g. 3,1,4");
        s.overrides.option(s.app, "--steps", &RunConfig::steps, "Tokens to generate");
        s.overrides.option(s.app, "--out", &RunConfig::output_dir, "Output directory");
    }
    {
        auto& s = add("vdat", "Divergent association score from EMBV1 embeddings");
        s.overrides.option(s.app, "--embeddings", &RunConfig::embeddings, "EMBV1 file");
        s.overrides.flag(s.app, "--no-image-pairs", &RunConfig::include_image_pairs, false,
                         "Score noun-noun pairs only");
        s.overrides.option(s.app, "--out", &RunConfig::output_dir, "Optional output directory");
    }
    {
        auto& s = add("chair", "CHAIR ratios from object annotations");
        s.overrides.option(s.app, "--annotations", &RunConfig::annotations, "JSON lines {mentioned, gt}");
        s.overrides.option(s.app, "--out", &RunConfig::output_dir, "Optional output directory");
    }
    {
        auto& s = add("pope", "Yes/no probing accuracy, precision, recall, F1");
        s.overrides.option(s.app, "--qa", &RunConfig::qa, "JSON lines {pred, label}");
        s.overrides.option(s.app, "--out", &RunConfig::output_dir, "Optional output directory");
    }
    {
        auto& s = add("pca", "PCA coordinates of one layer for plotting");
        s.overrides.option(s.app, "--activations", &RunConfig::activations, "ACTV1 file");
        s.overrides.option(s.app, "--layer", &RunConfig::layer, "Layer index");
        s.overrides.option(s.app, "--k", &RunConfig::pca_k, "2 or 3 components");
        s.overrides.option(s.app, "--out", &RunConfig::output_file, "Output CSV");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : flexac::cli::kExitInputError;
    }

    try {
        for (const auto& sub : subs) {
            if (!sub->app->parsed()) continue;
            RunConfig cfg = sub->config_path.empty() ? RunConfig{} : RunConfig::load(sub->config_path);
            sub->overrides.apply(cfg);
            cfg.command = sub->app->get_name();
            flexac::cli::run_command(cfg, std::cout);
        }
    } catch (const flexac::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return flexac::is_numeric_error(e.code()) ? flexac::cli::kExitNumericError
                                                  : flexac::cli::kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return flexac::cli::kExitInputError;
    }
    return flexac::cli::kExitOk;
}
