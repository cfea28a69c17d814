#include <cstdint>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "compmod/cli.hpp"

namespace {

compmod::RunConfig load_with_seed(const std::string& config_path,
                                  const std::optional<std::uint64_t>& seed) {
    compmod::RunConfig cfg = compmod::load_config(config_path);
    if (seed) cfg.train.seed = *seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CompMod experiments: bi-level comprehensive-regularization "
                 "self-supervised training"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string checkpoint_path;
    std::string axis = "lambda_grid";
    std::string scope = "all";

    CLI::App* train = app.add_subcommand("train", "Run the training loop");
    train->add_option("--config", config_path, "Run config JSON")->required();
    train->add_option("--out", out_dir, "Output directory");
    train->add_option("--seed", seed, "Override train.seed");

    CLI::App* eval = app.add_subcommand("eval", "Probe a checkpoint");
    eval->add_option("checkpoint", checkpoint_path, "Checkpoint path")->required();
    eval->add_option("--config", config_path, "Run config JSON (dataset section)")
        ->required();
    eval->add_option("--out", out_dir, "Output directory");
    eval->add_option("--seed", seed, "Override train.seed");

    CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference audit");
    gradcheck->add_option("scope", scope, "all or a loss name");

    CLI::App* ablate = app.add_subcommand("ablate", "Sweep one ablation axis");
    ablate->add_option("--config", config_path, "Base run config JSON")->required();
    ablate->add_option("--out", out_dir, "Output directory");
    ablate->add_option("--seed", seed, "Override train.seed");
    ablate->add_option("--axis", axis, "fusion or lambda_grid")->required();

    CLI11_PARSE(app, argc, argv);

    return compmod::cli::guard([&]() -> int {
        if (train->parsed()) {
            compmod::RunConfig cfg = load_with_seed(config_path, seed);
            return compmod::cli::run_train(cfg, out_dir.empty() ? cfg.output.dir
                                                                : out_dir);
        }
        if (eval->parsed()) {
            compmod::RunConfig cfg = load_with_seed(config_path, seed);
            return compmod::cli::run_eval(checkpoint_path, cfg,
                                          out_dir.empty() ? cfg.output.dir : out_dir);
        }
        if (gradcheck->parsed()) {
            return compmod::cli::run_gradcheck(scope);
        }
        compmod::RunConfig cfg = load_with_seed(config_path, seed);
        return compmod::cli::run_ablate(cfg, axis,
                                        out_dir.empty() ? cfg.output.dir : out_dir);
    });
}
