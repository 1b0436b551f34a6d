#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nonneg/harness.hpp"

namespace {

constexpr int kExitBadFlags = 2;
constexpr int kExitMismatch = 3;
constexpr int kExitIo = 4;

void add_device_flags(CLI::App* cmd, double& alpha, double& beta,
                      CLI::Option*& beta_opt, double& gamma) {
    cmd->add_option("--alpha", alpha, "Scene transmittance in [0,1]")
        ->required()
        ->check(CLI::Range(0.0, 1.0));
    beta_opt = cmd->add_option("--beta", beta,
                               "Display budget in [0,1] (default 1 - alpha)")
                   ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--gamma", gamma, "Constraint loss weight")
        ->check(CLI::NonNegativeNumber);
}

void add_optim_flags(CLI::App* cmd, double& lr, int& iters, double& rel_tol,
                     std::uint64_t& seed) {
    cmd->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--iters", iters, "Maximum iterations")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--rel-tol", rel_tol,
                    "Relative plateau tolerance over a 10-iteration window")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", seed, "Seed recorded in the report");
}

const std::vector<std::string> kVariants{
    "affine", "per_channel_affine", "per_pixel", "heuristic",
    "no_norm", "no_const", "no_sim"};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Non-negative image synthesis: retarget a proposal image so it "
                 "is reachable from the input by only adding light."};
    app.require_subcommand(1);

    // --- run ---------------------------------------------------------------
    nonneg::harness::RunOptions run_opt;
    double run_beta = 0.0;
    CLI::Option* run_beta_opt = nullptr;
    CLI::App* run = app.add_subcommand(
        "run", "Optimize one input/proposal pair and write outputs + report");
    run->add_option("--input", run_opt.input_path, "Input (scene) image")
        ->required();
    run->add_option("--proposal", run_opt.proposal_path, "Proposal image")
        ->required();
    add_device_flags(run, run_opt.alpha, run_beta, run_beta_opt, run_opt.gamma);
    run->add_option("--variant", run_opt.variant, "Method variant")
        ->check(CLI::IsMember(kVariants));
    add_optim_flags(run, run_opt.learning_rate, run_opt.max_iters,
                    run_opt.rel_tol, run_opt.seed);
    run->add_option("--out-dir", run_opt.out_dir, "Output directory");
    run->add_option("--trace-every", run_opt.trace_every,
                    "Trace subsampling stride")
        ->check(CLI::PositiveNumber);
    run->add_flag("--full-trace", run_opt.full_trace, "Record every iteration");
    run->add_flag("--raw-residual", run_opt.raw_residual,
                  "Also write the unscaled residual image");

    // --- sweep -------------------------------------------------------------
    nonneg::harness::SweepOptions sweep_opt;
    int sweep_steps = 0;
    CLI::Option* steps_opt = nullptr;
    CLI::App* sweep = app.add_subcommand(
        "sweep", "Run optimizer and heuristic across a range of alpha values");
    sweep->add_option("--input", sweep_opt.input_path, "Input (scene) image")
        ->required();
    sweep->add_option("--proposal", sweep_opt.proposal_path, "Proposal image")
        ->required();
    CLI::Option* alphas_opt =
        sweep->add_option("--alphas", sweep_opt.alphas,
                          "Comma-separated alpha values in [0,1]")
            ->delimiter(',')
            ->check(CLI::Range(0.0, 1.0));
    steps_opt = sweep->add_option("--alpha-steps", sweep_steps,
                                  "Uniform alpha grid over [0,1] with N points")
                    ->check(CLI::Range(2, 1000000));
    alphas_opt->excludes(steps_opt);
    sweep->add_option("--gamma", sweep_opt.gamma, "Constraint loss weight")
        ->check(CLI::NonNegativeNumber);
    add_optim_flags(sweep, sweep_opt.learning_rate, sweep_opt.max_iters,
                    sweep_opt.rel_tol, sweep_opt.seed);
    sweep->add_option("--out-dir", sweep_opt.out_dir, "Output directory");

    // --- batch -------------------------------------------------------------
    nonneg::harness::BatchOptions batch_opt;
    double batch_beta = 0.0;
    CLI::Option* batch_beta_opt = nullptr;
    CLI::App* batch = app.add_subcommand(
        "batch", "Process filename-matched pairs from two directories");
    batch->add_option("--input-dir", batch_opt.input_dir, "Input directory")
        ->required();
    batch->add_option("--proposal-dir", batch_opt.proposal_dir,
                      "Proposal directory")
        ->required();
    add_device_flags(batch, batch_opt.alpha, batch_beta, batch_beta_opt,
                     batch_opt.gamma);
    batch->add_option("--variant", batch_opt.variant, "Method variant")
        ->check(CLI::IsMember(kVariants));
    add_optim_flags(batch, batch_opt.learning_rate, batch_opt.max_iters,
                    batch_opt.rel_tol, batch_opt.seed);
    batch->add_option("--out-dir", batch_opt.out_dir, "Output directory");
    batch->add_flag("--strict", batch_opt.strict,
                    "Fail on unmatched filenames instead of skipping them");

    // --- landscape ---------------------------------------------------------
    nonneg::harness::LandscapeOptions land_opt;
    double land_beta = 0.0;
    CLI::Option* land_beta_opt = nullptr;
    std::string normalized = "on";
    CLI::App* land = app.add_subcommand(
        "landscape", "Export the loss surface over a theta grid");
    land->add_option("--input", land_opt.input_path, "Input (scene) image")
        ->required();
    land->add_option("--proposal", land_opt.proposal_path, "Proposal image")
        ->required();
    add_device_flags(land, land_opt.alpha, land_beta, land_beta_opt,
                     land_opt.gamma);
    land->add_option("--theta1-min", land_opt.grid.gain_min, "Gain grid start")
        ->check(CLI::Range(1e-3, 1e9));
    land->add_option("--theta1-max", land_opt.grid.gain_max, "Gain grid end");
    land->add_option("--theta1-step", land_opt.grid.gain_step, "Gain grid step")
        ->check(CLI::PositiveNumber);
    land->add_option("--theta2-min", land_opt.grid.offset_min,
                     "Offset grid start");
    land->add_option("--theta2-max", land_opt.grid.offset_max, "Offset grid end");
    land->add_option("--theta2-step", land_opt.grid.offset_step,
                     "Offset grid step")
        ->check(CLI::PositiveNumber);
    land->add_option("--normalized", normalized,
                     "Apply range normalization inside the similarity term")
        ->check(CLI::IsMember({"on", "off"}));
    land->add_option("--out-dir", land_opt.out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        CLI::App* scope = app.get_subcommands().empty()
                              ? &app
                              : app.get_subcommands().front();
        std::cerr << scope->help();
        return kExitBadFlags;
    }

    if (run_beta_opt->count()) run_opt.beta = run_beta;
    if (batch_beta_opt->count()) batch_opt.beta = batch_beta;
    if (land_beta_opt->count()) land_opt.beta = land_beta;
    if (steps_opt->count()) sweep_opt.alpha_steps = sweep_steps;
    land_opt.normalized = normalized == "on";

    if (sweep->parsed() && !sweep_opt.alpha_steps && sweep_opt.alphas.empty()) {
        std::cerr << "error: sweep requires --alphas or --alpha-steps\n\n"
                  << sweep->help();
        return kExitBadFlags;
    }

    try {
        if (run->parsed())
            nonneg::harness::cmd_run(run_opt);
        else if (sweep->parsed())
            nonneg::harness::cmd_sweep(sweep_opt);
        else if (batch->parsed())
            nonneg::harness::cmd_batch(batch_opt);
        else if (land->parsed())
            nonneg::harness::cmd_landscape(land_opt);
        return 0;
    } catch (const nonneg::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMismatch;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
