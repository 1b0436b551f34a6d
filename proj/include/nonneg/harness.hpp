#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nonneg/optimizer.hpp"
#include "nonneg/report.hpp"

namespace nonneg::harness {

struct RunOptions {
    std::string input_path;
    std::string proposal_path;
    std::string out_dir = "out";
    double alpha = 0.0;
    std::optional<double> beta;  // defaults to 1 - alpha
    double gamma = 1.0;
    std::string variant = "affine";
    double learning_rate = 0.05;
    int max_iters = 500;
    double rel_tol = 1e-6;
    std::uint64_t seed = 0;
    int trace_every = 10;
    bool full_trace = false;
    bool raw_residual = false;
};

struct SweepOptions {
    std::string input_path;
    std::string proposal_path;
    std::string out_dir = "out";
    std::vector<double> alphas;  // explicit list, or derived from steps
    std::optional<int> alpha_steps;
    double gamma = 1.0;
    double learning_rate = 0.05;
    int max_iters = 500;
    double rel_tol = 1e-6;
    std::uint64_t seed = 0;
};

struct BatchOptions {
    std::string input_dir;
    std::string proposal_dir;
    std::string out_dir = "out";
    double alpha = 0.0;
    std::optional<double> beta;
    double gamma = 1.0;
    std::string variant = "affine";
    double learning_rate = 0.05;
    int max_iters = 500;
    double rel_tol = 1e-6;
    std::uint64_t seed = 0;
    bool strict = false;
};

struct LandscapeOptions {
    std::string input_path;
    std::string proposal_path;
    std::string out_dir = "out";
    double alpha = 0.0;
    std::optional<double> beta;
    double gamma = 1.0;
    bool normalized = true;
    GridSpec grid;
};

// Each command writes its artifacts under out_dir and throws on failure:
// IoError for file problems, std::invalid_argument for input mismatches
// (the CLI maps these to exit codes 4 and 3).
void cmd_run(const RunOptions& opt);
void cmd_sweep(const SweepOptions& opt);
void cmd_batch(const BatchOptions& opt);
void cmd_landscape(const LandscapeOptions& opt);

// Report assembly shared by run/sweep/batch.
RunReport make_report(const RunResult& result, const ReportInputs& inputs,
                      double residual_scale, int trace_every, bool full_trace);

}  // namespace nonneg::harness
