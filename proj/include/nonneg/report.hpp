#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nonneg/losses.hpp"

namespace nonneg {

inline constexpr int kReportSchemaVersion = 1;

struct ReportInputs {
    std::string input_path;
    std::string proposal_path;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 1.0;
    std::string variant = "affine";
    std::uint64_t seed = 0;

    bool operator==(const ReportInputs&) const = default;
};

struct TraceRow {
    int iter = 0;
    double sim = 0.0;
    double constr = 0.0;
    double total = 0.0;

    bool operator==(const TraceRow&) const = default;
};

/// Machine-readable per-run report (report.json). theta values are
/// scalars for the affine variant, length-C arrays for per-channel, and
/// the sentinel string "per_pixel" when the whole target was optimized.
struct RunReport {
    int schema_version = kReportSchemaVersion;
    ReportInputs inputs;

    bool theta_per_pixel = false;
    bool theta_per_channel = false;
    std::vector<double> theta1;
    std::vector<double> theta2;
    int iterations_run = 0;
    bool converged = false;
    double n_psnr_db = 0.0;
    double violation_fraction = 0.0;
    double violation_mean = 0.0;
    double violation_max = 0.0;
    LossBreakdown final_loss;
    double residual_scale = 1.0;
    double runtime_ms = 0.0;

    std::vector<TraceRow> trace;

    bool operator==(const RunReport& other) const;
};

std::string serialize_report(const RunReport& report);
RunReport parse_report(const std::string& text);

// Shortest decimal representation that round-trips to the same double.
// Used for every number in CSV output.
std::string format_double(double v);

}  // namespace nonneg
