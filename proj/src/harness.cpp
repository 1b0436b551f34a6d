#include "nonneg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "json.hpp"

namespace nonneg::harness {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

OptimConfig config_from(double lr, int iters, double rel_tol, double gamma,
                        std::uint64_t seed, Variant variant) {
    OptimConfig cfg;
    cfg.learning_rate = lr;
    cfg.max_iters = iters;
    cfg.rel_tol = rel_tol;
    cfg.gamma = gamma;
    cfg.seed = seed;
    cfg.variant = variant;
    return cfg;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write file: " + path.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw IoError("cannot write file: " + path.string());
}

Image applied_residual(const Image& x, const RunResult& result, double alpha) {
    Image out(x.height, x.width, x.channels);
    for (std::size_t p = 0; p < x.size(); ++p)
        out.data[p] = result.output.data[p] - alpha * x.data[p];
    return out;
}

// Writes output.png / residual.png / target.png / report.json for one run.
void write_run_outputs(const fs::path& dir, const Image& x,
                       const RunResult& result, const DeviceParams& device,
                       const ReportInputs& inputs, int trace_every,
                       bool full_trace, bool raw_residual) {
    ensure_dir(dir);
    save_image(result.output, (dir / "output.png").string());

    Image residual_img = applied_residual(x, result, device.alpha);
    const double scale = device.beta > 0.0 ? 1.0 / device.beta : 1.0;
    if (raw_residual)
        save_image(residual_img, (dir / "residual_raw.png").string());
    for (double& v : residual_img.data) v *= scale;
    save_image(residual_img, (dir / "residual.png").string());

    save_image(clamp_image(result.target, 0.0, 1.0), (dir / "target.png").string());

    const RunReport report =
        make_report(result, inputs, scale, trace_every, full_trace);
    write_text(dir / "report.json", serialize_report(report));
}

std::pair<Image, Image> load_pair(const std::string& input_path,
                                  const std::string& proposal_path) {
    Image x = load_image(input_path);
    Image y = load_image(proposal_path);
    if (!x.same_shape(y))
        throw std::invalid_argument(
            "dimension mismatch between input and proposal: " + input_path +
            " vs " + proposal_path);
    return {std::move(x), std::move(y)};
}

RunResult run_method(const Image& x, const Image& y, const DeviceParams& device,
                     const OptimConfig& cfg) {
    return cfg.variant == Variant::heuristic ? run_heuristic(x, y, device, cfg)
                                             : optimize(x, y, device, cfg);
}

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (const double d : v) acc += d;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

ordered_json stat_pair(const std::vector<double>& values) {
    return {{"mean", mean_of(values)}, {"median", median_of(values)}};
}

int batch_thread_count(std::size_t jobs) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("NONNEG_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return static_cast<int>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

bool supported_raster(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

}  // namespace

RunReport make_report(const RunResult& result, const ReportInputs& inputs,
                      double residual_scale, int trace_every, bool full_trace) {
    RunReport r;
    r.inputs = inputs;
    r.theta_per_pixel = result.per_pixel;
    r.theta_per_channel = result.theta_final.per_channel;
    if (!result.per_pixel) {
        r.theta1 = result.theta_final.gain;
        r.theta2 = result.theta_final.offset;
    }
    r.iterations_run = result.iterations_run;
    r.converged = result.converged;
    r.n_psnr_db = result.metrics.n_psnr_db;
    r.violation_fraction = result.metrics.violations.fraction;
    r.violation_mean = result.metrics.violations.mean_magnitude;
    r.violation_max = result.metrics.violations.max_magnitude;
    r.final_loss = result.final_loss;
    r.residual_scale = residual_scale;
    r.runtime_ms = result.runtime_ms;

    const int every = full_trace ? 1 : std::max(trace_every, 1);
    const int last = result.iterations_run - 1;
    for (int i = 0; i < result.iterations_run; ++i) {
        if (i % every == 0 || i == last) {
            const LossBreakdown& bd = result.loss_trace[i];
            r.trace.push_back({i, bd.sim, bd.constr, bd.total});
        }
    }
    return r;
}

void cmd_run(const RunOptions& opt) {
    const auto [x, y] = load_pair(opt.input_path, opt.proposal_path);
    const DeviceParams device =
        opt.beta ? DeviceParams(opt.alpha, *opt.beta) : DeviceParams::ost(opt.alpha);
    const Variant variant = variant_from_name(opt.variant);
    const OptimConfig cfg = config_from(opt.learning_rate, opt.max_iters,
                                        opt.rel_tol, opt.gamma, opt.seed, variant);

    const RunResult result = run_method(x, y, device, cfg);

    ReportInputs inputs{opt.input_path, opt.proposal_path, device.alpha,
                        device.beta,    opt.gamma,         opt.variant,
                        opt.seed};
    write_run_outputs(opt.out_dir, x, result, device, inputs, opt.trace_every,
                      opt.full_trace, opt.raw_residual);
}

void cmd_sweep(const SweepOptions& opt) {
    const auto [x, y] = load_pair(opt.input_path, opt.proposal_path);

    std::vector<double> alphas = opt.alphas;
    if (opt.alpha_steps) {
        alphas.clear();
        const int n = *opt.alpha_steps;
        for (int k = 0; k < n; ++k)
            alphas.push_back(static_cast<double>(k) / (n - 1));
    }
    std::sort(alphas.begin(), alphas.end());

    std::string csv = "alpha,method,n_psnr_db,violation_fraction,violation_mean,"
                      "final_total_loss\n";
    for (const double alpha : alphas) {
        const DeviceParams device = DeviceParams::ost(alpha);
        const fs::path alpha_dir =
            fs::path(opt.out_dir) / ("alpha_" + format_double(alpha));
        for (const char* method : {"affine", "heuristic"}) {
            const Variant variant = variant_from_name(method);
            const OptimConfig cfg =
                config_from(opt.learning_rate, opt.max_iters, opt.rel_tol,
                            opt.gamma, opt.seed, variant);
            const RunResult result = run_method(x, y, device, cfg);
            ReportInputs inputs{opt.input_path, opt.proposal_path, device.alpha,
                                device.beta,    opt.gamma,         method,
                                opt.seed};
            write_run_outputs(alpha_dir / method, x, result, device, inputs,
                              /*trace_every=*/10, /*full_trace=*/false,
                              /*raw_residual=*/false);
            csv += format_double(alpha);
            csv += ',';
            csv += method;
            csv += ',';
            csv += format_double(result.metrics.n_psnr_db);
            csv += ',';
            csv += format_double(result.metrics.violations.fraction);
            csv += ',';
            csv += format_double(result.metrics.violations.mean_magnitude);
            csv += ',';
            csv += format_double(result.final_loss.total);
            csv += '\n';
        }
    }
    ensure_dir(opt.out_dir);
    write_text(fs::path(opt.out_dir) / "sweep.csv", csv);
}

void cmd_batch(const BatchOptions& opt) {
    const DeviceParams device =
        opt.beta ? DeviceParams(opt.alpha, *opt.beta) : DeviceParams::ost(opt.alpha);

    auto list_dir = [](const std::string& dir) {
        if (!fs::is_directory(dir))
            throw IoError("not a directory: " + dir);
        std::set<std::string> names;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file() && supported_raster(entry.path()))
                names.insert(entry.path().filename().string());
        return names;
    };
    const std::set<std::string> inputs = list_dir(opt.input_dir);
    const std::set<std::string> proposals = list_dir(opt.proposal_dir);

    std::vector<std::string> matched;
    std::vector<std::string> skipped;
    std::set_intersection(inputs.begin(), inputs.end(), proposals.begin(),
                          proposals.end(), std::back_inserter(matched));
    std::set_symmetric_difference(inputs.begin(), inputs.end(), proposals.begin(),
                                  proposals.end(), std::back_inserter(skipped));
    if (opt.strict && !skipped.empty())
        throw std::invalid_argument("unmatched file: " + skipped.front());

    std::vector<std::string> methods{opt.variant};
    if (opt.variant != "heuristic") methods.push_back("heuristic");

    struct PairStats {
        std::map<std::string, RunMetrics> by_method;
    };
    std::vector<PairStats> stats(matched.size());
    std::vector<std::exception_ptr> errors(matched.size());

    auto process = [&](std::size_t idx) {
        try {
            const std::string& name = matched[idx];
            const auto [x, y] =
                load_pair((fs::path(opt.input_dir) / name).string(),
                          (fs::path(opt.proposal_dir) / name).string());
            for (const std::string& method : methods) {
                const OptimConfig cfg =
                    config_from(opt.learning_rate, opt.max_iters, opt.rel_tol,
                                opt.gamma, opt.seed, variant_from_name(method));
                const RunResult result = run_method(x, y, device, cfg);
                ReportInputs rin{(fs::path(opt.input_dir) / name).string(),
                                 (fs::path(opt.proposal_dir) / name).string(),
                                 device.alpha,
                                 device.beta,
                                 opt.gamma,
                                 method,
                                 opt.seed};
                write_run_outputs(fs::path(opt.out_dir) / name / method, x, result,
                                  device, rin, 10, false, false);
                stats[idx].by_method[method] = result.metrics;
            }
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    };

    const int workers = batch_thread_count(matched.size());
    if (workers <= 1 || matched.size() <= 1) {
        for (std::size_t i = 0; i < matched.size(); ++i) process(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < matched.size();
                     i = next.fetch_add(1))
                    process(i);
            });
        for (std::thread& t : pool) t.join();
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);

    ordered_json agg;
    agg["schema_version"] = kReportSchemaVersion;
    agg["inputs"] = {{"input_dir", opt.input_dir},
                     {"proposal_dir", opt.proposal_dir},
                     {"alpha", device.alpha},
                     {"beta", device.beta},
                     {"gamma", opt.gamma},
                     {"variant", opt.variant},
                     {"seed", opt.seed}};
    agg["pairs"] = matched.size();
    agg["skipped"] = skipped;

    ordered_json by_method = ordered_json::object();
    std::vector<std::string> sorted_methods = methods;
    std::sort(sorted_methods.begin(), sorted_methods.end());
    for (const std::string& method : sorted_methods) {
        std::vector<double> psnr, frac, mean_mag, max_mag;
        for (const PairStats& s : stats) {
            const RunMetrics& m = s.by_method.at(method);
            psnr.push_back(m.n_psnr_db);
            frac.push_back(m.violations.fraction);
            mean_mag.push_back(m.violations.mean_magnitude);
            max_mag.push_back(m.violations.max_magnitude);
        }
        by_method[method] = {{"n_psnr_db", stat_pair(psnr)},
                             {"violation_fraction", stat_pair(frac)},
                             {"violation_mean", stat_pair(mean_mag)},
                             {"violation_max", stat_pair(max_mag)}};
    }
    agg["methods"] = matched.empty() ? ordered_json::object() : by_method;

    ensure_dir(opt.out_dir);
    write_text(fs::path(opt.out_dir) / "aggregate.json", agg.dump(2) + "\n");
}

void cmd_landscape(const LandscapeOptions& opt) {
    const auto [x, y] = load_pair(opt.input_path, opt.proposal_path);
    const DeviceParams device =
        opt.beta ? DeviceParams(opt.alpha, *opt.beta) : DeviceParams::ost(opt.alpha);
    const LossVariant variant =
        opt.normalized ? LossVariant::full : LossVariant::no_norm;

    const GridResult grid = grid_oracle(x, y, device, opt.gamma, opt.grid, variant);

    std::string csv = "theta1,theta2,sim,constr,total\n";
    for (const GridCell& cell : grid.surface) {
        csv += format_double(cell.gain);
        csv += ',';
        csv += format_double(cell.offset);
        csv += ',';
        csv += format_double(cell.loss.sim);
        csv += ',';
        csv += format_double(cell.loss.constr);
        csv += ',';
        csv += format_double(cell.loss.total);
        csv += '\n';
    }
    ensure_dir(opt.out_dir);
    write_text(fs::path(opt.out_dir) / "landscape.csv", csv);

    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["inputs"] = {{"input_path", opt.input_path},
                   {"proposal_path", opt.proposal_path},
                   {"alpha", device.alpha},
                   {"beta", device.beta},
                   {"gamma", opt.gamma},
                   {"normalized", opt.normalized},
                   {"grid",
                    {{"theta1_min", opt.grid.gain_min},
                     {"theta1_max", opt.grid.gain_max},
                     {"theta1_step", opt.grid.gain_step},
                     {"theta2_min", opt.grid.offset_min},
                     {"theta2_max", opt.grid.offset_max},
                     {"theta2_step", opt.grid.offset_step}}}};
    j["landscape_argmin"] = {{"theta1", grid.argmin.gain[0]},
                             {"theta2", grid.argmin.offset[0]},
                             {"sim", grid.min_loss.sim},
                             {"constr", grid.min_loss.constr},
                             {"total", grid.min_loss.total}};
    write_text(fs::path(opt.out_dir) / "report.json", j.dump(2) + "\n");
}

}  // namespace nonneg::harness
