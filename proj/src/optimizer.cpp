#include "nonneg/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nonneg {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::affine: return "affine";
        case Variant::per_channel_affine: return "per_channel_affine";
        case Variant::per_pixel: return "per_pixel";
        case Variant::heuristic: return "heuristic";
        case Variant::no_norm: return "no_norm";
        case Variant::no_const: return "no_const";
        case Variant::no_sim: return "no_sim";
    }
    return "affine";
}

Variant variant_from_name(const std::string& name) {
    if (name == "affine") return Variant::affine;
    if (name == "per_channel_affine") return Variant::per_channel_affine;
    if (name == "per_pixel") return Variant::per_pixel;
    if (name == "heuristic") return Variant::heuristic;
    if (name == "no_norm") return Variant::no_norm;
    if (name == "no_const") return Variant::no_const;
    if (name == "no_sim") return Variant::no_sim;
    throw std::invalid_argument("unknown variant: " + name);
}

LossVariant loss_variant_for(Variant v) {
    switch (v) {
        case Variant::no_norm: return LossVariant::no_norm;
        case Variant::no_const: return LossVariant::no_const;
        case Variant::no_sim: return LossVariant::no_sim;
        default: return LossVariant::full;
    }
}

namespace {

// Per-entry subgradient of the objective with respect to the unclamped
// residual r = target - alpha*x. Built from:
//   d/dr of the clamp distance: -1 below the band, +1 above, 0 inside and
//   at the kinks;
//   d/dr of the similarity term through the composed output, which only
//   passes strictly inside (0, beta);
//   the range normalization differentiated with the per-channel argmin /
//   argmax positions frozen at the current iterate (lowest flat index on
//   ties), so gradient also flows into the extremum entries.
std::vector<double> residual_gradient(const Image& x, const Image& y,
                                      const Image& target,
                                      const DeviceParams& device, double gamma,
                                      LossVariant variant) {
    const std::size_t n = x.size();
    const int channels = x.channels;
    const double beta = device.beta;

    Image r = residual(x, target, device);
    std::vector<double> dldr(n, 0.0);

    if (variant != LossVariant::no_const) {
        const double scale = gamma / static_cast<double>(n);
        for (std::size_t p = 0; p < n; ++p) {
            if (r.data[p] > beta)
                dldr[p] += scale;
            else if (r.data[p] < 0.0)
                dldr[p] -= scale;
        }
    }

    if (variant == LossVariant::no_sim) return dldr;

    const Image output = compose_output(x, target, device);
    const double two_over_n = 2.0 / static_cast<double>(n);

    if (variant == LossVariant::no_norm) {
        for (std::size_t p = 0; p < n; ++p) {
            if (r.data[p] > 0.0 && r.data[p] < beta)
                dldr[p] += two_over_n * (output.data[p] - y.data[p]);
        }
        return dldr;
    }

    const Image ny = normalize(y);
    for (int ch = 0; ch < channels; ++ch) {
        // First-attainment extrema of the output channel.
        std::size_t imin = ch, imax = ch;
        double lo = output.data[ch], hi = output.data[ch];
        for (std::size_t p = ch; p < n; p += channels) {
            if (output.data[p] < lo) { lo = output.data[p]; imin = p; }
            if (output.data[p] > hi) { hi = output.data[p]; imax = p; }
        }
        const double range = hi - lo;
        if (range < kRangeEpsilon) continue;  // flat channel: N is constant

        double err_sum = 0.0;
        double err_dot_u = 0.0;
        for (std::size_t p = ch; p < n; p += channels) {
            const double u = (output.data[p] - lo) / range;
            const double e = u - ny.data[p];
            err_sum += e;
            err_dot_u += e * u;
        }

        for (std::size_t p = ch; p < n; p += channels) {
            if (!(r.data[p] > 0.0 && r.data[p] < beta)) continue;
            const double u = (output.data[p] - lo) / range;
            double g = (u - ny.data[p]) / range;
            if (p == imin) g += (err_dot_u - err_sum) / range;
            if (p == imax) g -= err_dot_u / range;
            dldr[p] += two_over_n * g;
        }
    }
    return dldr;
}

void validate_theta(const Image& y, const Theta& theta) {
    const std::size_t expect = theta.per_channel ? y.channels : 1;
    if (theta.gain.size() != expect || theta.offset.size() != expect)
        throw std::invalid_argument("theta parameter length does not match");
}

struct Adam {
    std::vector<double> m, v;
    int t = 0;

    explicit Adam(std::size_t size) : m(size, 0.0), v(size, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad,
              const OptimConfig& cfg) {
        ++t;
        const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
        const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
        for (std::size_t k = 0; k < params.size(); ++k) {
            m[k] = cfg.adam_beta1 * m[k] + (1.0 - cfg.adam_beta1) * grad[k];
            v[k] = cfg.adam_beta2 * v[k] + (1.0 - cfg.adam_beta2) * grad[k] * grad[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            params[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
    }
};

Theta theta_from_params(const std::vector<double>& params, bool per_channel) {
    Theta t;
    const std::size_t half = params.size() / 2;
    t.gain.assign(params.begin(), params.begin() + half);
    t.offset.assign(params.begin() + half, params.end());
    t.per_channel = per_channel;
    return t;
}

RunMetrics compute_metrics(const Image& x, const Image& y, const Image& target,
                           const Image& output, const DeviceParams& device) {
    RunMetrics m;
    m.n_psnr_db = n_psnr(output, y);
    m.violations = violation_stats(residual(x, target, device), 0.0, device.beta);
    return m;
}

}  // namespace

std::vector<double> loss_gradient(const Image& x, const Image& y,
                                  const Theta& theta,
                                  const DeviceParams& device,
                                  const OptimConfig& config) {
    require_same_shape(x, y, "loss_gradient");
    validate_theta(y, theta);
    const LossVariant lv = loss_variant_for(config.variant);
    const Image target = affine_target(y, theta);
    const std::vector<double> dldr =
        residual_gradient(x, y, target, device, config.gamma, lv);

    const int channels = x.channels;
    const std::size_t groups = theta.per_channel ? channels : 1;
    std::vector<double> grad(2 * groups, 0.0);
    for (std::size_t p = 0; p < dldr.size(); ++p) {
        const std::size_t g = theta.per_channel ? (p % channels) : 0;
        grad[g] += dldr[p] * y.data[p];         // d r / d gain
        grad[groups + g] += dldr[p];            // d r / d offset
    }
    return grad;
}

std::vector<double> target_loss_gradient(const Image& x, const Image& y,
                                         const Image& target,
                                         const DeviceParams& device,
                                         const OptimConfig& config) {
    require_same_shape(x, y, "target_loss_gradient");
    require_same_shape(x, target, "target_loss_gradient");
    return residual_gradient(x, y, target, device, config.gamma,
                             loss_variant_for(config.variant));
}

namespace {

// Shared state across the descent, refinement and bookkeeping phases.
struct SearchState {
    std::vector<LossBreakdown> trace;
    std::vector<double> best_params;
    LossBreakdown best_loss;
    double best_total = std::numeric_limits<double>::infinity();

    void record(const LossBreakdown& bd, const std::vector<double>& params) {
        if (!std::isfinite(bd.total))
            throw std::runtime_error(
                "optimize: non-finite loss (diverged learning rate?)");
        trace.push_back(bd);
        if (bd.total < best_total) {
            best_total = bd.total;
            best_loss = bd;
            best_params = params;
        }
    }
};

struct DescentResult {
    bool plateaued = false;
    std::vector<double> best_params;
    double best_total = std::numeric_limits<double>::infinity();
};

// One Adam descent from the given parameters. Stops when the total loss
// varies by less than rel_tol (relative) across the trailing window, or at
// max_iters.
template <typename EvalFn, typename GradFn>
DescentResult adam_descent(std::vector<double> params, std::size_t gain_count,
                           const OptimConfig& config, SearchState& state,
                           EvalFn eval, GradFn grad_fn) {
    DescentResult out;
    Adam adam(params.size());
    std::vector<double> window;
    window.reserve(kConvergenceWindow + 1);
    for (int iter = 0; iter < config.max_iters; ++iter) {
        const LossBreakdown bd = eval(params);
        state.record(bd, params);
        if (bd.total < out.best_total) {
            out.best_total = bd.total;
            out.best_params = params;
        }

        window.push_back(bd.total);
        if (static_cast<int>(window.size()) > kConvergenceWindow + 1)
            window.erase(window.begin());
        if (static_cast<int>(window.size()) == kConvergenceWindow + 1) {
            const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
            if (*hi - *lo <= config.rel_tol * std::max(std::abs(*hi), 1e-12)) {
                out.plateaued = true;
                return out;
            }
        }

        const std::vector<double> grad = grad_fn(params);
        adam.step(params, grad, config);
        for (std::size_t k = 0; k < gain_count; ++k)
            params[k] = std::max(params[k], kGainEpsilon);
    }
    return out;
}

// Greedy pattern refinement with a shrinking step, probing along each
// axis and each coordinate pair's diagonals. Cleans up the offset that
// Adam's oscillation leaves around kinks of the clamped objective and
// follows the narrow curved valleys it parks beside.
template <typename EvalFn>
void compass_refine(std::vector<double> current, double current_total,
                    std::size_t gain_count, int eval_budget,
                    SearchState& state, EvalFn eval) {
    const std::size_t n = current.size();
    std::vector<std::vector<double>> directions;
    for (std::size_t k = 0; k < n; ++k)
        for (const double d : {1.0, -1.0}) {
            std::vector<double> dir(n, 0.0);
            dir[k] = d;
            directions.push_back(std::move(dir));
        }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (const double di : {1.0, -1.0})
                for (const double dj : {1.0, -1.0}) {
                    std::vector<double> dir(n, 0.0);
                    dir[i] = di;
                    dir[j] = dj;
                    directions.push_back(std::move(dir));
                }

    double step = 0.08;
    int used = 0;
    while (step > 1e-6 && used < eval_budget) {
        bool improved = false;
        for (const std::vector<double>& dir : directions) {
            std::vector<double> probe = current;
            for (std::size_t k = 0; k < n; ++k) {
                probe[k] += dir[k] * step;
                if (k < gain_count) probe[k] = std::max(probe[k], kGainEpsilon);
            }
            const LossBreakdown bd = eval(probe);
            ++used;
            state.record(bd, probe);
            if (bd.total < current_total) {
                current_total = bd.total;
                current = std::move(probe);
                improved = true;
                break;
            }
            if (used >= eval_budget) break;
        }
        if (!improved) step *= 0.5;
    }
}

// Deterministic extra Adam starts. A single descent from the identity gets
// trapped in a shallow side valley on a noticeable fraction of pairs; the
// global minimum typically sits at a strongly compressed gain. The
// identity start runs first.
constexpr double kAffineStarts[][2] = {
    {1.0, 0.0}, {0.15, 0.45}, {0.5, 0.25}, {1.5, -0.3},
    {0.15, -0.15}, {0.3, 0.6}, {0.8, -0.4}, {0.1, 0.1},
};

}  // namespace

RunResult optimize(const Image& x, const Image& y, const DeviceParams& device,
                   const OptimConfig& config) {
    require_same_shape(x, y, "optimize");
    if (config.variant == Variant::heuristic)
        throw std::invalid_argument("optimize: use run_heuristic for the baseline");
    if (config.max_iters < 1)
        throw std::invalid_argument("optimize: max_iters must be positive");

    const auto start = std::chrono::steady_clock::now();
    const LossVariant lv = loss_variant_for(config.variant);
    const bool per_pixel = config.variant == Variant::per_pixel;
    const bool per_channel = config.variant == Variant::per_channel_affine;

    SearchState state;
    bool converged = false;

    if (per_pixel) {
        Image target(x.height, x.width, x.channels);
        const auto eval = [&](const std::vector<double>& params) {
            target.data = params;
            return objective_for_target(x, y, target, device, config.gamma, lv);
        };
        const auto grad = [&](const std::vector<double>& params) {
            target.data = params;
            return target_loss_gradient(x, y, target, device, config);
        };
        converged = adam_descent(y.data, 0, config, state, eval, grad).plateaued;
    } else {
        const auto eval = [&](const std::vector<double>& params) {
            return objective(x, y, theta_from_params(params, per_channel),
                             device, config.gamma, lv);
        };
        const auto grad = [&](const std::vector<double>& params) {
            return loss_gradient(x, y, theta_from_params(params, per_channel),
                                 device, config);
        };
        const std::size_t groups = per_channel ? y.channels : 1;
        std::vector<DescentResult> descents;
        converged = true;
        for (const auto& s : kAffineStarts) {
            std::vector<double> init(2 * groups);
            for (std::size_t g = 0; g < groups; ++g) {
                init[g] = s[0];
                init[groups + g] = s[1];
            }
            descents.push_back(
                adam_descent(std::move(init), groups, config, state, eval, grad));
            converged &= descents.back().plateaued;
            if (state.best_total == 0.0) break;  // nonnegative loss: done
        }
        if (state.best_total > 0.0)
            for (const DescentResult& d : descents)
                compass_refine(d.best_params, d.best_total, groups, 200, state,
                               eval);
    }

    RunResult res;
    res.per_pixel = per_pixel;
    const std::vector<double>& best_params = state.best_params;
    const LossBreakdown best_loss = state.best_loss;
    std::vector<LossBreakdown>& trace = state.trace;
    if (per_pixel) {
        res.theta_final = Theta::identity();
        res.target = Image(x.height, x.width, x.channels);
        res.target.data = best_params;
    } else {
        res.theta_final = theta_from_params(best_params, per_channel);
        res.target = affine_target(y, res.theta_final);
    }
    res.output = compose_output(x, res.target, device);
    res.loss_trace = std::move(trace);
    res.iterations_run = static_cast<int>(res.loss_trace.size());
    res.converged = converged;
    res.final_loss = best_loss;
    res.metrics = compute_metrics(x, y, res.target, res.output, device);
    res.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return res;
}

RunResult run_heuristic(const Image& x, const Image& y,
                        const DeviceParams& device, const OptimConfig& config) {
    require_same_shape(x, y, "run_heuristic");
    const auto start = std::chrono::steady_clock::now();
    RunResult res;
    res.theta_final = Theta::identity();
    res.target = affine_target(y, res.theta_final);
    res.output = heuristic_baseline(x, y, device);
    res.iterations_run = 0;
    res.converged = true;
    res.final_loss = objective(x, y, res.theta_final, device, config.gamma,
                               LossVariant::full);
    res.metrics = compute_metrics(x, y, res.target, res.output, device);
    res.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return res;
}

GridResult grid_oracle(const Image& x, const Image& y,
                       const DeviceParams& device, double gamma,
                       const GridSpec& grid, LossVariant variant) {
    if (grid.gain_min < kGainEpsilon)
        throw std::invalid_argument("grid_oracle: gain range must start at or above " +
                                    std::to_string(kGainEpsilon));
    if (grid.gain_step <= 0.0 || grid.offset_step <= 0.0 ||
        grid.gain_max < grid.gain_min || grid.offset_max < grid.offset_min)
        throw std::invalid_argument("grid_oracle: malformed grid spec");

    const int gain_count = static_cast<int>(
        std::floor((grid.gain_max - grid.gain_min) / grid.gain_step + 1e-9)) + 1;
    const int offset_count = static_cast<int>(
        std::floor((grid.offset_max - grid.offset_min) / grid.offset_step + 1e-9)) + 1;

    GridResult res;
    res.surface.reserve(static_cast<std::size_t>(gain_count) * offset_count);
    double best = std::numeric_limits<double>::infinity();
    Theta theta = Theta::identity();
    for (int i = 0; i < gain_count; ++i) {
        theta.gain[0] = grid.gain_min + i * grid.gain_step;
        for (int j = 0; j < offset_count; ++j) {
            theta.offset[0] = grid.offset_min + j * grid.offset_step;
            const LossBreakdown bd = objective(x, y, theta, device, gamma, variant);
            res.surface.push_back({theta.gain[0], theta.offset[0], bd});
            if (bd.total < best) {
                best = bd.total;
                res.argmin = theta;
                res.min_loss = bd;
            }
        }
    }
    return res;
}

std::vector<SweepPoint> alpha_sweep(const Image& x, const Image& y,
                                    const std::vector<double>& alphas,
                                    const OptimConfig& config) {
    std::vector<SweepPoint> report;
    report.reserve(alphas.size());
    OptimConfig affine_cfg = config;
    affine_cfg.variant = Variant::affine;
    for (const double alpha : alphas) {
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw std::invalid_argument("alpha_sweep: alpha outside [0, 1]");
        const DeviceParams device = DeviceParams::ost(alpha);
        SweepPoint point;
        point.alpha = alpha;
        point.beta = device.beta;
        const RunResult ours = optimize(x, y, device, affine_cfg);
        const RunResult base = run_heuristic(x, y, device, affine_cfg);
        point.methods.push_back({"affine", ours.theta_final, ours.metrics.n_psnr_db,
                                 ours.metrics.violations, ours.final_loss});
        point.methods.push_back({"heuristic", base.theta_final,
                                 base.metrics.n_psnr_db, base.metrics.violations,
                                 base.final_loss});
        report.push_back(std::move(point));
    }
    return report;
}

}  // namespace nonneg
