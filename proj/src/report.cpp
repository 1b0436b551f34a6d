#include "nonneg/report.hpp"

#include <charconv>
#include <stdexcept>

#include "json.hpp"

namespace nonneg {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json theta_to_json(const RunReport& r, const std::vector<double>& v) {
    if (r.theta_per_pixel) return "per_pixel";
    if (r.theta_per_channel) return v;
    return v.at(0);
}

std::vector<double> theta_from_json(const ordered_json& j, bool& per_pixel,
                                    bool& per_channel) {
    if (j.is_string()) {
        if (j.get<std::string>() != "per_pixel")
            throw std::invalid_argument("report: unexpected theta value");
        per_pixel = true;
        return {};
    }
    if (j.is_array()) {
        per_channel = true;
        return j.get<std::vector<double>>();
    }
    return {j.get<double>()};
}

}  // namespace

bool RunReport::operator==(const RunReport& other) const {
    return schema_version == other.schema_version && inputs == other.inputs &&
           theta_per_pixel == other.theta_per_pixel &&
           theta_per_channel == other.theta_per_channel &&
           theta1 == other.theta1 && theta2 == other.theta2 &&
           iterations_run == other.iterations_run &&
           converged == other.converged && n_psnr_db == other.n_psnr_db &&
           violation_fraction == other.violation_fraction &&
           violation_mean == other.violation_mean &&
           violation_max == other.violation_max &&
           final_loss.sim == other.final_loss.sim &&
           final_loss.constr == other.final_loss.constr &&
           final_loss.total == other.final_loss.total &&
           residual_scale == other.residual_scale &&
           runtime_ms == other.runtime_ms && trace == other.trace;
}

std::string serialize_report(const RunReport& r) {
    ordered_json j;
    j["schema_version"] = r.schema_version;
    j["inputs"] = {{"input_path", r.inputs.input_path},
                   {"proposal_path", r.inputs.proposal_path},
                   {"alpha", r.inputs.alpha},
                   {"beta", r.inputs.beta},
                   {"gamma", r.inputs.gamma},
                   {"variant", r.inputs.variant},
                   {"seed", r.inputs.seed}};
    ordered_json res;
    res["theta1"] = theta_to_json(r, r.theta1);
    res["theta2"] = theta_to_json(r, r.theta2);
    res["iterations_run"] = r.iterations_run;
    res["converged"] = r.converged;
    res["n_psnr_db"] = r.n_psnr_db;
    res["violation_fraction"] = r.violation_fraction;
    res["violation_mean"] = r.violation_mean;
    res["violation_max"] = r.violation_max;
    res["final_loss"] = {{"sim", r.final_loss.sim},
                         {"constr", r.final_loss.constr},
                         {"total", r.final_loss.total}};
    res["residual_scale"] = r.residual_scale;
    res["runtime_ms"] = r.runtime_ms;
    j["result"] = std::move(res);
    ordered_json trace = ordered_json::array();
    for (const TraceRow& row : r.trace)
        trace.push_back({{"iter", row.iter},
                         {"sim", row.sim},
                         {"constr", row.constr},
                         {"total", row.total}});
    j["trace"] = std::move(trace);
    return j.dump(2) + "\n";
}

RunReport parse_report(const std::string& text) {
    const ordered_json j = ordered_json::parse(text);
    RunReport r;
    r.schema_version = j.at("schema_version").get<int>();
    const auto& in = j.at("inputs");
    r.inputs.input_path = in.at("input_path").get<std::string>();
    r.inputs.proposal_path = in.at("proposal_path").get<std::string>();
    r.inputs.alpha = in.at("alpha").get<double>();
    r.inputs.beta = in.at("beta").get<double>();
    r.inputs.gamma = in.at("gamma").get<double>();
    r.inputs.variant = in.at("variant").get<std::string>();
    r.inputs.seed = in.at("seed").get<std::uint64_t>();
    const auto& res = j.at("result");
    r.theta1 = theta_from_json(res.at("theta1"), r.theta_per_pixel,
                               r.theta_per_channel);
    r.theta2 = theta_from_json(res.at("theta2"), r.theta_per_pixel,
                               r.theta_per_channel);
    r.iterations_run = res.at("iterations_run").get<int>();
    r.converged = res.at("converged").get<bool>();
    r.n_psnr_db = res.at("n_psnr_db").get<double>();
    r.violation_fraction = res.at("violation_fraction").get<double>();
    r.violation_mean = res.at("violation_mean").get<double>();
    r.violation_max = res.at("violation_max").get<double>();
    r.final_loss.sim = res.at("final_loss").at("sim").get<double>();
    r.final_loss.constr = res.at("final_loss").at("constr").get<double>();
    r.final_loss.total = res.at("final_loss").at("total").get<double>();
    r.residual_scale = res.at("residual_scale").get<double>();
    r.runtime_ms = res.at("runtime_ms").get<double>();
    for (const auto& row : j.at("trace"))
        r.trace.push_back({row.at("iter").get<int>(), row.at("sim").get<double>(),
                           row.at("constr").get<double>(),
                           row.at("total").get<double>()});
    return r;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace nonneg
