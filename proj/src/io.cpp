#include "fbmreg/io.hpp"

#include "fbmreg/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <vector>

namespace fbmreg {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json nullable(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json nullable_vec(const Vector4& v) {
    Json a = Json::array();
    for (int i = 0; i < 4; ++i) {
        a.push_back(nullable(v[i]));
    }
    return a;
}

void reject_unknown_keys(const Json& j, const std::set<std::string>& allowed, std::string_view what) {
    if (!j.is_object()) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a JSON object");
    }
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) {
            throw Error(ErrorCode::InvalidArgument, "unknown key '" + key + "' in " + std::string(what));
        }
    }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad value for '") + key + "': " + e.what());
    }
}

double get_required(const Json& j, const char* key) {
    if (!j.contains(key)) {
        throw Error(ErrorCode::InvalidArgument, std::string("missing key '") + key + "'");
    }
    return get_or<double>(j, key, 0.0);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

double parse_double(std::string_view s, std::string_view what) {
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::InvalidArgument, "cannot parse " + std::string(what) + " '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

std::string format_fragment(const Fragment& fragment) {
    std::string out = "# fbmreg fragment v1\n";
    out += "# size=" + std::to_string(fragment.size()) + " noise_var=" + fmt17(fragment.noise_var()) + "\n";
    out += "# layout: row-major; row i is t = i - (N-1)/2, column j is s = j - (N-1)/2\n";
    const Matrix& p = fragment.pixels();
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            if (j > 0) {
                out += ',';
            }
            out += fmt17(p(i, j));
        }
        out += '\n';
    }
    return out;
}

Fragment parse_fragment(std::string_view text) {
    std::vector<std::string_view> lines;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        lines.push_back(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    }
    if (lines.size() < 3 || trim(lines[0]) != "# fbmreg fragment v1") {
        throw Error(ErrorCode::InvalidArgument, "not an fbmreg fragment file (bad magic line)");
    }
    const std::string_view meta = trim(lines[1]);
    const auto size_pos = meta.find("size=");
    const auto noise_pos = meta.find("noise_var=");
    if (!meta.starts_with("#") || size_pos == std::string_view::npos || noise_pos == std::string_view::npos) {
        throw Error(ErrorCode::InvalidArgument, "fragment header must carry size= and noise_var=");
    }
    const auto size_end = meta.find(' ', size_pos);
    const double size_d = parse_double(meta.substr(size_pos + 5, size_end - size_pos - 5), "size");
    const double noise_var = parse_double(meta.substr(noise_pos + 10), "noise_var");
    const int n = static_cast<int>(size_d);
    if (n <= 0 || size_d != n) {
        throw Error(ErrorCode::InvalidArgument, "fragment size must be a positive integer");
    }
    Matrix p(n, n);
    int row = 0;
    for (std::size_t li = 3; li < lines.size(); ++li) {
        const std::string_view line = trim(lines[li]);
        if (line.empty() || line.starts_with("#")) {
            continue;
        }
        if (row >= n) {
            throw Error(ErrorCode::InvalidArgument, "fragment has more than " + std::to_string(n) + " rows");
        }
        std::string_view rest = line;
        for (int col = 0; col < n; ++col) {
            const auto comma = rest.find(',');
            if ((comma == std::string_view::npos) != (col == n - 1)) {
                throw Error(ErrorCode::InvalidArgument, "row " + std::to_string(row) + " does not have " +
                                                            std::to_string(n) + " values");
            }
            p(row, col) = parse_double(rest.substr(0, comma), "pixel value");
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
        ++row;
    }
    if (row != n) {
        throw Error(ErrorCode::InvalidArgument, "fragment has " + std::to_string(row) + " rows, expected " +
                                                    std::to_string(n));
    }
    return Fragment(std::move(p), noise_var);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw Error(ErrorCode::Io, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw Error(ErrorCode::Io, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

Fragment read_fragment(const std::filesystem::path& path) { return parse_fragment(read_file(path)); }

void write_fragment(const std::filesystem::path& path, const Fragment& fragment) {
    write_file_atomic(path, format_fragment(fragment));
}

Json to_json(const RstParams& p) {
    return Json{{"dt", p.dt}, {"ds", p.ds}, {"alpha_deg", rad_to_deg(p.alpha)}, {"dr", p.dr}};
}

Json to_json(const TextureParams& p) {
    return Json{{"sigma_x_ri", p.sigma_ri}, {"sigma_x_ti", p.sigma_ti}, {"hurst", p.hurst}, {"k_rt", p.k_rt}};
}

Json to_json(const FullParams& p) {
    Json j = to_json(p.texture);
    const Json rst = to_json(p.rst);
    for (const auto& [k, v] : rst.items()) {
        j[k] = v;
    }
    return j;
}

RstParams rst_from_json(const Json& j) {
    reject_unknown_keys(j, {"dt", "ds", "alpha_deg", "dr"}, "RST parameters");
    RstParams p{get_required(j, "dt"), get_required(j, "ds"), deg_to_rad(get_required(j, "alpha_deg")),
                get_required(j, "dr")};
    p.validate();
    return p;
}

FullParams full_params_from_json(const Json& j) {
    reject_unknown_keys(j, {"sigma_x_ri", "sigma_x_ti", "hurst", "k_rt", "dt", "ds", "alpha_deg", "dr"},
                        "parameters");
    FullParams p;
    p.texture = {get_required(j, "sigma_x_ri"), get_required(j, "sigma_x_ti"), get_required(j, "hurst"),
                 get_required(j, "k_rt")};
    p.rst = {get_required(j, "dt"), get_required(j, "ds"), deg_to_rad(get_required(j, "alpha_deg")),
             get_required(j, "dr")};
    p.validate();
    return p;
}

Json to_json(const CrlbResult& c, bool include_cov) {
    Json j;
    j["sigma_rst"] = Json{{"dt", c.sigma_rst[0]}, {"ds", c.sigma_rst[1]}, {"alpha_deg", c.sigma_rst[2]},
                          {"dr", c.sigma_rst[3]}};
    Json theta;
    for (int i = 0; i < kNumParams; ++i) {
        theta[std::string(param_name(kAllParams[i]))] = c.sigma_theta[i];
    }
    j["sigma_theta"] = theta;
    if (include_cov) {
        Json cov = Json::array();
        for (int i = 0; i < kNumParams; ++i) {
            Json row = Json::array();
            for (int k = 0; k < kNumParams; ++k) {
                row.push_back(c.cov(i, k));
            }
            cov.push_back(row);
        }
        j["cov"] = cov;
        j["cov_order"] = Json::array();
        for (auto p : kAllParams) {
            j["cov_order"].push_back(std::string(param_name(p)));
        }
        j["cov_alpha_units"] = "rad";
    }
    return j;
}

Json to_json(const ScreeningReport& r) {
    auto lf = [](const LillieforsResult& l) {
        return Json{{"statistic", l.statistic}, {"critical", l.critical}, {"reject", l.reject}};
    };
    return Json{{"group", std::string(to_string(r.group))},
                {"isotropic", r.isotropic},
                {"eigen_ratio", r.eigen_ratio},
                {"normal", r.normal},
                {"lilliefors_vertical", lf(r.lilliefors_vertical)},
                {"lilliefors_horizontal", lf(r.lilliefors_horizontal)}};
}

Json to_json(const MlEstimate& e) {
    Json starts = Json::array();
    for (const auto& s : e.starts) {
        starts.push_back(Json{{"index", s.index},
                              {"rst_initial", to_json(s.rst_initial)},
                              {"failed", s.failed},
                              {"log_lf", nullable(s.log_lf)},
                              {"iterations", s.iterations},
                              {"converged", s.converged},
                              {"status", s.status}});
    }
    return Json{{"rst", to_json(e.params_hat.rst)},
                {"texture", to_json(e.params_hat.texture)},
                {"central", Json{{"x_ri0", e.central.x_ri0}, {"x_ti0", e.central.x_ti0}}},
                {"log_lf", e.log_lf_at_opt},
                {"start_index", e.start_index},
                {"iterations", e.iterations},
                {"converged", e.converged},
                {"starts", starts}};
}

Json to_json(const SimilarityEstimate& e) {
    Json starts = Json::array();
    for (const auto& s : e.starts) {
        starts.push_back(Json{{"index", s.index},
                              {"rst_initial", to_json(s.rst_initial)},
                              {"failed", s.failed},
                              {"score", nullable(s.score)},
                              {"iterations", s.iterations},
                              {"converged", s.converged},
                              {"status", s.status}});
    }
    return Json{{"rst", to_json(e.rst_hat)},
                {"measure", std::string(to_string(e.measure))},
                {"score_at_opt", e.score_at_opt},
                {"start_index", e.start_index},
                {"iterations", e.iterations},
                {"converged", e.converged},
                {"starts", starts}};
}

Json to_json(const EstimatorStats& s) {
    return Json{{"target", s.target},
                {"test_point", s.test_point_id},
                {"estimator", std::string(to_string(s.estimator))},
                {"trials", s.trials},
                {"failed", s.failed},
                {"sigma_rst", nullable_vec(s.sigma_rst)},
                {"bias", nullable_vec(s.bias)},
                {"robust_std", nullable_vec(s.robust_std)},
                {"mse", nullable_vec(s.mse)},
                {"efficiency_pct", nullable_vec(s.efficiency)},
                {"mean_efficiency_pct", nullable(s.mean_efficiency)},
                {"efficiency_exceeds_bound", s.efficiency_exceeds_bound},
                {"normalized_robust_std", nullable_vec(s.normalized_robust_std)},
                {"p_out", s.p_out},
                {"q_threshold", s.q_threshold},
                {"crude_outlier_rate", s.crude_outlier_rate},
                {"filtered_bias", nullable_vec(s.filtered_bias)},
                {"filtered_robust_std", nullable_vec(s.filtered_robust_std)}};
}

Json to_json(const TestPoint& tp) {
    return Json{{"test_point", tp.id},
                {"description", tp.description},
                {"params", to_json(tp.params)},
                {"n_ri", tp.geometry.n_ri},
                {"n_ti", tp.geometry.n_ti},
                {"noise_std_ri", tp.noise_std_ri},
                {"noise_std_ti", tp.noise_std_ti}};
}

CampaignConfig campaign_config_from_json(const Json& j) {
    reject_unknown_keys(j,
                        {"test_points", "targets", "estimators", "trials", "seed_base", "first_trial", "threads",
                         "record_runtime", "outlier_tail", "output"},
                        "campaign config");
    CampaignConfig c;
    for (int id : get_or<std::vector<int>>(j, "test_points", {})) {
        c.targets.push_back(CampaignTarget::from_test_point(id));
    }
    if (j.contains("targets")) {
        if (!j.at("targets").is_array()) {
            throw Error(ErrorCode::InvalidArgument, "'targets' must be an array");
        }
        for (const auto& t : j.at("targets")) {
            reject_unknown_keys(t, {"name", "params", "n_ri", "n_ti", "noise_std_ri", "noise_std_ti"},
                                "campaign target");
            CampaignTarget target;
            target.name = get_or<std::string>(t, "name", "inline" + std::to_string(c.targets.size()));
            if (!t.contains("params")) {
                throw Error(ErrorCode::InvalidArgument, "campaign target needs 'params'");
            }
            target.params = full_params_from_json(t.at("params"));
            target.geometry = {get_or<int>(t, "n_ri", 23), get_or<int>(t, "n_ti", 15)};
            target.geometry.validate();
            const double sr = get_or<double>(t, "noise_std_ri", 1.0);
            const double st = get_or<double>(t, "noise_std_ti", 1.0);
            if (!(sr >= 0.0) || !(st >= 0.0)) {
                throw Error(ErrorCode::InvalidArgument, "noise STDs must be non-negative");
            }
            target.noise = {sr * sr, st * st};
            c.targets.push_back(std::move(target));
        }
    }
    for (const auto& name : get_or<std::vector<std::string>>(j, "estimators", {"ml"})) {
        c.estimators.push_back(estimator_from_string(name));
    }
    c.trials = get_or<int>(j, "trials", 0);
    c.seed_base = get_or<std::uint64_t>(j, "seed_base", 0);
    c.first_trial = get_or<int>(j, "first_trial", 0);
    c.threads = get_or<int>(j, "threads", 0);
    c.record_runtime = get_or<bool>(j, "record_runtime", false);
    c.outlier_tail = get_or<double>(j, "outlier_tail", kDefaultOutlierTail);
    c.output = get_or<std::string>(j, "output", "");
    if (c.trials < 0 || c.first_trial < 0 || c.threads < 0) {
        throw Error(ErrorCode::InvalidArgument, "trials, first_trial and threads must be non-negative");
    }
    if (!(c.outlier_tail > 0.0 && c.outlier_tail < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "outlier_tail must lie in (0, 1)");
    }
    return c;
}

Json campaign_report_json(const CampaignConfig& config, const CampaignResult& result) {
    Json targets = Json::array();
    for (const auto& t : config.targets) {
        targets.push_back(Json{{"name", t.name},
                               {"test_point", t.test_point_id},
                               {"params", to_json(t.params)},
                               {"n_ri", t.geometry.n_ri},
                               {"n_ti", t.geometry.n_ti},
                               {"noise_var_ri", t.noise.ri},
                               {"noise_var_ti", t.noise.ti}});
    }
    Json estimators = Json::array();
    for (auto e : config.estimators) {
        estimators.push_back(std::string(to_string(e)));
    }
    Json stats = Json::array();
    for (const auto& s : result.stats) {
        stats.push_back(to_json(s));
    }
    return Json{{"schema", "fbmreg-bench-report/1"},
                {"config",
                 Json{{"targets", targets},
                      {"estimators", estimators},
                      {"trials", config.trials},
                      {"first_trial", config.first_trial},
                      {"seed_base", config.seed_base},
                      {"outlier_tail", config.outlier_tail}}},
                {"records", result.records.size()},
                {"stats", stats}};
}

std::string records_csv(const std::vector<TrialRecord>& records, bool include_runtime) {
    std::string out =
        "target,test_point,trial,seed,estimator,status,dt_hat,ds_hat,alpha_hat_deg,dr_hat,"
        "dt_true,ds_true,alpha_true_deg,dr_true,err_dt,err_ds,err_alpha_deg,err_dr,"
        "nerr_dt,nerr_ds,nerr_alpha,nerr_dr,q,outlier";
    if (include_runtime) {
        out += ",runtime_s";
    }
    out += '\n';
    auto num = [](double v) { return std::isfinite(v) ? fmt17(v) : std::string(); };
    for (const auto& r : records) {
        out += r.target + ',' + std::to_string(r.test_point_id) + ',' + std::to_string(r.trial) + ',' +
               std::to_string(r.trial_seed) + ',' + std::string(to_string(r.estimator)) + ',' +
               (r.failed ? "failed" : "ok");
        for (const Vector4* v : {&r.rst_hat, &r.rst_truth, &r.absolute_error, &r.normalized_error}) {
            for (int i = 0; i < 4; ++i) {
                out += ',' + num((*v)[i]);
            }
        }
        out += ',' + num(r.q_statistic) + ',' + (r.outlier ? "1" : "0");
        if (include_runtime) {
            out += ',' + num(r.runtime_s);
        }
        out += '\n';
    }
    return out;
}

void write_campaign_report(const std::filesystem::path& prefix, const CampaignConfig& config,
                           const CampaignResult& result) {
    std::filesystem::path json_path = prefix;
    json_path += ".json";
    std::filesystem::path csv_path = prefix;
    csv_path += ".csv";
    write_file_atomic(json_path, campaign_report_json(config, result).dump(2) + "\n");
    write_file_atomic(csv_path, records_csv(result.records, config.record_runtime));
}

}  // namespace fbmreg
