// fbmreg command-line tool: simulate, estimate, crlb, screen, bench.
// Exit codes: 0 success, 2 usage, 3 model or numeric failure.

#include "fbmreg/baselines.hpp"
#include "fbmreg/bench.hpp"
#include "fbmreg/crlb.hpp"
#include "fbmreg/errors.hpp"
#include "fbmreg/io.hpp"
#include "fbmreg/likelihood.hpp"
#include "fbmreg/platform.hpp"
#include "fbmreg/screening.hpp"
#include "fbmreg/simulate.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fbmreg;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitModel = 3;

/// Parameter point from either --test-point or the explicit flags.
struct PointArgs {
    int test_point{0};
    std::vector<double> params;  // sigma_ri, sigma_ti, H, k, dt, ds, alpha_deg, dr
    int n_ri{23};
    int n_ti{15};
    double noise_std_ri{1.0};
    double noise_std_ti{1.0};

    void add_to(CLI::App* app) {
        auto* tp = app->add_option("--test-point", test_point, "catalogue entry 1..10");
        auto* p = app->add_option("--params", params,
                                  "sigma_x_ri,sigma_x_ti,hurst,k_rt,dt,ds,alpha_deg,dr")
                      ->delimiter(',')
                      ->expected(8);
        tp->excludes(p);
        app->add_option("--n-ri", n_ri, "reference fragment size (explicit parameters only)");
        app->add_option("--n-ti", n_ti, "template fragment size (explicit parameters only)");
        app->add_option("--noise-std-ri", noise_std_ri, "reference noise STD (explicit parameters only)");
        app->add_option("--noise-std-ti", noise_std_ti, "template noise STD (explicit parameters only)");
    }

    [[nodiscard]] TestPoint resolve() const {
        if (test_point != 0) {
            return fbmreg::test_point(test_point);
        }
        if (params.empty()) {
            throw Error(ErrorCode::InvalidArgument, "give --test-point or --params");
        }
        TestPoint tp;
        tp.id = 0;
        tp.description = "explicit parameters";
        tp.params.texture = {params[0], params[1], params[2], params[3]};
        tp.params.rst = {params[4], params[5], deg_to_rad(params[6]), params[7]};
        tp.params.validate();
        tp.geometry = {n_ri, n_ti};
        tp.geometry.validate();
        if (!(noise_std_ri >= 0.0) || !(noise_std_ti >= 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "noise STDs must be non-negative");
        }
        tp.noise_std_ri = noise_std_ri;
        tp.noise_std_ti = noise_std_ti;
        return tp;
    }
};

RstParams rst_from_list(const std::vector<double>& v, const char* flag) {
    if (v.size() != 4) {
        throw Error(ErrorCode::InvalidArgument, std::string(flag) + " expects dt,ds,alpha_deg,dr");
    }
    RstParams r{v[0], v[1], deg_to_rad(v[2]), v[3]};
    r.validate();
    return r;
}

void emit(const Json& j, const std::string& out) {
    const std::string text = j.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        write_file_atomic(out, text);
    }
}

int run_simulate(const PointArgs& point, std::uint64_t seed, const std::string& out_dir) {
    const TestPoint tp = point.resolve();
    const FragmentPair pair = simulate_pair(tp.params, tp.geometry, tp.noise(), seed);
    const fs::path dir(out_dir);
    write_fragment(dir / "ref.csv", pair.reference);
    write_fragment(dir / "tpl.csv", pair.tmpl);
    Json manifest = to_json(tp);
    manifest["seed"] = seed;
    manifest["files"] = Json{{"reference", "ref.csv"}, {"template", "tpl.csv"}};
    write_file_atomic(dir / "params.json", manifest.dump(2) + "\n");
    return 0;
}

int run_estimate(const std::string& ref_path, const std::string& tpl_path, const std::vector<double>& init,
                 const std::string& method, const std::vector<double>& truth, const std::string& out) {
    const RstParams rst0 = rst_from_list(init, "--init");
    std::optional<RstParams> rst_truth;
    if (!truth.empty()) {
        rst_truth = rst_from_list(truth, "--truth");
    }
    const FragmentPair pair{read_fragment(ref_path), read_fragment(tpl_path)};
    Json result;
    result["method"] = method;
    if (method == "ml") {
        const MlOptions options;
        const MlEstimate est = estimate_ml(pair, rst0, options);
        result.update(to_json(est));
        // Same noise floor as the estimator, so noise-free inputs still get a bound.
        const PairGeometry geometry{pair.reference.size(), pair.tmpl.size()};
        const NoiseVariances noise{std::max(pair.reference.noise_var(), options.min_noise_var),
                                   std::max(pair.tmpl.noise_var(), options.min_noise_var)};
        try {
            const CrlbResult bound = crlb(est.params_hat, geometry, noise);
            result["sigma_rst"] = to_json(bound, false)["sigma_rst"];
            if (rst_truth) {
                const OutlierVerdict v = outlier_test(est.params_hat.rst, *rst_truth, bound.rst_cov);
                result["q"] = Json{{"q", v.q}, {"threshold", v.threshold}, {"is_outlier", v.is_outlier}};
            }
        } catch (const Error& e) {
            if (e.is_usage_error()) {
                throw;
            }
            result["sigma_rst"] = nullptr;
            result["bound_error"] = e.what();
        }
    } else {
        const SimilarityMeasure measure = method == "ncc" ? SimilarityMeasure::Ncc : SimilarityMeasure::Ssd;
        result.update(to_json(estimate_baseline(pair, rst0, measure)));
    }
    if (rst_truth) {
        result["truth"] = to_json(*rst_truth);
    }
    emit(result, out);
    return 0;
}

int run_crlb(const PointArgs& point, bool full, const std::string& out) {
    const TestPoint tp = point.resolve();
    Json j = to_json(crlb(tp.params, tp.geometry, tp.noise()), full);
    j["point"] = to_json(tp);
    emit(j, out);
    return 0;
}

int run_screen(const std::string& ref_path, const std::string& tpl_path, const std::string& out) {
    const FragmentPair pair{read_fragment(ref_path), read_fragment(tpl_path)};
    emit(to_json(classify(pair)), out);
    return 0;
}

int run_bench(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out) {
    Json j;
    try {
        j = Json::parse(read_file(config_path));
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
    }
    CampaignConfig config = campaign_config_from_json(j);
    if (seed) {
        config.seed_base = *seed;
    } else if (config.trials > 0 && !j.contains("seed_base")) {
        throw Error(ErrorCode::InvalidArgument, "randomized campaign needs --seed or seed_base in the config");
    }
    if (!out.empty()) {
        config.output = out;
    }
    if (config.output.empty()) {
        throw Error(ErrorCode::InvalidArgument, "no report path: give --out or 'output' in the config");
    }
    const CampaignResult result = run_campaign(config, [](const TrialRecord& r) {
        std::cerr << r.target << ' ' << to_string(r.estimator) << " trial " << r.trial
                  << (r.failed ? " failed: " + r.error : std::string(" ok")) << '\n';
    });
    write_campaign_report(config.output, config, result);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    configure_allocator();

    CLI::App app{"fbmreg: fBm-model registration of image fragment pairs"};
    app.require_subcommand(1);
    app.allow_extras(false);

    PointArgs sim_point;
    std::uint64_t sim_seed = 0;
    std::string sim_out = ".";
    auto* sim = app.add_subcommand("simulate", "draw a reference/template pair");
    sim_point.add_to(sim);
    sim->add_option("--seed", sim_seed, "random seed")->required();
    sim->add_option("--out-dir", sim_out, "output directory for ref.csv, tpl.csv, params.json");

    std::string est_ref, est_tpl, est_method = "ml", est_out;
    std::vector<double> est_init, est_truth;
    auto* est = app.add_subcommand("estimate", "estimate RST parameters for a fragment pair");
    est->add_option("--ref", est_ref, "reference fragment file")->required()->check(CLI::ExistingFile);
    est->add_option("--tpl", est_tpl, "template fragment file")->required()->check(CLI::ExistingFile);
    est->add_option("--init", est_init, "dt,ds,alpha_deg,dr")->required()->delimiter(',')->expected(4);
    est->add_option("--method", est_method, "ml | ncc | ssd")->check(CLI::IsMember({"ml", "ncc", "ssd"}));
    est->add_option("--truth", est_truth, "dt,ds,alpha_deg,dr for the Q statistic")->delimiter(',')->expected(4);
    est->add_option("--out", est_out, "write the result JSON here instead of stdout");

    PointArgs crlb_point;
    bool crlb_full = false;
    std::string crlb_out;
    auto* cr = app.add_subcommand("crlb", "Cramer-Rao bound at a parameter point");
    crlb_point.add_to(cr);
    cr->add_flag("--full", crlb_full, "include the full 8x8 covariance");
    cr->add_option("--out", crlb_out, "write JSON here instead of stdout");

    std::string scr_ref, scr_tpl, scr_out;
    auto* scr = app.add_subcommand("screen", "isotropy and normality screening of a pair");
    scr->add_option("--ref", scr_ref, "reference fragment file")->required()->check(CLI::ExistingFile);
    scr->add_option("--tpl", scr_tpl, "template fragment file")->required()->check(CLI::ExistingFile);
    scr->add_option("--out", scr_out, "write JSON here instead of stdout");

    std::string bench_config, bench_out;
    std::optional<std::uint64_t> bench_seed;
    auto* bench = app.add_subcommand("bench", "run a Monte-Carlo campaign");
    bench->add_option("--config", bench_config, "campaign JSON")->required()->check(CLI::ExistingFile);
    bench->add_option("--seed", bench_seed, "seed base (overrides the config)");
    bench->add_option("--out", bench_out, "report prefix; writes <prefix>.json and <prefix>.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*sim) {
            return run_simulate(sim_point, sim_seed, sim_out);
        }
        if (*est) {
            return run_estimate(est_ref, est_tpl, est_init, est_method, est_truth, est_out);
        }
        if (*cr) {
            return run_crlb(crlb_point, crlb_full, crlb_out);
        }
        if (*scr) {
            return run_screen(scr_ref, scr_tpl, scr_out);
        }
        return run_bench(bench_config, bench_seed, bench_out);
    } catch (const Error& e) {
        std::cerr << "fbmreg: " << e.what() << '\n';
        return e.is_usage_error() ? kExitUsage : kExitModel;
    } catch (const std::exception& e) {
        std::cerr << "fbmreg: " << e.what() << '\n';
        return kExitModel;
    }
}
