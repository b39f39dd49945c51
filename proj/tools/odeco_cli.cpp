// Command-line front end: generate instances, decompose tensor files, run
// experiment configs, aggregate result CSVs, and run the acceptance suite.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "odeco/analysis.hpp"
#include "odeco/experiment.hpp"
#include "odeco/io.hpp"
#include "odeco/noise.hpp"
#include "odeco/odeco.hpp"
#include "odeco/pipeline.hpp"
#include "odeco/verify.hpp"

namespace {

using namespace odeco;
namespace fs = std::filesystem;

std::vector<int> parse_dims(const std::string& text) {
    std::vector<int> dims;
    std::string cur;
    for (char ch : text + ",") {
        if (ch == ',') {
            if (!cur.empty()) dims.push_back(std::stoi(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    return dims;
}

int cmd_generate(const std::string& kind, const std::string& dims_text, int rank,
                 const std::string& lambda_kind, double lambda, double ratio,
                 const std::string& noise, double sigma, double df, bool allow_heavy,
                 double spike, std::uint64_t seed, const std::string& out_dir) {
    fs::create_directories(out_dir);
    OdecoDecomposition truth;
    DenseTensor t;
    if (kind == "worked_example") {
        const std::vector<int> dims = parse_dims(dims_text);
        WorkedExample ex = worked_example(dims.at(0), lambda);
        truth = ex.truth;
        t = std::move(ex.t);
        write_tensor((fs::path(out_dir) / "X_odeco.odct").string(), ex.x);
        write_json((fs::path(out_dir) / "perturbed_truth.json").string(),
                   decomposition_to_json(ex.perturbed_truth));
    } else {
        const std::vector<int> dims = parse_dims(dims_text);
        LambdaSpec spec = lambda_kind == "geometric" ? LambdaSpec::geometric(lambda, ratio)
                                                     : LambdaSpec::equal(lambda);
        truth = random_odeco(dims, rank, spec, seed);
        t = synthesize(truth);
    }
    write_json((fs::path(out_dir) / "truth.json").string(), decomposition_to_json(truth));
    write_tensor((fs::path(out_dir) / "T.odct").string(), t);
    if (noise != "none") {
        NoiseSpec ns;
        if (noise == "gaussian") ns = NoiseSpec::gaussian(sigma, derive_stream(seed, 1));
        else if (noise == "student_t") ns = NoiseSpec::student_t(df, derive_stream(seed, 1), allow_heavy);
        else if (noise == "rank_one_spike") ns = NoiseSpec::rank_one_spike(spike, derive_stream(seed, 1));
        else {
            std::cerr << "unknown noise family: " << noise << "\n";
            return 2;
        }
        DenseTensor e = sample_noise(t.dims, ns, &truth);
        write_tensor((fs::path(out_dir) / "E.odct").string(), e);
        write_tensor((fs::path(out_dir) / "X.odct").string(), add(t, e));
    }
    std::cout << "wrote instance files to " << out_dir << "\n";
    return 0;
}

int cmd_decompose(const std::string& input, int rank, const std::string& algorithm,
                  const std::string& init_name, const std::string& truth_path, double angle,
                  int L, int iters, std::uint64_t seed, const std::string& out,
                  bool traces) {
    DenseTensor x = read_tensor(input);
    bool have_truth = !truth_path.empty();
    OdecoDecomposition truth;
    if (have_truth) truth = decomposition_from_json(read_json(truth_path));
    if ((init_name == "oracle" || init_name == "perturbed_oracle") && !have_truth) {
        std::cerr << "initializer '" << init_name << "' needs --truth\n";
        return 2;
    }

    EstimatedDecomposition est;
    if (algorithm == "noiseless") {
        est = noiseless_decompose(x, rank, {}, seed);
    } else {
        Initializer init;
        if (init_name == "oracle") init = make_oracle_initializer(truth);
        else if (init_name == "perturbed_oracle") init = make_perturbed_oracle_initializer(truth, angle, seed);
        else if (init_name == "random") init = make_random_initializer(seed);
        else if (init_name == "alg3") init = make_general_slicing_initializer(rank, L, seed);
        else if (init_name == "alg4") init = make_incoherent_slicing_initializer(rank, L, seed);
        else {
            std::cerr << "unknown initializer: " << init_name << "\n";
            return 2;
        }
        est = decompose_with_deflation(x, rank, init, iters);
    }

    if (!out.empty()) write_json(out, estimate_to_json(est, x.dims, traces));
    std::cout << "extracted " << est.rank() << " components";
    if (!est.unrecovered.empty()) std::cout << " (" << est.unrecovered.size() << " unrecovered)";
    std::cout << "\n";
    for (int j = 0; j < est.rank(); ++j)
        std::cout << "  lambda_hat[" << j << "] = " << est.lambdas_hat[static_cast<std::size_t>(j)] << "\n";
    if (have_truth) {
        ComponentMatch match = match_components(truth, est, MatchPolicy::pad);
        std::cout << "matched sin angles (truth -> estimate: per-mode..., max):\n";
        for (int j = 0; j < truth.r; ++j) {
            std::cout << "  " << j << " -> " << match.permutation[static_cast<std::size_t>(j)] << ":";
            for (double s : match.sin_angles[static_cast<std::size_t>(j)]) std::cout << " " << s;
            std::cout << "  max " << match.max_sin[static_cast<std::size_t>(j)] << "\n";
        }
    }
    return 0;
}

int cmd_experiment(const std::string& config_path, std::uint64_t seed_override, bool has_seed,
                   const std::string& csv_override, const std::string& summary_override) {
    ExperimentConfig cfg = read_json(config_path).get<ExperimentConfig>();
    if (has_seed) cfg.root_seed = seed_override;
    if (!csv_override.empty()) cfg.csv_path = csv_override;
    if (!summary_override.empty()) cfg.summary_path = summary_override;
    std::vector<TrialReport> reports = run_experiment(cfg);
    write_results(cfg, reports);
    std::size_t failed = 0;
    for (const TrialReport& r : reports)
        if (r.status != "ok") ++failed;
    std::cout << reports.size() << " cells -> " << cfg.csv_path << " (" << failed << " failed)\n";
    return 0;
}

std::string alias_column(const std::string& name) {
    if (name == "error") return "max_mode_sin";
    if (name == "lambda") return "lambda_target";
    return name;
}

int cmd_report(const std::string& csv, const std::string& value, const std::string& by,
               const std::string& slope_spec) {
    CsvTable table = read_csv(csv);
    if (!slope_spec.empty()) {
        const auto tilde = slope_spec.find('~');
        if (tilde == std::string::npos) {
            std::cerr << "--slope expects value~axis\n";
            return 2;
        }
        const std::string v = alias_column(slope_spec.substr(0, tilde));
        const std::string b = alias_column(slope_spec.substr(tilde + 1));
        std::cout << "log-log slope of median(" << v << ") vs " << b << ": "
                  << fit_loglog_slope(table, v, b) << "\n";
        return 0;
    }
    const std::string v = alias_column(value);
    const std::string b = alias_column(by);
    auto groups = group_values(table, v, b);
    std::cout << b << "  n  median  q25  q75  (" << v << ")\n";
    for (auto& [key, vals] : groups) {
        std::cout << key << "  " << vals.size() << "  " << median(vals) << "  "
                  << quantile(vals, 0.25) << "  " << quantile(vals, 0.75) << "\n";
    }
    return 0;
}

int cmd_verify(const std::string& json_out) {
    verify::AcceptanceSummary summary = verify::run_acceptance(std::cout);
    if (!json_out.empty()) {
        json j = json::array();
        for (const auto& r : summary.results)
            j.push_back({{"id", r.id},
                         {"name", r.name},
                         {"passed", r.passed},
                         {"detail", r.detail},
                         {"wall_ms", r.wall_ms}});
        write_json(json_out, j);
    }
    return summary.all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral toolkit for orthogonally decomposable tensors"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "write a signal(+noise) instance to disk");
    std::string g_kind = "random", g_dims = "10,10,10", g_lambda_kind = "equal";
    std::string g_noise = "none", g_out = "instance";
    int g_rank = 2;
    double g_lambda = 10.0, g_ratio = 0.8, g_sigma = 1.0, g_df = 9.0, g_spike = 1.0;
    bool g_allow_heavy = false;
    std::uint64_t g_seed = 1;
    gen->add_option("--kind", g_kind, "random | worked_example")->check(CLI::IsMember({"random", "worked_example"}));
    gen->add_option("--dims", g_dims, "comma-separated dimensions (worked_example uses the first)");
    gen->add_option("--rank", g_rank, "number of components");
    gen->add_option("--lambda-kind", g_lambda_kind)->check(CLI::IsMember({"equal", "geometric"}));
    gen->add_option("--lambda", g_lambda, "largest weight");
    gen->add_option("--lambda-ratio", g_ratio, "geometric decay");
    gen->add_option("--noise", g_noise)->check(CLI::IsMember({"none", "gaussian", "student_t", "rank_one_spike"}));
    gen->add_option("--sigma", g_sigma);
    gen->add_option("--df", g_df);
    gen->add_flag("--allow-heavy", g_allow_heavy, "permit 4 < df <= 8");
    gen->add_option("--spike", g_spike, "rank-one spike weight");
    gen->add_option("--seed", g_seed);
    gen->add_option("--out", g_out, "output directory");

    // decompose
    auto* dec = app.add_subcommand("decompose", "run a decomposition pipeline on a tensor file");
    std::string d_input, d_truth, d_out, d_algorithm = "power_deflation", d_init = "alg3";
    int d_rank = 1, d_L = -1, d_iters = -1;
    double d_angle = 0.25;
    std::uint64_t d_seed = 1;
    bool d_traces = false;
    dec->add_option("--input", d_input, "tensor file (.odct)")->required();
    dec->add_option("--rank", d_rank)->required();
    dec->add_option("--algorithm", d_algorithm)->check(CLI::IsMember({"noiseless", "power_deflation"}));
    dec->add_option("--init", d_init)
        ->check(CLI::IsMember({"oracle", "perturbed_oracle", "random", "alg3", "alg4"}));
    dec->add_option("--truth", d_truth, "truth decomposition JSON (enables matching report)");
    dec->add_option("--angle", d_angle, "perturbed-oracle sin angle");
    dec->add_option("--L", d_L, "slicing trials (default 2 r^2 log d)");
    dec->add_option("--iters", d_iters, "power iteration budget");
    dec->add_option("--seed", d_seed);
    dec->add_option("--out", d_out, "write the estimate JSON here");
    dec->add_flag("--traces", d_traces, "include iteration traces in the estimate JSON");

    // experiment
    auto* exp = app.add_subcommand("experiment", "run a Monte Carlo experiment config");
    std::string e_config, e_csv, e_summary;
    std::uint64_t e_seed = 0;
    bool e_has_seed = false;
    exp->add_option("--config", e_config, "experiment config JSON")->required();
    exp->add_option("--seed", e_seed)->each([&](const std::string&) { e_has_seed = true; });
    exp->add_option("--csv", e_csv, "override the CSV output path");
    exp->add_option("--summary", e_summary, "override the summary output path");

    // report
    auto* rep = app.add_subcommand("report", "aggregate a trials CSV");
    std::string r_csv, r_value = "max_mode_sin", r_by = "lambda_target", r_slope;
    rep->add_option("--csv", r_csv)->required();
    rep->add_option("--value", r_value, "metric column");
    rep->add_option("--by", r_by, "grouping column");
    rep->add_option("--slope", r_slope, "value~axis log-log slope fit (aliases: error, lambda)");

    // verify
    auto* ver = app.add_subcommand("verify", "run the acceptance suite");
    std::string v_json;
    ver->add_option("--json", v_json, "also write results as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_generate(g_kind, g_dims, g_rank, g_lambda_kind, g_lambda, g_ratio, g_noise,
                                g_sigma, g_df, g_allow_heavy, g_spike, g_seed, g_out);
        if (dec->parsed())
            return cmd_decompose(d_input, d_rank, d_algorithm, d_init, d_truth, d_angle, d_L,
                                 d_iters, d_seed, d_out, d_traces);
        if (exp->parsed()) return cmd_experiment(e_config, e_seed, e_has_seed, e_csv, e_summary);
        if (rep->parsed()) return cmd_report(r_csv, r_value, r_by, r_slope);
        if (ver->parsed()) return cmd_verify(v_json);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
