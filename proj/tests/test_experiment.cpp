#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "odeco/experiment.hpp"

using namespace odeco;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.name = "tiny";
    cfg.root_seed = 7;
    cfg.dims = {6, 6, 6};
    cfg.rank = 2;
    cfg.lambda_kind = "equal";
    cfg.lambda_value = 5.0;
    cfg.noise_family = "none";
    cfg.algorithm = "power_deflation";
    cfg.initializer = "oracle";
    cfg.seed_count = 1;
    return cfg;
}

}  // namespace

TEST_CASE("config JSON round-trips losslessly") {
    ExperimentConfig cfg = tiny_config();
    cfg.lambda_grid = {2.0, 4.0};
    cfg.analyze_perturbation = true;
    json j = cfg;
    ExperimentConfig back = j.get<ExperimentConfig>();
    REQUIRE(json(back).dump() == j.dump());
    REQUIRE(config_fingerprint(back) == config_fingerprint(cfg));
    cfg.lambda_value += 1.0;
    REQUIRE(config_fingerprint(back) != config_fingerprint(cfg));
}

TEST_CASE("single exact cell reports zero errors") {
    ExperimentConfig cfg = tiny_config();
    std::vector<TrialReport> reports = run_experiment(cfg, 1);
    REQUIRE(reports.size() == 1);
    REQUIRE(reports[0].status == "ok");
    REQUIRE(reports[0].rows.size() == 2 * 3);  // components x modes
    for (const TrialRow& row : reports[0].rows) {
        REQUIRE(row.sin_angle <= 1e-10);
        REQUIRE(row.lambda_err <= 1e-9);
        REQUIRE(row.converged);
    }
}

TEST_CASE("per-trial failures are recorded without aborting the sweep") {
    ExperimentConfig cfg = tiny_config();
    cfg.algorithm = "power_deflation";
    cfg.initializer = "alg4";  // requires order >= 4, always fails at p=3
    cfg.seed_count = 2;
    std::vector<TrialReport> reports = run_experiment(cfg, 1);
    REQUIRE(reports.size() == 2);
    for (const TrialReport& rep : reports) {
        // the pipeline records the init failure per component; rows survive
        REQUIRE(rep.status == "ok");
        for (const TrialRow& row : rep.rows) REQUIRE_FALSE(row.converged);
    }
}

TEST_CASE("repeated runs and any execution order give byte-identical CSV") {
    ExperimentConfig cfg = tiny_config();
    cfg.noise_family = "gaussian";
    cfg.noise_sigma = 0.1;
    cfg.initializer = "perturbed_oracle";
    cfg.lambda_grid = {4.0, 8.0};
    cfg.seed_count = 3;
    const std::string csv1 = csv_body(cfg, run_experiment(cfg, 1));
    const std::string csv2 = csv_body(cfg, run_experiment(cfg, 2));
    const std::string csv3 = csv_body(cfg, run_experiment(cfg, 3));
    REQUIRE(csv1 == csv2);
    REQUIRE(csv1 == csv3);
    REQUIRE(csv1.find("\r\n") != std::string::npos);
}

TEST_CASE("sweep emits one row per (lambda, seed, component, mode) and aggregates") {
    namespace fs = std::filesystem;
    ExperimentConfig cfg = tiny_config();
    cfg.noise_family = "gaussian";
    cfg.noise_sigma = 0.05;
    cfg.initializer = "perturbed_oracle";
    cfg.lambda_grid = {2.0, 4.0, 8.0};
    cfg.seed_count = 4;
    cfg.csv_path = (fs::temp_directory_path() / "odeco_trials.csv").string();
    cfg.summary_path = (fs::temp_directory_path() / "odeco_summary.json").string();
    std::vector<TrialReport> reports = run_experiment(cfg);
    write_results(cfg, reports);

    CsvTable table = read_csv(cfg.csv_path);
    REQUIRE(table.rows.size() == 3 * 4 * 2 * 3);
    REQUIRE(table.columns.front() == "schema_version");

    auto groups = group_values(table, "max_mode_sin", "lambda_target");
    REQUIRE(groups.size() == 3);
    // louder signal, smaller error: slope of log(median sin) vs log(lambda) is negative
    const double slope = fit_loglog_slope(table, "max_mode_sin", "lambda_target");
    REQUIRE(slope < -0.5);

    json summary = read_json(cfg.summary_path);
    REQUIRE(summary["cells"] == 12);
    REQUIRE(summary["failed_cells"] == 0);
    fs::remove(cfg.csv_path);
    fs::remove(cfg.summary_path);
}

TEST_CASE("worked_example instances flow through the harness") {
    ExperimentConfig cfg = tiny_config();
    cfg.instance = ExperimentConfig::Instance::worked_example;
    cfg.dims = {11, 11, 11};
    cfg.rank = 10;
    cfg.lambda_value = 10.0;
    cfg.algorithm = "power_deflation";
    cfg.initializer = "oracle";
    std::vector<TrialReport> reports = run_experiment(cfg, 1);
    REQUIRE(reports[0].status == "ok");
    for (const TrialRow& row : reports[0].rows) REQUIRE(row.sin_angle <= 1e-8);
}

TEST_CASE("d_grid sweeps replace every mode dimension") {
    ExperimentConfig cfg = tiny_config();
    cfg.d_grid = {5, 8};
    cfg.seed_count = 1;
    std::vector<TrialReport> reports = run_experiment(cfg, 1);
    REQUIRE(reports.size() == 2);
    REQUIRE(reports[0].d == 5);
    REQUIRE(reports[1].d == 8);
    for (const TrialReport& rep : reports) REQUIRE(rep.status == "ok");
}

TEST_CASE("explicit weight lists flow through the config") {
    ExperimentConfig cfg = tiny_config();
    cfg.lambda_kind = "explicit";
    cfg.lambda_values = {9.0, 4.0};
    std::vector<TrialReport> reports = run_experiment(cfg, 1);
    REQUIRE(reports[0].status == "ok");
    REQUIRE(reports[0].lambda_max == 9.0);
}

TEST_CASE("config validation rejects inconsistent lambda_times_eps1 setups") {
    ExperimentConfig cfg = tiny_config();
    cfg.lambda_times_eps1 = true;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);  // no noise
    cfg.noise_family = "gaussian";
    cfg.lambda_kind = "geometric";
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);  // non-equal weights
    cfg.lambda_kind = "equal";
    REQUIRE_NOTHROW(cfg.validate());
}
