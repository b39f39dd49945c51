#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "odeco/analysis.hpp"
#include "odeco/decompose.hpp"
#include "odeco/io.hpp"
#include "odeco/noise.hpp"
#include "odeco/odeco.hpp"
#include "odeco/parallel.hpp"
#include "odeco/pipeline.hpp"

namespace odeco {

// ---------------------------------------------------------------------------
// Experiment description. The JSON schema is versioned and round-trips
// losslessly; the config fingerprint keys every output file.
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    static constexpr int schema_version = 1;

    std::string name = "experiment";
    std::uint64_t root_seed = 1;

    // instance
    enum class Instance { random_odeco, worked_example };
    Instance instance = Instance::random_odeco;
    std::vector<int> dims = {10, 10, 10};
    int rank = 2;
    std::string lambda_kind = "equal";  // equal | geometric | explicit
    double lambda_value = 10.0;
    double lambda_ratio = 0.8;
    std::vector<double> lambda_values;
    bool lambda_times_eps1 = false;  // lambda grid multiplies the realized eps1

    // noise
    std::string noise_family = "none";  // none | gaussian | student_t | rank_one_spike
    double noise_sigma = 1.0;
    double noise_df = 9.0;
    bool noise_allow_heavy = false;
    double noise_lambda = 1.0;
    bool spike_aligned = true;

    // pipeline
    std::string algorithm = "power_deflation";  // noiseless | power_deflation
    std::string initializer = "oracle";         // oracle | perturbed_oracle | random | alg3 | alg4
    double init_angle = 0.25;
    int slice_count = -1;  // L; default 2 r^2 log d
    int iters = -1;        // power iteration budget; default schedule
    int t_inner = 30;
    int max_outer_rounds = 10;

    // analyses beyond matching
    bool analyze_perturbation = false;
    bool analyze_first_order = false;
    bool analyze_asymptotic = false;

    // sweep axes; empty grid means "use the instance value"
    std::vector<double> lambda_grid;
    std::vector<int> d_grid;
    long seed_begin = 0;
    long seed_count = 1;

    // outputs
    std::string csv_path = "trials.csv";
    std::string summary_path = "summary.json";
    bool write_traces = false;

    void validate() const {
        if (seed_count < 1) throw std::invalid_argument("config: seed range must be nonempty");
        if (rank < 1) throw std::invalid_argument("config: rank must be positive");
        if (dims.size() < 2) throw std::invalid_argument("config: need order >= 2");
        if (lambda_times_eps1 && noise_family == "none")
            throw std::invalid_argument("config: lambda_times_eps1 requires noise");
        if (lambda_times_eps1 && lambda_kind != "equal")
            throw std::invalid_argument("config: lambda_times_eps1 implies equal weights");
    }
};

inline void to_json(json& j, const ExperimentConfig& c) {
    j = json{{"schema_version", ExperimentConfig::schema_version},
             {"name", c.name},
             {"root_seed", c.root_seed},
             {"instance",
              {{"type", c.instance == ExperimentConfig::Instance::worked_example ? "worked_example" : "random_odeco"},
               {"dims", c.dims},
               {"rank", c.rank},
               {"lambda",
                {{"kind", c.lambda_kind},
                 {"value", c.lambda_value},
                 {"ratio", c.lambda_ratio},
                 {"values", c.lambda_values}}},
               {"lambda_times_eps1", c.lambda_times_eps1}}},
             {"noise",
              {{"family", c.noise_family},
               {"sigma", c.noise_sigma},
               {"df", c.noise_df},
               {"allow_heavy", c.noise_allow_heavy},
               {"lambda_noise", c.noise_lambda},
               {"spike_aligned", c.spike_aligned}}},
             {"pipeline",
              {{"algorithm", c.algorithm},
               {"initializer", c.initializer},
               {"angle", c.init_angle},
               {"L", c.slice_count},
               {"iters", c.iters},
               {"t_inner", c.t_inner},
               {"max_outer_rounds", c.max_outer_rounds},
               {"analyze_perturbation", c.analyze_perturbation},
               {"analyze_first_order", c.analyze_first_order},
               {"analyze_asymptotic", c.analyze_asymptotic}}},
             {"sweep",
              {{"lambda_grid", c.lambda_grid},
               {"d_grid", c.d_grid},
               {"seed_begin", c.seed_begin},
               {"seed_count", c.seed_count}}},
             {"output",
              {{"csv", c.csv_path}, {"summary", c.summary_path}, {"traces", c.write_traces}}}};
}

inline void from_json(const json& j, ExperimentConfig& c) {
    if (j.at("schema_version").get<int>() != ExperimentConfig::schema_version)
        throw std::invalid_argument("config: unsupported schema_version");
    c.name = j.at("name").get<std::string>();
    c.root_seed = j.at("root_seed").get<std::uint64_t>();
    const json& inst = j.at("instance");
    c.instance = inst.at("type").get<std::string>() == "worked_example"
                     ? ExperimentConfig::Instance::worked_example
                     : ExperimentConfig::Instance::random_odeco;
    c.dims = inst.at("dims").get<std::vector<int>>();
    c.rank = inst.at("rank").get<int>();
    c.lambda_kind = inst.at("lambda").at("kind").get<std::string>();
    c.lambda_value = inst.at("lambda").at("value").get<double>();
    c.lambda_ratio = inst.at("lambda").at("ratio").get<double>();
    c.lambda_values = inst.at("lambda").at("values").get<std::vector<double>>();
    c.lambda_times_eps1 = inst.at("lambda_times_eps1").get<bool>();
    const json& noise = j.at("noise");
    c.noise_family = noise.at("family").get<std::string>();
    c.noise_sigma = noise.at("sigma").get<double>();
    c.noise_df = noise.at("df").get<double>();
    c.noise_allow_heavy = noise.at("allow_heavy").get<bool>();
    c.noise_lambda = noise.at("lambda_noise").get<double>();
    c.spike_aligned = noise.at("spike_aligned").get<bool>();
    const json& pl = j.at("pipeline");
    c.algorithm = pl.at("algorithm").get<std::string>();
    c.initializer = pl.at("initializer").get<std::string>();
    c.init_angle = pl.at("angle").get<double>();
    c.slice_count = pl.at("L").get<int>();
    c.iters = pl.at("iters").get<int>();
    c.t_inner = pl.at("t_inner").get<int>();
    c.max_outer_rounds = pl.at("max_outer_rounds").get<int>();
    c.analyze_perturbation = pl.at("analyze_perturbation").get<bool>();
    c.analyze_first_order = pl.at("analyze_first_order").get<bool>();
    c.analyze_asymptotic = pl.at("analyze_asymptotic").get<bool>();
    const json& sw = j.at("sweep");
    c.lambda_grid = sw.at("lambda_grid").get<std::vector<double>>();
    c.d_grid = sw.at("d_grid").get<std::vector<int>>();
    c.seed_begin = sw.at("seed_begin").get<long>();
    c.seed_count = sw.at("seed_count").get<long>();
    const json& out = j.at("output");
    c.csv_path = out.at("csv").get<std::string>();
    c.summary_path = out.at("summary").get<std::string>();
    c.write_traces = out.at("traces").get<bool>();
    c.validate();
}

// FNV-1a over the canonical JSON dump; stable across runs and platforms.
inline std::uint64_t config_fingerprint(const ExperimentConfig& c) {
    const std::string dump = json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Trial results. One report per sweep cell; one row per (component, mode).
// Missing metrics stay NaN and serialize as empty CSV fields with the row
// status carrying the reason.
// ---------------------------------------------------------------------------

struct TrialRow {
    int component = 0;  // 0-based
    int mode = 0;       // 1-based
    double sin_angle = std::numeric_limits<double>::quiet_NaN();
    double max_mode_sin = std::numeric_limits<double>::quiet_NaN();
    double lambda_err = std::numeric_limits<double>::quiet_NaN();
    double lambda_hat = std::numeric_limits<double>::quiet_NaN();
    double init_max_sin = std::numeric_limits<double>::quiet_NaN();
    double sin_ratio_eps1 = std::numeric_limits<double>::quiet_NaN();  // max sin * lambda / eps1
    double fo_residual = std::numeric_limits<double>::quiet_NaN();
    double fo_env_pert = std::numeric_limits<double>::quiet_NaN();
    double fo_env_iter = std::numeric_limits<double>::quiet_NaN();
    double overlap_stat = std::numeric_limits<double>::quiet_NaN();
    double sigma_sq = std::numeric_limits<double>::quiet_NaN();
    double dk_bound = std::numeric_limits<double>::quiet_NaN();
    double matrix_sin = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
};

struct TrialReport {
    std::size_t cell_index = 0;
    int d = 0;
    double lambda_target = 0.0;  // grid value (ratio when lambda_times_eps1)
    double lambda_max = 0.0;     // realized lambda_1
    long seed = 0;
    double eps0 = std::numeric_limits<double>::quiet_NaN();
    double eps1 = std::numeric_limits<double>::quiet_NaN();
    double eps2 = std::numeric_limits<double>::quiet_NaN();
    double enorm_est = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;
    std::string status = "ok";   // ok | failed
    std::string reason = "";     // reason code when not ok
    std::vector<TrialRow> rows;
};

namespace detail {

inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

// Executes every sweep x seed cell. The per-cell RNG stream is derived from
// (root seed, cell index), so repeated runs and any execution order give
// bit-identical outputs.
inline std::vector<TrialReport> run_experiment(const ExperimentConfig& cfg, int threads = -1) {
    cfg.validate();
    const std::vector<double> lgrid = cfg.lambda_grid.empty() ? std::vector<double>{cfg.lambda_value}
                                                              : cfg.lambda_grid;
    const std::vector<int> dgrid = cfg.d_grid.empty() ? std::vector<int>{0} : cfg.d_grid;
    const std::size_t cells =
        lgrid.size() * dgrid.size() * static_cast<std::size_t>(cfg.seed_count);
    std::vector<TrialReport> reports(cells);

    parallel_for(cells, [&](std::size_t cell) {
        const auto t0 = std::chrono::steady_clock::now();
        TrialReport& rep = reports[cell];
        rep.cell_index = cell;
        std::size_t rest = cell;
        const std::size_t li = rest % lgrid.size();
        rest /= lgrid.size();
        const std::size_t di = rest % dgrid.size();
        rest /= dgrid.size();
        rep.seed = cfg.seed_begin + static_cast<long>(rest);
        rep.lambda_target = lgrid[li];

        std::vector<int> dims = cfg.dims;
        if (dgrid[di] > 0) dims.assign(dims.size(), dgrid[di]);
        rep.d = dims[0];

        const std::uint64_t cell_seed = derive_stream(cfg.root_seed, cell);
        try {
            // --- instance -------------------------------------------------
            OdecoDecomposition truth;
            DenseTensor t;
            if (cfg.instance == ExperimentConfig::Instance::worked_example) {
                WorkedExample ex = worked_example(dims[0], lgrid[li]);
                truth = ex.truth;
                t = std::move(ex.t);
            } else {
                LambdaSpec spec = LambdaSpec::equal(1.0);
                if (!cfg.lambda_times_eps1) {
                    if (cfg.lambda_kind == "equal") spec = LambdaSpec::equal(lgrid[li]);
                    else if (cfg.lambda_kind == "geometric") spec = LambdaSpec::geometric(lgrid[li], cfg.lambda_ratio);
                    else spec = LambdaSpec::explicit_list(cfg.lambda_values);
                }
                truth = random_odeco(dims, cfg.rank, spec, derive_stream(cell_seed, 1));
            }

            // --- noise ----------------------------------------------------
            DenseTensor e(dims);
            bool have_noise = cfg.noise_family != "none";
            if (have_noise) {
                NoiseSpec ns;
                if (cfg.noise_family == "gaussian")
                    ns = NoiseSpec::gaussian(cfg.noise_sigma, derive_stream(cell_seed, 2));
                else if (cfg.noise_family == "student_t")
                    ns = NoiseSpec::student_t(cfg.noise_df, derive_stream(cell_seed, 2), cfg.noise_allow_heavy);
                else if (cfg.noise_family == "rank_one_spike")
                    ns = NoiseSpec::rank_one_spike(cfg.noise_lambda, derive_stream(cell_seed, 2));
                else
                    throw std::invalid_argument("unknown noise family " + cfg.noise_family);
                e = sample_noise(dims, ns, cfg.spike_aligned ? &truth : nullptr);
            }

            NoiseDiagnostics diag;
            if (have_noise) {
                diag = error_functionals(e, truth, derive_stream(cell_seed, 3));
                rep.eps0 = diag.eps0;
                rep.eps1 = diag.eps1;
                rep.eps2 = diag.eps2;
                rep.enorm_est = diag.spectral_norm_est;
            }
            if (cfg.lambda_times_eps1) {
                const double lambda = lgrid[li] * diag.eps1;
                truth.lambdas.assign(static_cast<std::size_t>(truth.r), lambda);
            }
            if (cfg.instance != ExperimentConfig::Instance::worked_example) t = synthesize(truth);
            rep.lambda_max = truth.lambdas.front();
            DenseTensor x = have_noise ? add(t, e) : t;

            // --- pipeline ---------------------------------------------------
            PipelineRun run;
            if (cfg.algorithm == "noiseless") {
                FixedPointConfig fp;
                fp.t_inner = cfg.t_inner;
                fp.max_outer_rounds = cfg.max_outer_rounds;
                run.estimate = noiseless_decompose(x, cfg.rank, fp, derive_stream(cell_seed, 4));
            } else if (cfg.algorithm == "power_deflation") {
                Initializer init;
                const std::uint64_t iseed = derive_stream(cell_seed, 4);
                if (cfg.initializer == "oracle") init = make_oracle_initializer(truth);
                else if (cfg.initializer == "perturbed_oracle")
                    init = make_perturbed_oracle_initializer(truth, cfg.init_angle, iseed);
                else if (cfg.initializer == "random") init = make_random_initializer(iseed);
                else if (cfg.initializer == "alg3")
                    init = make_general_slicing_initializer(cfg.rank, cfg.slice_count, iseed);
                else if (cfg.initializer == "alg4")
                    init = make_incoherent_slicing_initializer(cfg.rank, cfg.slice_count, iseed);
                else
                    throw std::invalid_argument("unknown initializer " + cfg.initializer);
                run = run_deflation_pipeline(x, cfg.rank, init,
                                             cfg.iters > 0 ? cfg.iters
                                                           : default_power_iters(x, have_noise ? diag.eps1 : -1.0));
            } else {
                throw std::invalid_argument("unknown algorithm " + cfg.algorithm);
            }
            const EstimatedDecomposition& est = run.estimate;

            // --- analyses ---------------------------------------------------
            ComponentMatch match = match_components(truth, est, MatchPolicy::pad);
            FirstOrderReport fo;
            if (cfg.analyze_first_order) {
                FirstOrderOptions fopts;
                fopts.match = &match;
                fopts.enorm_estimate = have_noise ? diag.spectral_norm_est : 0.0;
                fopts.eps1 = have_noise ? diag.eps1 : 0.0;
                fopts.eps2 = have_noise ? diag.eps2 : 0.0;
                fo = first_order_residual(truth, est, e, fopts);
            }
            PerturbationReport pert;
            if (cfg.analyze_perturbation) {
                PerturbationOptions popts;
                popts.match = &match;
                popts.enorm_estimate = have_noise ? diag.spectral_norm_est : 0.0;
                pert = perturbation_report(truth, est, e, popts);
            }
            AsymptoticStat asy;
            if (cfg.analyze_asymptotic) {
                AsymptoticOptions aopts;
                aopts.match = &match;
                asy = asymptotic_statistics(truth, est, e, {}, aopts);
            }

            const int p = static_cast<int>(dims.size());
            for (int j = 0; j < truth.r; ++j) {
                const int m = match.permutation[static_cast<std::size_t>(j)];
                double init_sin = std::numeric_limits<double>::quiet_NaN();
                if (m >= 0 && m < static_cast<int>(run.inits.size()) &&
                    !run.inits[static_cast<std::size_t>(m)].empty()) {
                    init_sin = 0.0;
                    for (int q = 1; q <= p; ++q)
                        init_sin = std::max(init_sin,
                                            sin_angle(truth.component(j, q),
                                                      run.inits[static_cast<std::size_t>(m)][static_cast<std::size_t>(q - 1)]));
                }
                for (int q = 1; q <= p; ++q) {
                    TrialRow row;
                    row.component = j;
                    row.mode = q;
                    row.sin_angle = match.sin_angles[static_cast<std::size_t>(j)][static_cast<std::size_t>(q - 1)];
                    row.max_mode_sin = match.max_sin[static_cast<std::size_t>(j)];
                    row.lambda_err = match.lambda_errors[static_cast<std::size_t>(j)];
                    if (m >= 0) row.lambda_hat = est.lambdas_hat[static_cast<std::size_t>(m)];
                    row.init_max_sin = init_sin;
                    if (have_noise && diag.eps1 > 0.0)
                        row.sin_ratio_eps1 = row.max_mode_sin * truth.lambdas[static_cast<std::size_t>(j)] / diag.eps1;
                    if (cfg.analyze_first_order && j < static_cast<int>(fo.residuals.size())) {
                        row.fo_residual = fo.residuals[static_cast<std::size_t>(j)][static_cast<std::size_t>(q - 1)];
                        row.fo_env_pert = fo.envelope_perturbation[static_cast<std::size_t>(j)];
                        row.fo_env_iter = fo.envelope_iteration[static_cast<std::size_t>(j)];
                    }
                    if (cfg.analyze_perturbation && j < static_cast<int>(pert.components.size()) &&
                        !pert.components[static_cast<std::size_t>(j)].dk_bound.empty()) {
                        row.dk_bound = pert.components[static_cast<std::size_t>(j)].dk_bound[static_cast<std::size_t>(q - 1)];
                        row.matrix_sin = pert.components[static_cast<std::size_t>(j)].matrix_sin[static_cast<std::size_t>(q - 1)];
                    }
                    if (cfg.analyze_asymptotic && j < static_cast<int>(asy.overlap_stat.size())) {
                        row.overlap_stat = asy.overlap_stat[static_cast<std::size_t>(j)][static_cast<std::size_t>(q - 1)];
                        row.sigma_sq = asy.sigma_sq[static_cast<std::size_t>(j)][static_cast<std::size_t>(q - 1)];
                    }
                    row.converged = m >= 0 && m < static_cast<int>(est.traces.size()) &&
                                    est.traces[static_cast<std::size_t>(m)].converged;
                    rep.rows.push_back(std::move(row));
                }
            }
        } catch (const std::exception& err) {
            rep.status = "failed";
            rep.reason = err.what();
            rep.rows.clear();
        }
        rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }, threads);
    return reports;
}

// Frozen CSV schema, version 1, RFC 4180 (CRLF, comma separated).
inline const char* csv_header() {
    return "schema_version,config_hash,cell_index,d,lambda_target,lambda_max,seed,component,mode,"
           "sin_angle,max_mode_sin,lambda_err,lambda_hat,init_max_sin,sin_ratio_eps1,"
           "fo_residual,fo_env_pert,fo_env_iter,overlap_stat,sigma_sq,dk_bound,matrix_sin,"
           "eps0,eps1,eps2,enorm_est,converged,status,reason";
}

inline std::string csv_body(const ExperimentConfig& cfg, const std::vector<TrialReport>& reports) {
    std::ostringstream out;
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(config_fingerprint(cfg)));
    out << csv_header() << "\r\n";
    using detail::fmt_double;
    for (const TrialReport& rep : reports) {
        auto emit_common = [&](const TrialRow* row) {
            out << ExperimentConfig::schema_version << ',' << hash << ',' << rep.cell_index << ','
                << rep.d << ',' << fmt_double(rep.lambda_target) << ',' << fmt_double(rep.lambda_max)
                << ',' << rep.seed << ',';
            if (row) {
                out << row->component << ',' << row->mode << ',' << fmt_double(row->sin_angle) << ','
                    << fmt_double(row->max_mode_sin) << ',' << fmt_double(row->lambda_err) << ','
                    << fmt_double(row->lambda_hat) << ',' << fmt_double(row->init_max_sin) << ','
                    << fmt_double(row->sin_ratio_eps1) << ',' << fmt_double(row->fo_residual) << ','
                    << fmt_double(row->fo_env_pert) << ',' << fmt_double(row->fo_env_iter) << ','
                    << fmt_double(row->overlap_stat) << ',' << fmt_double(row->sigma_sq) << ','
                    << fmt_double(row->dk_bound) << ',' << fmt_double(row->matrix_sin) << ',';
            } else {
                out << ",,,,,,,,,,,,,,";
            }
            out << fmt_double(rep.eps0) << ',' << fmt_double(rep.eps1) << ',' << fmt_double(rep.eps2)
                << ',' << fmt_double(rep.enorm_est) << ',' << (row && row->converged ? "1" : "0")
                << ',' << rep.status << ',' << rep.reason << "\r\n";
        };
        if (rep.rows.empty())
            emit_common(nullptr);
        else
            for (const TrialRow& row : rep.rows) emit_common(&row);
    }
    return out.str();
}

inline void write_results(const ExperimentConfig& cfg, const std::vector<TrialReport>& reports) {
    {
        std::ofstream f(cfg.csv_path, std::ios::binary);
        if (!f) throw std::runtime_error("write_results: cannot open " + cfg.csv_path);
        f << csv_body(cfg, reports);
    }
    json summary;
    summary["schema_version"] = ExperimentConfig::schema_version;
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(config_fingerprint(cfg)));
    summary["config_hash"] = hash;
    summary["config"] = cfg;
    summary["cells"] = reports.size();
    std::size_t failed = 0;
    double wall = 0.0;
    for (const TrialReport& r : reports) {
        if (r.status != "ok") ++failed;
        wall += r.wall_ms;
    }
    summary["failed_cells"] = failed;
    summary["total_wall_ms"] = wall;
    write_json(cfg.summary_path, summary);
}

// ---------------------------------------------------------------------------
// Lightweight aggregation over the frozen CSV: grouped medians/quantiles and
// log-log slope fits for threshold experiments.
// ---------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        throw std::invalid_argument("unknown CSV column " + name);
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_csv: cannot open " + path);
    CsvTable table;
    std::string line;
    bool header = true;
    while (std::getline(f, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        fields.push_back(cur);
        if (header) {
            table.columns = std::move(fields);
            header = false;
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    return table;
}

inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double pos = q * (static_cast<double>(values.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - w) + values[hi] * w;
}

inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

// Grouped quantiles of `value` keyed by the string value of `by`.
inline std::map<std::string, std::vector<double>> group_values(const CsvTable& t,
                                                               const std::string& value,
                                                               const std::string& by) {
    const int vi = t.column_index(value);
    const int bi = t.column_index(by);
    std::map<std::string, std::vector<double>> groups;
    for (const auto& row : t.rows) {
        const std::string& raw = row[static_cast<std::size_t>(vi)];
        if (raw.empty()) continue;
        groups[row[static_cast<std::size_t>(bi)]].push_back(std::stod(raw));
    }
    return groups;
}

// Least-squares slope of log(median value) against log(group key).
inline double fit_loglog_slope(const CsvTable& t, const std::string& value, const std::string& by) {
    auto groups = group_values(t, value, by);
    std::vector<double> xs, ys;
    for (auto& [key, vals] : groups) {
        const double x = std::stod(key);
        const double y = median(vals);
        if (x > 0.0 && y > 0.0) {
            xs.push_back(std::log(x));
            ys.push_back(std::log(y));
        }
    }
    if (xs.size() < 2) throw std::invalid_argument("fit_loglog_slope: need at least two groups");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    return num / den;
}

}  // namespace odeco
