#include "sfl/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

namespace sfl {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kTrackPoints = 64;

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

LambdaRecord evaluate_lambda(const ExperimentConfig& cfg, const OperatorPath& path, double lambda, bool with_mu) {
    LambdaRecord rec;
    rec.lambda = lambda;
    try {
        const XiAc xi = xi_ac(path, lambda, {cfg.r_nodes, cfg.xi_tolerance, cfg.edge_margin});
        const ScatteringSample s = path_scattering_matrix(path, lambda, cfg.edge_margin);
        const EigenphasePath track = eigenphase_track(path, lambda, uniform_grid(kTrackPoints), cfg.edge_margin);
        rec.xi_ac = xi.value;
        rec.xi_ac_err = xi.quad_error;
        rec.s = s.s;
        rec.det = s.det;
        rec.theta = track.theta.col(track.theta.cols() - 1);
        if (rec.theta(0) > rec.theta(1)) std::swap(rec.theta(0), rec.theta(1));
        rec.unitarity_resid = s.unitarity_residual;
        if (with_mu) {
            for (int k = 0; k < cfg.theta_points; ++k)
                rec.mu.push_back(mu_from_phases(rec.theta, kTwoPi * (k + 0.5) / cfg.theta_points).value);
            rec.mu_integral = mu_integral_grid(rec.theta, cfg.theta_points);
        }
        if (xi.flagged) {
            rec.status = RecordStatus::flagged;
            rec.message = "xi_ac quadrature error above tolerance";
        } else if (s.unitarity_residual > 1e-9) {
            rec.status = RecordStatus::flagged;
            rec.message = "unitarity residual above 1e-9";
        } else if (std::abs(s.det - std::exp(Complex(0.0, -kTwoPi * xi.value))) > 1e-6) {
            rec.status = RecordStatus::flagged;
            rec.message = "det S differs from exp(-2 pi i xi_ac) by more than 1e-6";
        } else if (std::abs(xi.value + rec.theta.sum() / kTwoPi) > 1e-6) {
            rec.status = RecordStatus::flagged;
            rec.message = "xi_ac differs from the eigenphase sum by more than 1e-6";
        } else if (track.degenerate_crossing) {
            rec.status = RecordStatus::flagged;
            rec.message = "eigenphase matching ambiguous";
        }
    } catch (const DomainError& e) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rec.xi_ac = rec.xi_ac_err = rec.unitarity_resid = rec.mu_integral = nan;
        rec.det = Complex(nan, nan);
        rec.s.setConstant(Complex(nan, nan));
        rec.theta.setConstant(nan);
        rec.mu.clear();
        rec.status = dynamic_cast<const BandEdgeError*>(&e) ? RecordStatus::band_edge : RecordStatus::resonance;
        rec.message = e.what();
    }
    return rec;
}

std::string resolve_output(const ExperimentConfig& cfg, const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
    return cfg.output_path;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw ConfigError("cannot open output file " + path);
    file << text;
    if (!file) throw ConfigError("failed writing output file " + path);
}

json config_echo(const ExperimentConfig& cfg) {
    json vertices = json::array();
    for (const auto& v : cfg.vertices) vertices.push_back(potential_to_json(v));
    return {{"input", cfg.echo},
            {"vertices", vertices},
            {"band_grid", {{"min", cfg.band_grid.min}, {"max", cfg.band_grid.max}, {"points", cfg.band_grid.points}}},
            {"edge_margin", cfg.edge_margin},
            {"r_nodes", cfg.r_nodes},
            {"texp_steps", cfg.texp_steps},
            {"truncation_N", cfg.truncation_N},
            {"theta_points", cfg.theta_points},
            {"xi_tolerance", cfg.xi_tolerance}};
}

json record_json(const LambdaRecord& r, bool with_matrix) {
    json out = {{"lambda", r.lambda},
                {"xi_ac", number_or_null(r.xi_ac)},
                {"quad_error", number_or_null(r.xi_ac_err)},
                {"det_re", number_or_null(r.det.real())},
                {"det_im", number_or_null(r.det.imag())},
                {"eigenphases", {number_or_null(r.theta(0)), number_or_null(r.theta(1))}},
                {"unitarity_resid", number_or_null(r.unitarity_resid)},
                {"status", status_name(r.status)}};
    if (!r.message.empty()) out["message"] = r.message;
    if (with_matrix) {
        json s = json::array();
        for (Eigen::Index i = 0; i < 2; ++i)
            for (Eigen::Index j = 0; j < 2; ++j)
                s.push_back({number_or_null(r.s(i, j).real()), number_or_null(r.s(i, j).imag())});
        out["s"] = s;
        out["mu"] = r.mu;
        out["mu_integral"] = number_or_null(r.mu_integral);
    }
    return out;
}

json base_manifest(const std::string& command, const ExperimentConfig& cfg) {
    return {{"schema", 1}, {"command", command}, {"config", config_echo(cfg)}};
}

struct CommandLine {
    std::string config;
    std::string output;
    int threads = 1;
    std::string suite = "all";
};

int run_sweep_command(const std::string& command, const CommandLine& cl, std::ostream& out, std::ostream& err) {
    const ExperimentConfig cfg = load_config(cl.config);
    const bool smatrix = command == "smatrix";
    const std::vector<LambdaRecord> records = sweep(cfg, smatrix, cl.threads);
    std::string text;
    if (cfg.format == OutputFormat::csv) {
        text = records_csv(records);
    } else if (smatrix) {
        text = smatrix_manifest(cfg, records).dump(2) + "\n";
    } else {
        bool edge_warning = false;
        const auto steps = singular_steps(cfg.path(), &edge_warning);
        text = ssf_manifest(cfg, records, steps, edge_warning).dump(2) + "\n";
    }
    emit(text, resolve_output(cfg, cl.output), out);
    for (const auto& r : records)
        if (r.status != RecordStatus::ok)
            err << "lambda " << fmt(r.lambda) << ": " << status_name(r.status) << ": " << r.message << "\n";
    return sweep_exit_code(records);
}

int run_verify_command(const CommandLine& cl, std::ostream& out, std::ostream& err) {
    const Suite suite = parse_suite(cl.suite);
    const ExperimentConfig cfg = load_config(cl.config);
    const std::vector<Check> checks = run_suite(suite, cfg);
    const std::string text =
        cfg.format == OutputFormat::csv ? checks_csv(checks) : verify_manifest(cfg, suite, checks).dump(2) + "\n";
    emit(text, resolve_output(cfg, cl.output), out);
    bool ok = true;
    for (const auto& c : checks) {
        err << (c.passed ? "PASS " : "FAIL ") << c.suite << "." << c.name << " residual=" << fmt(c.residual)
            << " threshold=" << fmt(c.threshold) << "\n";
        ok = ok && c.passed;
    }
    return ok ? kExitClean : kExitInvariant;
}

}  // namespace

std::string status_name(RecordStatus status) {
    switch (status) {
        case RecordStatus::ok: return "ok";
        case RecordStatus::flagged: return "flagged";
        case RecordStatus::resonance: return "resonance";
        case RecordStatus::band_edge: return "band_edge";
    }
    return "ok";
}

std::vector<LambdaRecord> sweep(const ExperimentConfig& cfg, bool with_mu, int threads) {
    const std::vector<double> grid = cfg.band_grid.values();
    const OperatorPath path = cfg.path();
    std::vector<LambdaRecord> records(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++)
            records[i] = evaluate_lambda(cfg, path, grid[i], with_mu);
    };
    const auto count = static_cast<std::size_t>(std::max(1, threads));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(count, grid.size()); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return records;
}

std::string records_csv(const std::vector<LambdaRecord>& records) {
    std::ostringstream os;
    os << "lambda,xi_ac,xi_ac_err,det_re,det_im,theta1,theta2,unitarity_resid,status\n";
    for (const auto& r : records)
        os << fmt(r.lambda) << ',' << fmt(r.xi_ac) << ',' << fmt(r.xi_ac_err) << ',' << fmt(r.det.real()) << ','
           << fmt(r.det.imag()) << ',' << fmt(r.theta(0)) << ',' << fmt(r.theta(1)) << ',' << fmt(r.unitarity_resid)
           << ',' << status_name(r.status) << '\n';
    return os.str();
}

json ssf_manifest(const ExperimentConfig& cfg, const std::vector<LambdaRecord>& records,
                  const std::vector<SingularStep>& steps, bool edge_warning) {
    json m = base_manifest("ssf", cfg);
    m["records"] = json::array();
    for (const auto& r : records) m["records"].push_back(record_json(r, false));
    m["singular_steps"] = json::array();
    for (const auto& s : steps)
        m["singular_steps"].push_back({{"lo", number_or_null(s.lo)}, {"hi", number_or_null(s.hi)}, {"value", s.value}});
    m["edge_warning"] = edge_warning;
    m["exit_code"] = sweep_exit_code(records);
    return m;
}

json smatrix_manifest(const ExperimentConfig& cfg, const std::vector<LambdaRecord>& records) {
    json m = base_manifest("smatrix", cfg);
    m["theta_grid"] = {{"points", cfg.theta_points}, {"rule", "midpoint"}};
    m["records"] = json::array();
    for (const auto& r : records) m["records"].push_back(record_json(r, true));
    m["exit_code"] = sweep_exit_code(records);
    return m;
}

json verify_manifest(const ExperimentConfig& cfg, Suite suite, const std::vector<Check>& checks) {
    json m = base_manifest("verify", cfg);
    m["suite"] = suite_name(suite);
    m["checks"] = json::array();
    bool ok = true;
    json worst = json::object();
    for (const auto& c : checks) {
        json entry = {{"suite", c.suite},
                      {"name", c.name},
                      {"residual", number_or_null(c.residual)},
                      {"threshold", c.threshold},
                      {"passed", c.passed}};
        if (!c.note.empty()) entry["note"] = c.note;
        m["checks"].push_back(entry);
        ok = ok && c.passed;
        const double prev = worst.contains(c.suite) ? worst[c.suite].get<double>() : 0.0;
        if (std::isfinite(c.residual)) worst[c.suite] = std::max(prev, c.residual);
    }
    m["summary"] = {{"passed", ok}, {"max_residual", worst}};
    return m;
}

std::string checks_csv(const std::vector<Check>& checks) {
    std::ostringstream os;
    os << "suite,name,residual,threshold,status\n";
    for (const auto& c : checks)
        os << c.suite << ',' << c.name << ',' << fmt(c.residual) << ',' << fmt(c.threshold) << ','
           << (c.passed ? "pass" : "fail") << '\n';
    return os.str();
}

int sweep_exit_code(const std::vector<LambdaRecord>& records) {
    int code = kExitClean;
    for (const auto& r : records) {
        if (r.status == RecordStatus::resonance || r.status == RecordStatus::band_edge) return kExitDomain;
        if (r.status == RecordStatus::flagged) code = kExitInvariant;
    }
    return code;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spectral shift functions and scattering matrices on the 1D lattice", "spectral-flow-lab"};
    app.require_subcommand(1);
    CommandLine cl;
    auto add_common = [&cl](CLI::App* sub) {
        sub->add_option("--config", cl.config, "Experiment config (JSON)")->required();
        sub->add_option("--output", cl.output, "Output file (default: config output.path, else stdout)");
        sub->add_option("--threads", cl.threads, "Worker threads for the band sweep")->check(CLI::PositiveNumber);
    };
    CLI::App* ssf = app.add_subcommand("ssf", "Spectral shift profile over the band grid");
    CLI::App* smatrix = app.add_subcommand("smatrix", "Scattering matrices, eigenphases and mu-invariant");
    CLI::App* verify = app.add_subcommand("verify", "Run invariant suites");
    add_common(ssf);
    add_common(smatrix);
    add_common(verify);
    verify->add_option("--suite", cl.suite, "texp|gauge|birman_krein|krein_trace|paths|all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitConfig;
    }

    try {
        if (ssf->parsed()) return run_sweep_command("ssf", cl, out, err);
        if (smatrix->parsed()) return run_sweep_command("smatrix", cl, out, err);
        return run_verify_command(cl, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InputError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "domain error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvariant;
    }
}

}  // namespace sfl
