#include "sfl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sfl/spectral_shift.hpp"

namespace sfl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint64_t kSeed = 0x5eed2024;

class Recorder {
  public:
    explicit Recorder(std::string suite) : suite_(std::move(suite)) {}

    void below(const std::string& name, double residual, double threshold, std::string note = {}) {
        const bool ok = std::isfinite(residual) && residual <= threshold;
        checks_.push_back({suite_, name, residual, threshold, ok, std::move(note)});
    }

    void within(const std::string& name, double value, double lo, double hi) {
        const bool ok = std::isfinite(value) && value >= lo && value <= hi;
        const double miss = ok ? 0.0 : std::max(lo - value, value - hi);
        checks_.push_back({suite_, name, value, hi, ok,
                           "value must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]; miss " +
                               std::to_string(miss)});
    }

    std::vector<Check> take() { return std::move(checks_); }

  private:
    std::string suite_;
    std::vector<Check> checks_;
};

MatrixXc random_hermitian(std::mt19937_64& rng, Eigen::Index n, double scale) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixXc a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = Complex(gauss(rng), gauss(rng));
    return scale * (a + a.adjoint()) / 2.0;
}

// A(t) = A0 + t A1 + t^2 A2 on [0, 1].
MatrixPath random_quadratic_path(std::mt19937_64& rng, Eigen::Index dim) {
    const MatrixXc a0 = random_hermitian(rng, dim, 0.5);
    const MatrixXc a1 = random_hermitian(rng, dim, 0.5);
    const MatrixXc a2 = random_hermitian(rng, dim, 0.5);
    MatrixPath p;
    p.dim = dim;
    p.hermitian = true;
    p.evaluate = [a0, a1, a2](double t) -> MatrixXc { return a0 + t * a1 + t * t * a2; };
    return p;
}

std::vector<Check> texp_suite(const ExperimentConfig& cfg) {
    Recorder rec("texp");
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> split(0.2, 0.8);
    const int n = cfg.texp_steps;
    double det_worst = 0.0;
    double comp_worst = 0.0;
    double unit_worst = 0.0;
    double ratio_lo = std::numeric_limits<double>::infinity();
    double ratio_hi = -ratio_lo;
    for (int trial = 0; trial < 20; ++trial) {
        const MatrixPath path = random_quadratic_path(rng, 4);
        const TexpResult full = texp(path, n);
        const Complex det_ref = std::exp(Complex(0.0, -1.0) * integrate_trace(path, 64));
        det_worst = std::max(det_worst, std::abs(full.value.determinant() - det_ref));
        unit_worst = std::max(unit_worst, full.unitarity_defect);

        // Split on a cell boundary of the full grid: Texp(0,1) = Texp(t,1) Texp(0,t).
        const int m = static_cast<int>(std::lround(split(rng) * n));
        const double t = static_cast<double>(m) / n;
        const MatrixXc left = texp(path.restricted(0.0, t), m).value;
        const MatrixXc right = texp(path.restricted(t, 1.0), n - m).value;
        comp_worst = std::max(comp_worst, (right * left - full.value).norm());

        // Reference four times finer than the doubled run.
        const MatrixXc reference = texp(path, 512).value;
        const double e1 = (texp(path, 64).value - reference).norm();
        const double e2 = (texp(path, 128).value - reference).norm();
        ratio_lo = std::min(ratio_lo, e1 / e2);
        ratio_hi = std::max(ratio_hi, e1 / e2);
    }
    rec.below("det_lemma", det_worst, 1e-8);
    rec.below("composition", comp_worst, 1e-9);
    rec.below("unitarity", unit_worst, 1e-10);
    rec.within("midpoint_ratio_min", ratio_lo, 3.6, 4.4);
    rec.within("midpoint_ratio_max", ratio_hi, 3.6, 4.4);
    return rec.take();
}

std::vector<Check> gauge_suite(const ExperimentConfig& cfg) {
    Recorder rec("gauge");
    const std::vector<double> grid = cfg.band_grid.values();
    double gauge_worst = 0.0;
    for (const LatticePotential& v : cfg.vertices) {
        if (v.empty()) continue;
        const FactoredPerturbation f = factor_potential(v);
        for (double lambda : grid) {
            const auto z = channel_map(f, lambda, cfg.edge_margin).z;
            const BoundaryT t0 = sandwiched_resolvent(f, SpectralPoint::plus_i0(lambda));
            gauge_worst = std::max(gauge_worst, (std::numbers::pi * z.adjoint() * z - t0.b).norm());
        }
    }
    rec.below("gauge_identity", gauge_worst, 1e-10);

    // Pi_H(D1 + D2) = Pi_H(D1) + Pi_H(D2) at H = H0 + P_end for disjoint D1, D2.
    const LatticePotential& end = cfg.vertices.back();
    const std::vector<int> end_sites = end.sites();
    const int lo = end_sites.empty() ? 0 : end_sites.front();
    const int hi = end_sites.empty() ? 0 : end_sites.back();
    const LatticePotential d1(std::map<int, double>{{lo - 1, 0.7}});
    const LatticePotential d2(std::map<int, double>{{hi + 2, -0.4}});
    std::vector<int> frame_sites = (end + d1 + d2).sites();
    double additivity_worst = 0.0;
    double sum_rule_worst = 0.0;
    for (double lambda : grid) {
        const FiberFrame frame(frame_sites, lambda, cfg.edge_margin);
        const auto dressing = frame.dress(end);
        const Eigen::Matrix2cd joint = frame.infinitesimal(dressing, d1 + d2);
        const Eigen::Matrix2cd parts = frame.infinitesimal(dressing, d1) + frame.infinitesimal(dressing, d2);
        additivity_worst = std::max(additivity_worst, (joint - parts).norm());

        const FiberFrame free_frame(end.empty() ? d1.sites() : end_sites, lambda, cfg.edge_margin);
        const LatticePotential& probe = end.empty() ? d1 : end;
        const double trace = free_frame.infinitesimal(free_frame.dress(LatticePotential{}), probe).trace().real();
        const double sin_k = std::sin(std::acos(lambda / 2.0));
        sum_rule_worst = std::max(sum_rule_worst, std::abs(trace - probe.sum() / (kTwoPi * sin_k)));
    }
    rec.below("pi_additivity", additivity_worst, 1e-12);
    rec.below("free_sum_rule", sum_rule_worst, 1e-10);
    return rec.take();
}

std::vector<Check> birman_krein_suite(const ExperimentConfig& cfg) {
    Recorder rec("birman_krein");
    const OperatorPath path = cfg.path();
    const XiAcOptions opts{cfg.r_nodes, cfg.xi_tolerance, cfg.edge_margin};
    double unit_worst = 0.0;
    double bk_worst = 0.0;
    double quad_worst = 0.0;
    double phase_worst = 0.0;
    double grid_worst = 0.0;
    for (double lambda : cfg.band_grid.values()) {
        const ScatteringSample s = path_scattering_matrix(path, lambda, cfg.edge_margin);
        const XiAc xi = xi_ac(path, lambda, opts);
        unit_worst = std::max(unit_worst, s.unitarity_residual);
        bk_worst = std::max(bk_worst, std::abs(s.det - std::exp(Complex(0.0, -kTwoPi * xi.value))));
        quad_worst = std::max(quad_worst, xi.quad_error);

        const EigenphasePath track = eigenphase_track(path, lambda, uniform_grid(64), cfg.edge_margin);
        const Eigen::Vector2d final_phases = track.theta.col(track.theta.cols() - 1);
        phase_worst = std::max(phase_worst, std::abs(-final_phases.sum() / kTwoPi - xi.value));
        grid_worst = std::max(grid_worst, std::abs(mu_integral_grid(final_phases, cfg.theta_points) - xi.value));
    }
    rec.below("unitarity", unit_worst, 1e-9);
    rec.below("birman_krein", bk_worst, 1e-6);
    rec.below("xi_ac_quadrature", quad_worst, cfg.xi_tolerance);
    rec.below("mu_phase_sum", phase_worst, 1e-6);
    rec.below("mu_grid_integral", grid_worst, 1.0 / cfg.theta_points + 1e-6);
    return rec.take();
}

std::vector<Check> krein_trace_suite(const ExperimentConfig& cfg) {
    Recorder rec("krein_trace");
    const OperatorPath path = cfg.path();
    const Eigen::VectorXd spec0 = truncated_spectrum(path.start(), cfg.truncation_N);
    const Eigen::VectorXd spec1 = truncated_spectrum(path.end(), cfg.truncation_N);
    const TestFunction f = TestFunction::c2_bump(-1.5, 1.5);

    const KreinCheck finite = krein_check(spec0, spec1, f, 8);
    rec.below("finite_identity", std::abs(finite.lhs - finite.rhs), 1e-10);

    // Against the infinite-lattice xi^(a); f is supported inside the band.
    const XiAcOptions opts{cfg.r_nodes, cfg.xi_tolerance, cfg.edge_margin};
    const GaussLegendreRule rule = composite_gauss_legendre(16, 12, f.lo, f.hi);
    double rhs = 0.0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i)
        rhs += rule.weights(i) * f.derivative(rule.nodes(i)) * xi_ac(path, rule.nodes(i), opts).value;
    rec.below("truncation_vs_infinite", std::abs(finite.lhs - rhs), 5e-3);

    // Singular part against eigenvalue counting of the truncations.
    std::vector<double> bound;
    for (const LatticePotential* p : {&path.start(), &path.end()})
        for (double e : bound_states(*p).energies) bound.push_back(e);
    int mismatches = 0;
    for (int k = 1; k <= 10; ++k) {
        for (double sign : {-1.0, 1.0}) {
            const double q = sign * (2.0 + 0.1 * k);
            const bool near = std::any_of(bound.begin(), bound.end(), [q](double e) { return std::abs(e - q) < 1e-6; });
            if (near) continue;
            if (xi_singular(path, q).value != xi_finite(spec0, spec1, q).value) ++mismatches;
        }
    }
    rec.below("singular_vs_truncation", mismatches, 0.0);
    return rec.take();
}

LatticePotential detour_offset(const OperatorPath& path) {
    const std::vector<int> sites = path.sites();
    const int lo = sites.empty() ? 0 : sites.front();
    const int hi = sites.empty() ? 0 : sites.back();
    return LatticePotential(std::map<int, double>{{lo - 1, 0.8}, {hi + 1, -0.6}});
}

std::vector<Check> paths_suite(const ExperimentConfig& cfg) {
    Recorder rec("paths");
    const OperatorPath path = cfg.path();
    const LatticePotential mid = (path.start() + path.end()) * 0.5 + detour_offset(path);
    const OperatorPath detour = OperatorPath::through({path.start(), mid, path.end()});
    const OperatorPath back = path.reversed();
    const XiAcOptions opts{cfg.r_nodes, cfg.xi_tolerance, cfg.edge_margin};
    double texp_worst = 0.0;
    double independence_worst = 0.0;
    double antisymmetry_worst = 0.0;
    for (double lambda : cfg.band_grid.values()) {
        const ScatteringSample stationary = path_scattering_matrix(path, lambda, cfg.edge_margin);
        const ScatteringSample flow = scattering_via_texp(path, lambda, cfg.texp_steps, cfg.edge_margin);
        texp_worst = std::max(texp_worst, (flow.s - stationary.s).norm());
        const double xi = xi_ac(path, lambda, opts).value;
        independence_worst = std::max(independence_worst, std::abs(xi - xi_ac(detour, lambda, opts).value));
        antisymmetry_worst = std::max(antisymmetry_worst, std::abs(xi + xi_ac(back, lambda, opts).value));
    }
    rec.below("s_equals_texp", texp_worst, 1e-6);
    rec.below("path_independence", independence_worst, 1e-6);
    rec.below("reversal_antisymmetry", antisymmetry_worst, 1e-10);
    return rec.take();
}

}  // namespace

Suite parse_suite(const std::string& name) {
    if (name == "texp") return Suite::texp;
    if (name == "gauge") return Suite::gauge;
    if (name == "birman_krein") return Suite::birman_krein;
    if (name == "krein_trace") return Suite::krein_trace;
    if (name == "paths") return Suite::paths;
    if (name == "all") return Suite::all;
    throw ConfigError("unknown suite '" + name + "'");
}

std::string suite_name(Suite suite) {
    switch (suite) {
        case Suite::texp: return "texp";
        case Suite::gauge: return "gauge";
        case Suite::birman_krein: return "birman_krein";
        case Suite::krein_trace: return "krein_trace";
        case Suite::paths: return "paths";
        case Suite::all: return "all";
    }
    return "all";
}

std::vector<Check> run_suite(Suite suite, const ExperimentConfig& config) {
    if (suite == Suite::all) {
        std::vector<Check> out;
        for (Suite s : {Suite::texp, Suite::gauge, Suite::birman_krein, Suite::krein_trace, Suite::paths}) {
            std::vector<Check> part = run_suite(s, config);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }
    switch (suite) {
        case Suite::texp: return texp_suite(config);
        case Suite::gauge: return gauge_suite(config);
        case Suite::birman_krein: return birman_krein_suite(config);
        case Suite::krein_trace: return krein_trace_suite(config);
        case Suite::paths: return paths_suite(config);
        case Suite::all: break;
    }
    return {};
}

}  // namespace sfl
