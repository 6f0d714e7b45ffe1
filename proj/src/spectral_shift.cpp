#include "sfl/spectral_shift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sfl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQueryGap = 1e-6;
constexpr std::size_t kMaxFlowRefine = 30;
constexpr int kMaxXiPanels = 64;

// Bound states of P on one side of the band, counted relative to the query:
// above lambda_q for lambda_q > 2, at or below for lambda_q < -2.
int beyond(const LatticePotential& p, double lambda_q) { return bound_states_beyond(p, lambda_q); }

// All bound states on the query's side of the band.
int side_total(const LatticePotential& p, double lambda_q) {
    return bound_states_beyond(p, lambda_q > 0.0 ? 2.0 + 1e-12 : -2.0 - 1e-12);
}

struct FlowSample {
    double s;
    int count;
    int total;
};

}  // namespace

TestFunction TestFunction::c2_bump(double lo, double hi) {
    if (!(hi > lo)) throw ConfigError("c2_bump: empty support");
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    TestFunction f;
    f.lo = lo;
    f.hi = hi;
    f.evaluate = [center, half](double x) {
        const double u = (x - center) / half;
        if (std::abs(u) >= 1.0) return 0.0;
        const double w = 1.0 - u * u;
        return w * w * w;
    };
    f.derivative = [center, half](double x) {
        const double u = (x - center) / half;
        if (std::abs(u) >= 1.0) return 0.0;
        const double w = 1.0 - u * u;
        return -6.0 * u * w * w / half;
    };
    return f;
}

XiAc xi_ac(const OperatorPath& path, double lambda, const XiAcOptions& options) {
    XiAc out;
    const auto sites = path.sites();
    if (sites.empty()) return out;
    const FiberFrame frame(sites, lambda, options.edge_margin);
    const auto n = static_cast<double>(path.segment_count());
    const double segment_tolerance = options.tolerance / n;

    for (std::size_t seg = 0; seg < path.segment_count(); ++seg) {
        const LatticePotential d = path.direction(seg);
        if (d.empty()) continue;
        const LatticePotential& start = path.vertices()[seg];
        auto density = [&](double s) {
            const LatticePotential p = start + d * s;
            return frame.flow_density(frame.dress(p, (seg + s) / n), d);
        };
        auto apply = [&](int panels) {
            const GaussLegendreRule rule = composite_gauss_legendre(options.r_nodes, panels, 0.0, 1.0);
            double sum = 0.0;
            for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) sum += rule.weights(i) * density(rule.nodes(i));
            return sum;
        };
        // Panel doubling until two consecutive rules agree.
        double coarse = apply(1);
        double fine = apply(2);
        for (int panels = 2; std::abs(fine - coarse) > segment_tolerance && panels < kMaxXiPanels; panels *= 2) {
            coarse = fine;
            fine = apply(2 * panels);
        }
        out.value += fine;
        out.quad_error += std::abs(fine - coarse);
    }
    out.flagged = out.quad_error > options.tolerance;
    return out;
}

XiSingular xi_singular(const OperatorPath& path, double lambda_q, int r_points) {
    if (!std::isfinite(lambda_q) || std::abs(lambda_q) < 2.0 + kQueryGap)
        throw DomainError("xi_singular: query must lie outside the band by at least 1e-6");
    if (r_points < 2) throw ConfigError("xi_singular: need at least two r points");
    // Crossing lambda_q upward raises the count above it and lowers the count below it.
    const int orientation = lambda_q > 0.0 ? 1 : -1;

    XiSingular out;
    for (std::size_t seg = 0; seg < path.segment_count(); ++seg) {
        const LatticePotential d = path.direction(seg);
        if (d.empty()) continue;
        const LatticePotential& start = path.vertices()[seg];
        auto sample = [&](double s) {
            const LatticePotential p = start + d * s;
            return FlowSample{s, beyond(p, lambda_q), side_total(p, lambda_q)};
        };

        // Adaptive refinement: an interval is resolved when it contains at most
        // one crossing of lambda_q and no simultaneous edge emission/absorption.
        std::vector<FlowSample> stack;
        FlowSample left = sample(0.0);
        const std::vector<double> grid = uniform_grid(r_points);
        for (std::size_t k = 1; k < grid.size(); ++k) {
            stack.push_back(sample(grid[k]));
            while (!stack.empty()) {
                const FlowSample right = stack.back();
                const int dc = right.count - left.count;
                const bool crowded = std::abs(dc) > 1 || (dc != 0 && right.total != left.total);
                if (crowded && stack.size() < kMaxFlowRefine && right.s - left.s > 1e-12) {
                    stack.push_back(sample(0.5 * (left.s + right.s)));
                    continue;
                }
                if (crowded) out.edge_warning = true;
                out.value += orientation * dc;
                left = right;
                stack.pop_back();
            }
        }
    }
    return out;
}

std::vector<SingularStep> singular_steps(const OperatorPath& path, bool* edge_warning) {
    if (edge_warning) *edge_warning = false;
    // xi^(s) can only change at bound-state energies of the endpoints.
    std::vector<double> upper{2.0};
    std::vector<double> lower{-2.0};
    for (const LatticePotential* p : {&path.start(), &path.end()}) {
        const BoundStates bs = bound_states(*p);
        if (bs.near_band_edge && edge_warning) *edge_warning = true;
        for (double e : bs.energies) (e > 0.0 ? upper : lower).push_back(e);
    }
    std::sort(upper.begin(), upper.end());
    upper.erase(std::unique(upper.begin(), upper.end()), upper.end());
    std::sort(lower.begin(), lower.end(), std::greater<>());
    lower.erase(std::unique(lower.begin(), lower.end()), lower.end());

    auto value_at = [&](double e) {
        const XiSingular xs = xi_singular(path, e);
        if (xs.edge_warning && edge_warning) *edge_warning = true;
        return xs.value;
    };

    std::vector<SingularStep> out;
    for (std::size_t i = lower.size(); i-- > 0;) {
        const double hi = lower[i];
        const double lo = i + 1 < lower.size() ? lower[i + 1] : -kInf;
        const double probe = std::isinf(lo) ? hi - 1.0 : 0.5 * (lo + hi);
        if (hi - lo > 2e-6) out.push_back({lo, hi, value_at(probe)});
    }
    for (std::size_t i = 0; i < upper.size(); ++i) {
        const double lo = upper[i];
        const double hi = i + 1 < upper.size() ? upper[i + 1] : kInf;
        const double probe = std::isinf(hi) ? lo + 1.0 : 0.5 * (lo + hi);
        if (hi - lo > 2e-6) out.push_back({lo, hi, value_at(probe)});
    }
    return out;
}

SSFProfile ssf_profile(const OperatorPath& path, const std::vector<double>& band_grid, const XiAcOptions& options) {
    SSFProfile out;
    out.band_grid = band_grid;
    for (double lambda : band_grid) {
        const XiAc x = xi_ac(path, lambda, options);
        out.xi_ac.push_back(x.value);
        out.quad_error.push_back(x.quad_error);
        out.flagged.push_back(x.flagged);
    }
    out.singular_steps = singular_steps(path, &out.edge_warning);
    return out;
}

FlowDensity flow_density(const FactoredPerturbation& f, double lambda, double r, double edge_margin) {
    const LatticePotential v = f.potential();
    FlowDensity out;
    out.lambda = lambda;
    out.r = r;
    out.ac_density = infinitesimal_sm(f, lambda, r, v, edge_margin).trace;
    const LatticePotential hr = v * r;
    for (double e : bound_states(hr).energies) out.singular_atoms.push_back(bound_state_weight(hr, e, v));
    return out;
}

XiFinite xi_finite(const Eigen::VectorXd& spectrum0, const Eigen::VectorXd& spectrum1, double lambda) {
    if (spectrum0.size() != spectrum1.size()) throw InputError("xi_finite: dimension mismatch");
    XiFinite out;
    out.value = static_cast<int>(count_at_most(spectrum0, lambda) - count_at_most(spectrum1, lambda));
    const double gap = std::min((spectrum0.array() - lambda).abs().minCoeff(),
                                (spectrum1.array() - lambda).abs().minCoeff());
    out.tie = gap < 1e-12;
    return out;
}

KreinCheck krein_check(const Eigen::VectorXd& spectrum0, const Eigen::VectorXd& spectrum1, const TestFunction& f,
                       int lambda_quad) {
    if (spectrum0.size() != spectrum1.size()) throw InputError("krein_check: dimension mismatch");
    if (lambda_quad < 1) throw ConfigError("krein_check: need at least one quadrature node");
    KreinCheck out;
    for (double e : spectrum1) out.lhs += f.evaluate(e);
    for (double e : spectrum0) out.lhs -= f.evaluate(e);

    // xi_finite is constant between consecutive points of the merged spectrum.
    std::vector<double> cuts{f.lo, f.hi};
    for (const Eigen::VectorXd* s : {&spectrum0, &spectrum1})
        for (double e : *s)
            if (e > f.lo && e < f.hi) cuts.push_back(e);
    std::sort(cuts.begin(), cuts.end());

    const GaussLegendreRule coarse = gauss_legendre(lambda_quad);
    const GaussLegendreRule fine = gauss_legendre(2 * lambda_quad);
    auto piece_integral = [&](const GaussLegendreRule& rule, double a, double b) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < rule.nodes.size(); ++i)
            sum += rule.weights(i) * f.derivative(a + 0.5 * (b - a) * (rule.nodes(i) + 1.0));
        return 0.5 * (b - a) * sum;
    };
    double deviation = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double b = cuts[i + 1];
        if (!(b > a)) continue;
        const double mid = 0.5 * (a + b);
        const auto xi = count_at_most(spectrum0, mid) - count_at_most(spectrum1, mid);
        if (xi == 0) continue;
        const double q_fine = piece_integral(fine, a, b);
        deviation += std::abs(q_fine - piece_integral(coarse, a, b)) * std::abs(static_cast<double>(xi));
        out.rhs += static_cast<double>(xi) * q_fine;
    }
    out.flagged = deviation > 1e-10 * std::max(1.0, std::abs(out.rhs));
    return out;
}

}  // namespace sfl
