#ifndef SFL_SPECTRAL_SHIFT_HPP
#define SFL_SPECTRAL_SHIFT_HPP

// Spectral shift function: the absolutely continuous part by r-integration of
// Tr Pi, the singular part by bound-state spectral flow, and finite-matrix
// oracles (eigenvalue counting, Birman-Solomyak, Krein trace formula).

#include <cmath>
#include <limits>
#include <vector>

#include "sfl/quadrature.hpp"
#include "sfl/scattering.hpp"

namespace sfl {

/// Smooth compactly supported test function with its derivative.
struct TestFunction {
    RealFunction evaluate;
    RealFunction derivative;
    double lo = 0.0;
    double hi = 0.0;

    /// (1 - u^2)^3 for u = (2x - lo - hi) / (hi - lo) inside (lo, hi), zero outside; C^2.
    static TestFunction c2_bump(double lo, double hi);
};

struct XiAcOptions {
    int r_nodes = 32;
    double tolerance = 1e-8;
    double edge_margin = kDefaultEdgeMargin;
};

struct XiAc {
    double value = 0.0;
    /// |Q(2p panels) - Q(p panels)| at the last panel doubling, summed over segments.
    double quad_error = 0.0;
    bool flagged = false;
};

/// xi^(a)(lambda) = sum over segments of int_0^1 (1/pi) Tr(D Im R_{P(s)}(lambda + i0)) ds.
XiAc xi_ac(const OperatorPath& path, double lambda, const XiAcOptions& options = {});

struct XiSingular {
    int value = 0;
    /// Bound-state emission or absorption at a band edge could not be
    /// separated from a crossing of the query level.
    bool edge_warning = false;
};

/// Signed count of crossings of lambda_query (|lambda_query| > 2) by bound-state
/// trajectories along the path: upward crossings +1, downward -1.
XiSingular xi_singular(const OperatorPath& path, double lambda_query, int r_points = 32);

/// Constant pieces of xi^(s) on R \ [-2, 2]. Unbounded ends use +-infinity.
struct SingularStep {
    double lo;
    double hi;
    int value;
};

struct SSFProfile {
    std::vector<double> band_grid;
    std::vector<double> xi_ac;
    std::vector<double> quad_error;
    std::vector<bool> flagged;
    std::vector<SingularStep> singular_steps;
    bool edge_warning = false;
};

std::vector<SingularStep> singular_steps(const OperatorPath& path, bool* edge_warning = nullptr);

SSFProfile ssf_profile(const OperatorPath& path, const std::vector<double>& band_grid,
                       const XiAcOptions& options = {});

/// Tr Pi_r(lambda) and the bound-state atoms (E_k(r), <psi_k, V psi_k>) of
/// H_r = H0 + r V along direction V.
struct FlowDensity {
    double lambda = 0.0;
    double r = 0.0;
    double ac_density = 0.0;
    std::vector<BoundStateWeight> singular_atoms;
};

FlowDensity flow_density(const FactoredPerturbation& f, double lambda, double r,
                         double edge_margin = kDefaultEdgeMargin);

// ------------------------------------------------------ finite-matrix oracles

struct XiFinite {
    int value = 0;
    /// lambda within 1e-12 of an eigenvalue; the closed convention was applied.
    bool tie = false;
};

/// N0(lambda) - N1(lambda) from ascending spectra.
XiFinite xi_finite(const Eigen::VectorXd& spectrum0, const Eigen::VectorXd& spectrum1, double lambda);

template <typename Scalar>
XiFinite xi_finite(const HermitianMatrix<Scalar>& h0, const HermitianMatrix<Scalar>& h1, double lambda) {
    if (h0.dim() != h1.dim()) throw InputError("xi_finite: dimension mismatch");
    return xi_finite(eigvalsh(h0), eigvalsh(h1), lambda);
}

/// Tr(V phi(H)).
template <typename Scalar>
double infinitesimal_flow(const HermitianMatrix<Scalar>& h, const HermitianMatrix<Scalar>& v, const TestFunction& phi) {
    if (h.dim() != v.dim()) throw InputError("infinitesimal_flow: dimension mismatch");
    const HermitianMatrix<Scalar> fh = matrix_function(h, phi.evaluate);
    return std::real((v.matrix() * fh.matrix()).trace());
}

struct BirmanSolomyak {
    /// F(lambda) = int_0^1 Tr(V E_{(-inf, lambda]}(H0 + rV)) dr per grid point.
    std::vector<double> cumulative;
    bool tie_warning = false;
};

template <typename Scalar>
BirmanSolomyak birman_solomyak_xi(const HermitianMatrix<Scalar>& h0, const HermitianMatrix<Scalar>& v,
                                  const std::vector<double>& lambda_grid, int r_nodes) {
    if (r_nodes < 8) throw ConfigError("birman_solomyak_xi: r_nodes must be >= 8");
    if (h0.dim() != v.dim()) throw InputError("birman_solomyak_xi: dimension mismatch");
    const GaussLegendreRule rule = composite_gauss_legendre(r_nodes, 1, 0.0, 1.0);
    BirmanSolomyak out;
    out.cumulative.assign(lambda_grid.size(), 0.0);
    for (Eigen::Index q = 0; q < rule.nodes.size(); ++q) {
        const HermitianMatrix<Scalar> hr(h0.matrix() + rule.nodes(q) * v.matrix());
        const EigenSystem<Scalar> es = eigh(hr);
        for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
            const double lambda = lambda_grid[i];
            if ((es.eigenvalues.array() - lambda).abs().minCoeff() < 1e-12) out.tie_warning = true;
            out.cumulative[i] += rule.weights(q) * projected_trace(v, es, lambda);
        }
    }
    return out;
}

struct KreinCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool flagged = false;
};

/// lhs = Tr(f(H1) - f(H0)); rhs = int f'(lambda) xi_finite(lambda) d lambda with
/// Gauss-Legendre panels between consecutive points of the merged spectrum.
KreinCheck krein_check(const Eigen::VectorXd& spectrum0, const Eigen::VectorXd& spectrum1, const TestFunction& f,
                       int lambda_quad);

template <typename Scalar>
KreinCheck krein_check(const HermitianMatrix<Scalar>& h0, const HermitianMatrix<Scalar>& h1, const TestFunction& f,
                       int lambda_quad) {
    if (h0.dim() != h1.dim()) throw InputError("krein_check: dimension mismatch");
    return krein_check(eigvalsh(h0), eigvalsh(h1), f, lambda_quad);
}

}  // namespace sfl

#endif  // SFL_SPECTRAL_SHIFT_HPP
