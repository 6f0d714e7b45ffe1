#ifndef SFL_SCATTERING_HPP
#define SFL_SCATTERING_HPP

// Stationary scattering for the lattice model: T-matrix continuation in the
// coupling, the 2 x 2 fiber scattering matrix, the infinitesimal scattering
// matrix, its chronological exponential along piecewise-linear paths,
// eigenphase tracking and the mu-invariant.
//
// Fibers of every operator on a path are identified with the free fiber C^2
// through the "+" scattered waves, so the wave-matrix conjugation in the
// chronological-exponential representation is the identity.

#include <utility>
#include <vector>

#include "sfl/lattice.hpp"
#include "sfl/texp.hpp"

namespace sfl {

inline constexpr double kResonanceCondition = 1e12;

/// Piecewise-linear path of potentials P_0 -> P_1 -> ... -> P_n. The global
/// parameter r in [0, 1] covers segment i on [i/n, (i+1)/n].
class OperatorPath {
  public:
    /// H0 -> H0 + v.
    static OperatorPath straight(const LatticePotential& v);
    static OperatorPath through(std::vector<LatticePotential> vertices);
    /// Segments given as (start, end) pairs; joints must agree.
    static OperatorPath from_segments(const std::vector<std::pair<LatticePotential, LatticePotential>>& segments);

    std::size_t segment_count() const noexcept { return vertices_.size() - 1; }
    const std::vector<LatticePotential>& vertices() const noexcept { return vertices_; }
    const LatticePotential& start() const { return vertices_.front(); }
    const LatticePotential& end() const { return vertices_.back(); }

    /// Difference potential of segment i.
    LatticePotential direction(std::size_t segment) const;
    /// Segment index and local parameter s in [0, 1] for a global r.
    std::pair<std::size_t, double> locate(double r) const;
    LatticePotential at(double r) const;
    /// Interior joints i/n.
    std::vector<double> joints() const;
    OperatorPath reversed() const;
    /// Union of all vertex supports, ascending.
    std::vector<int> sites() const;

  private:
    explicit OperatorPath(std::vector<LatticePotential> vertices);
    std::vector<LatticePotential> vertices_;
};

/// Free-fiber data at one energy on a fixed site set U: R0(lambda + i0) on U and
/// the bare channel map. Potentials supported in U are dressed against it.
class FiberFrame {
  public:
    FiberFrame(std::vector<int> sites, double lambda, double edge_margin = kDefaultEdgeMargin);

    struct Dressing {
        /// (1 + P R0)^{-1}.
        MatrixXc inverse;
        /// Full resolvent block R_P = R0 (1 + P R0)^{-1} on U.
        MatrixXc resolvent;
        /// Dressed channel map Y_P = Z_U (1 + P R0)^{-1}; pi Y*Y = Im R_P.
        Eigen::Matrix<Complex, 2, Eigen::Dynamic> channel;
    };

    /// Resonance error (carrying lambda and `r_tag`) when 1 + P R0 is singular.
    Dressing dress(const LatticePotential& p, double r_tag = 1.0) const;

    /// S(lambda; H0 + P, H0) = I - 2 pi i Z P (1 + R0 P)^{-1} Z*.
    Eigen::Matrix2cd scattering(const LatticePotential& p, double r_tag = 1.0) const;
    /// Pi_{H0 + P}(D) = Y_P D Y_P*.
    Eigen::Matrix2cd infinitesimal(const Dressing& dressing, const LatticePotential& direction) const;
    /// (1/pi) Tr(D Im R_P).
    double flow_density(const Dressing& dressing, const LatticePotential& direction) const;

    double lambda() const noexcept { return lambda_; }
    const std::vector<int>& sites() const noexcept { return sites_; }
    const MatrixXc& free_resolvent() const noexcept { return r0_; }
    const Eigen::Matrix<Complex, 2, Eigen::Dynamic>& plane_waves() const noexcept { return z_; }

  private:
    Eigen::VectorXd diagonal(const LatticePotential& p) const;

    std::vector<int> sites_;
    double lambda_;
    MatrixXc r0_;
    Eigen::Matrix<Complex, 2, Eigen::Dynamic> z_;
};

struct ScatteringSample {
    double lambda = 0.0;
    double r = 0.0;
    Eigen::Matrix2cd s;
    Complex det;
    /// Principal eigenphases in (-pi, pi], ascending.
    Eigen::Vector2d eigenphases;
    /// ||S*S - I||_F.
    double unitarity_residual = 0.0;

    static ScatteringSample from_matrix(double lambda, double r, const Eigen::Matrix2cd& s);
};

struct InfinitesimalSM {
    double lambda = 0.0;
    double r = 0.0;
    Eigen::Matrix2cd pi;
    double trace = 0.0;
};

struct EigenphasePath {
    double lambda = 0.0;
    std::vector<double> r_grid;
    /// 2 x len(r_grid), unwound, theta(., 0) = 0 relative to the path start.
    Eigen::Matrix<double, 2, Eigen::Dynamic> theta;
    /// Eigenvalue matching stayed ambiguous after refinement.
    bool degenerate_crossing = false;
};

/// T_r(lambda + i0) = T0 (1 + r J T0)^{-1}.
BoundaryT t_matrix_at(const FactoredPerturbation& f, double lambda, double r);

/// S(lambda; H_r, H0) = 1 - 2 pi i r Z0 J (1 + r T0 J)^{-1} Z0*.
ScatteringSample scattering_matrix(const FactoredPerturbation& f, double lambda, double r,
                                   double edge_margin = kDefaultEdgeMargin);

/// det S on the channel-source space: det(1 - 2i r J (1 + r T0 J)^{-1} Im T0).
Complex det_scattering(const FactoredPerturbation& f, double lambda, double r);

/// Z_r = Z0 (1 + r J T0)^{-1}, the channel map of H_r in the free fiber.
Eigen::Matrix<Complex, 2, Eigen::Dynamic> dressed_channel_map(const FactoredPerturbation& f, double lambda, double r,
                                                              double edge_margin = kDefaultEdgeMargin);

/// Pi_{H_r}(D)(lambda) = Z_r J_D Z_r* for H_r = H0 + r V_f.
InfinitesimalSM infinitesimal_sm(const FactoredPerturbation& f, double lambda, double r,
                                 const LatticePotential& direction, double edge_margin = kDefaultEdgeMargin);

/// S(lambda; H_{r0 + h}, H_{r0}) from the stationary formula re-based at H_{r0}:
/// 1 - 2 pi i h Z_{r0} J (1 + h T_{r0} J)^{-1} Z_{r0}*.
Eigen::Matrix2cd rebased_scattering_matrix(const FactoredPerturbation& f, double lambda, double r0, double h,
                                           double edge_margin = kDefaultEdgeMargin);

/// Stationary S(lambda; H_end, H_start) = S(end) S(start)* in the free fiber.
ScatteringSample path_scattering_matrix(const OperatorPath& path, double lambda,
                                        double edge_margin = kDefaultEdgeMargin);

/// Generator A(r) = 2 pi Pi_r (per unit global r) of the path at lambda.
MatrixPath infinitesimal_path(const OperatorPath& path, double lambda, double edge_margin = kDefaultEdgeMargin);

/// T exp(-2 pi i int_0^1 Pi_r dr) by the midpoint product with `r_steps` steps.
ScatteringSample scattering_via_texp(const OperatorPath& path, double lambda, int r_steps,
                                     double edge_margin = kDefaultEdgeMargin);

/// Continuously unwound eigenphases of S(lambda; H_r, H_start) along the grid.
/// Intervals where consecutive matrices differ by >= 0.5 in operator norm, or
/// where the two pairings tie, are subdivided internally.
EigenphasePath eigenphase_track(const OperatorPath& path, double lambda, const std::vector<double>& r_grid,
                                double edge_margin = kDefaultEdgeMargin);
EigenphasePath eigenphase_track(const FactoredPerturbation& f, double lambda, const std::vector<double>& r_grid,
                                double edge_margin = kDefaultEdgeMargin);

/// Uniform grid of `points` values on [0, 1].
std::vector<double> uniform_grid(int points);

struct MuValue {
    int value = 0;
    /// theta coincides with a final phase modulo 2 pi.
    bool on_boundary = false;
};

/// mu(theta) = sum_j (1 + floor((theta_j(1) - theta) / 2 pi)).
MuValue mu_from_phases(const Eigen::Vector2d& final_phases, double theta);

/// mu-invariant of the path at lambda, tracked on `r_points` uniform points.
MuValue mu_invariant(const OperatorPath& path, double lambda, double theta, int r_points = 64,
                     double edge_margin = kDefaultEdgeMargin);

/// -(1/2pi) int_0^{2pi} mu(theta) d theta as an exact sum of step lengths.
double mu_integral_exact(const Eigen::Vector2d& final_phases);

/// Same integral as a midpoint sum over `points` theta values.
double mu_integral_grid(const Eigen::Vector2d& final_phases, int points);

}  // namespace sfl

#endif  // SFL_SCATTERING_HPP
