#ifndef SFL_LATTICE_HPP
#define SFL_LATTICE_HPP

// The discrete Schroedinger model on the integer lattice:
//   (H0 psi)(n) = psi(n + 1) + psi(n - 1),  spectrum [-2, 2],  lambda = 2 cos k,
// perturbed by finitely supported real potentials.

#include <map>
#include <vector>

#include "sfl/linalg.hpp"

namespace sfl {

inline constexpr double kDefaultEdgeMargin = 1e-3;

/// Finitely supported real potential. Every stored coupling is finite and
/// nonzero; the empty potential is the free operator.
class LatticePotential {
  public:
    LatticePotential() = default;
    explicit LatticePotential(const std::map<int, double>& couplings);

    bool empty() const noexcept { return couplings_.empty(); }
    std::size_t size() const noexcept { return couplings_.size(); }
    const std::map<int, double>& couplings() const noexcept { return couplings_; }
    std::vector<int> sites() const;

    /// Coupling at a site (0 off the support).
    double at(int site) const;
    /// max |c_n| = operator norm of V.
    double norm() const;
    double sum() const;

    /// Sums and scalings drop sites whose coupling becomes exactly zero.
    LatticePotential operator+(const LatticePotential& other) const;
    LatticePotential operator-(const LatticePotential& other) const;
    LatticePotential operator*(double s) const;

    bool operator==(const LatticePotential& other) const = default;

  private:
    std::map<int, double> couplings_;
};

/// V = G* J G restricted to the support: K = C^m, G = diag(sqrt|c|), J = diag(sign c).
struct FactoredPerturbation {
    std::vector<int> sites;
    Eigen::VectorXd g;
    Eigen::VectorXd j;

    Eigen::Index rank() const noexcept { return g.size(); }
    Eigen::MatrixXd j_matrix() const { return j.asDiagonal(); }
    /// sign(c_i) |c_i| per site.
    LatticePotential potential() const;
};

FactoredPerturbation factor_potential(const LatticePotential& v);

/// Spectral parameter: either a point z off [-2, 2] or the boundary value lambda + i0.
class SpectralPoint {
  public:
    static SpectralPoint off_axis(Complex z);
    static SpectralPoint plus_i0(double lambda);

    bool is_boundary() const noexcept { return boundary_; }
    Complex z() const noexcept { return z_; }
    double lambda() const noexcept { return z_.real(); }

  private:
    SpectralPoint(Complex z, bool boundary) : z_(z), boundary_(boundary) {}
    Complex z_;
    bool boundary_;
};

/// The root of zeta^2 - z zeta + 1 = 0 selected for the resolvent kernel:
/// |zeta| < 1 off the band, e^{-ik} for lambda + i0 (Im r0(n, n) > 0).
Complex resolvent_root(const SpectralPoint& p);

/// r0(z; n, m) = <delta_n, (H0 - z)^{-1} delta_m> = zeta^{|n-m|} / (zeta - 1/zeta).
Complex free_resolvent_kernel(const SpectralPoint& p, int n, int m);

/// Matrix [r0(z; n_i, n_j)] over a site list.
MatrixXc free_resolvent_block(const SpectralPoint& p, const std::vector<int>& sites);

/// d/dE r0(E; n, m) for real E with |E| > 2.
double free_resolvent_kernel_derivative(double energy, int n, int m);

/// T(z) with its imaginary part B = (T - T*) / (2i).
struct BoundaryT {
    SpectralPoint point;
    MatrixXc matrix;
    MatrixXc b;

    BoundaryT(SpectralPoint p, MatrixXc t);
};

/// T0(z) = G R_z(H0) G*, entries g_i g_j r0(z; n_i, n_j).
BoundaryT sandwiched_resolvent(const FactoredPerturbation& f, const SpectralPoint& p);

/// k in (0, pi) with lambda = 2 cos k; band-edge error when |lambda| >= 2 - edge_margin.
double band_momentum(double lambda, double edge_margin = kDefaultEdgeMargin);

/// rho(k)^2 = 1 / (4 pi sin k).
double channel_normalization(double lambda, double edge_margin = kDefaultEdgeMargin);

/// Undressed channel map on bare sites (g = 1): 2 x m, rows are the channels
/// k and -k, entries rho e^{-ikn}, rho e^{+ikn}.
Eigen::Matrix<Complex, 2, Eigen::Dynamic> plane_wave_map(const std::vector<int>& sites, double lambda,
                                                         double edge_margin = kDefaultEdgeMargin);

/// Z(lambda; G): K -> fiber C^2, normalized so that pi Z*Z = Im T0(lambda + i0).
struct ChannelMap {
    double lambda;
    Eigen::Matrix<Complex, 2, Eigen::Dynamic> z;
};

ChannelMap channel_map(const FactoredPerturbation& f, double lambda, double edge_margin = kDefaultEdgeMargin);

/// v(lambda, lambda') = Z(lambda) J Z*(lambda').
Eigen::Matrix2cd perturbation_kernel(const FactoredPerturbation& f, double lambda, double lambda_prime,
                                     double edge_margin = kDefaultEdgeMargin);

struct BoundStates {
    /// Ascending eigenvalues of H0 + r V outside [-2, 2].
    std::vector<double> energies;
    /// A root sits within bisection tolerance of a band edge.
    bool near_band_edge = false;
};

/// Eigenvalues of H0 + r V outside the band, located as zeros of
/// det(1 + r T0(E) J). Roots are bracketed by the inertia count of
/// J / r + T0(E), which is monotone in E on each side of the band, and
/// bisected to 1e-12.
BoundStates bound_states(const FactoredPerturbation& f, double r);
BoundStates bound_states(const LatticePotential& v);

/// Number of eigenvalues of H0 + V strictly above E (E > 2) or at or below E (E < -2).
int bound_states_beyond(const LatticePotential& v, double energy);

/// <psi, D psi> for the normalized eigenvector psi of H0 + V at the bound
/// state energy E (the Hellmann-Feynman slope along direction D).
struct BoundStateWeight {
    double energy;
    double weight;
};
BoundStateWeight bound_state_weight(const LatticePotential& v, double energy, const LatticePotential& direction);

/// Dirichlet truncation of H0 + V to sites -(N-1)/2 .. (N-1)/2.
HermitianMatrix<double> truncate(const LatticePotential& v, int n);

/// Eigenvalues of the same truncation via its tridiagonal form.
Eigen::VectorXd truncated_spectrum(const LatticePotential& v, int n);

}  // namespace sfl

#endif  // SFL_LATTICE_HPP
