#include "sfl/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace sfl {

namespace {

constexpr double kBisectionTolerance = 1e-12;

// Inertia of a real symmetric matrix: number of negative eigenvalues.
int negative_count(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    return static_cast<int>((solver.eigenvalues().array() < 0.0).count());
}

// K(E) = J + T0(E) for the factorization of V; real symmetric for real |E| > 2.
Eigen::MatrixXd birman_schwinger(const FactoredPerturbation& f, double energy) {
    const MatrixXc t = sandwiched_resolvent(f, SpectralPoint::off_axis(energy)).matrix;
    Eigen::MatrixXd k = t.real();
    k.diagonal() += f.j;
    return k;
}

// Eigenvalues of H0 + V above `energy` (> 2): n_-(K(E)) - n_-(J).
int count_above(const FactoredPerturbation& f, int j_negative, double energy) {
    return negative_count(birman_schwinger(f, energy)) - j_negative;
}

// Eigenvalues of H0 + V below `energy` (< -2): n_-(J) - n_-(K(E)).
int count_below(const FactoredPerturbation& f, int j_negative, double energy) {
    return j_negative - negative_count(birman_schwinger(f, energy));
}

// Isolate the roots of a monotone counting function on [lo, hi]; counts[lo] - counts[hi]
// eigenvalues lie in (lo, hi].
template <typename Count>
void isolate(const Count& count, double lo, double hi, int c_lo, int c_hi, std::vector<double>& roots) {
    const int inside = c_lo - c_hi;
    if (inside <= 0) return;
    if (hi - lo <= kBisectionTolerance * std::max(1.0, std::abs(hi))) {
        for (int i = 0; i < inside; ++i) roots.push_back(0.5 * (lo + hi));
        return;
    }
    const double mid = 0.5 * (lo + hi);
    const int c_mid = count(mid);
    isolate(count, lo, mid, c_lo, c_mid, roots);
    isolate(count, mid, hi, c_mid, c_hi, roots);
}

}  // namespace

// ---------------------------------------------------------------- potentials

LatticePotential::LatticePotential(const std::map<int, double>& couplings) {
    for (const auto& [site, c] : couplings) {
        if (!std::isfinite(c)) throw InputError("LatticePotential: non-finite coupling");
        if (c == 0.0) throw InputError("LatticePotential: zero coupling at site " + std::to_string(site));
    }
    couplings_ = couplings;
}

std::vector<int> LatticePotential::sites() const {
    std::vector<int> out;
    out.reserve(couplings_.size());
    for (const auto& kv : couplings_) out.push_back(kv.first);
    return out;
}

double LatticePotential::at(int site) const {
    auto it = couplings_.find(site);
    return it == couplings_.end() ? 0.0 : it->second;
}

double LatticePotential::norm() const {
    double out = 0.0;
    for (const auto& kv : couplings_) out = std::max(out, std::abs(kv.second));
    return out;
}

double LatticePotential::sum() const {
    double out = 0.0;
    for (const auto& kv : couplings_) out += kv.second;
    return out;
}

LatticePotential LatticePotential::operator+(const LatticePotential& other) const {
    std::map<int, double> out = couplings_;
    for (const auto& [site, c] : other.couplings_) out[site] += c;
    std::erase_if(out, [](const auto& kv) { return kv.second == 0.0; });
    return LatticePotential(out);
}

LatticePotential LatticePotential::operator-(const LatticePotential& other) const {
    return *this + other * -1.0;
}

LatticePotential LatticePotential::operator*(double s) const {
    if (!std::isfinite(s)) throw InputError("LatticePotential: non-finite scale");
    std::map<int, double> out;
    if (s != 0.0)
        for (const auto& [site, c] : couplings_) out[site] = s * c;
    return LatticePotential(out);
}

LatticePotential FactoredPerturbation::potential() const {
    std::map<int, double> out;
    for (Eigen::Index i = 0; i < rank(); ++i) out[sites[i]] = j(i) * g(i) * g(i);
    return LatticePotential(out);
}

FactoredPerturbation factor_potential(const LatticePotential& v) {
    if (v.empty()) throw InputError("factor_potential: empty potential");
    FactoredPerturbation f;
    f.sites = v.sites();
    f.g.resize(v.size());
    f.j.resize(v.size());
    Eigen::Index i = 0;
    for (const auto& [site, c] : v.couplings()) {
        f.g(i) = std::sqrt(std::abs(c));
        f.j(i) = c > 0.0 ? 1.0 : -1.0;
        ++i;
    }
    return f;
}

// ------------------------------------------------------------- free resolvent

SpectralPoint SpectralPoint::off_axis(Complex z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw InputError("SpectralPoint: non-finite z");
    if (z.imag() == 0.0 && std::abs(z.real()) <= 2.0)
        throw DomainError("SpectralPoint: z lies on the band [-2, 2]; use plus_i0");
    return SpectralPoint(z, false);
}

SpectralPoint SpectralPoint::plus_i0(double lambda) {
    if (!std::isfinite(lambda)) throw InputError("SpectralPoint: non-finite lambda");
    if (std::abs(lambda) >= 2.0) throw BandEdgeError("SpectralPoint: lambda + i0 requires |lambda| < 2");
    return SpectralPoint(Complex(lambda, 0.0), true);
}

Complex resolvent_root(const SpectralPoint& p) {
    if (p.is_boundary()) {
        const double k = std::acos(p.lambda() / 2.0);
        return std::polar(1.0, -k);
    }
    const Complex z = p.z();
    const Complex s = std::sqrt(z * z - 4.0);
    // The larger root is computed without cancellation; the product of roots is 1.
    const Complex big = std::abs(z + s) >= std::abs(z - s) ? 0.5 * (z + s) : 0.5 * (z - s);
    return 1.0 / big;
}

Complex free_resolvent_kernel(const SpectralPoint& p, int n, int m) {
    const Complex zeta = resolvent_root(p);
    return std::pow(zeta, std::abs(n - m)) / (zeta - 1.0 / zeta);
}

MatrixXc free_resolvent_block(const SpectralPoint& p, const std::vector<int>& sites) {
    const Complex zeta = resolvent_root(p);
    const Complex denom = zeta - 1.0 / zeta;
    const auto m = static_cast<Eigen::Index>(sites.size());
    MatrixXc out(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) out(i, j) = std::pow(zeta, std::abs(sites[i] - sites[j])) / denom;
    return out;
}

double free_resolvent_kernel_derivative(double energy, int n, int m) {
    if (std::abs(energy) <= 2.0) throw DomainError("free_resolvent_kernel_derivative: |E| must exceed 2");
    // zeta(E) real with |zeta| < 1, zeta' = zeta^2 / (zeta^2 - 1).
    const double zeta = std::real(resolvent_root(SpectralPoint::off_axis(energy)));
    const double dzeta = zeta * zeta / (zeta * zeta - 1.0);
    const int d = std::abs(n - m);
    const double denom = zeta - 1.0 / zeta;
    const double num = std::pow(zeta, d);
    const double dnum = d == 0 ? 0.0 : d * std::pow(zeta, d - 1);
    const double ddenom = 1.0 + 1.0 / (zeta * zeta);
    return (dnum * denom - num * ddenom) / (denom * denom) * dzeta;
}

BoundaryT::BoundaryT(SpectralPoint p, MatrixXc t)
    : point(p), matrix(std::move(t)), b((matrix - matrix.adjoint()) / Complex(0.0, 2.0)) {}

BoundaryT sandwiched_resolvent(const FactoredPerturbation& f, const SpectralPoint& p) {
    MatrixXc t = free_resolvent_block(p, f.sites);
    const VectorXc g = f.g.cast<Complex>();
    return BoundaryT(p, g.asDiagonal() * t * g.asDiagonal());
}

// --------------------------------------------------------------- channel maps

double band_momentum(double lambda, double edge_margin) {
    if (!std::isfinite(lambda) || std::abs(lambda) >= 2.0 - edge_margin)
        throw BandEdgeError("lambda = " + std::to_string(lambda) + " is within the band-edge margin");
    return std::acos(lambda / 2.0);
}

double channel_normalization(double lambda, double edge_margin) {
    return 1.0 / (4.0 * std::numbers::pi * std::sin(band_momentum(lambda, edge_margin)));
}

Eigen::Matrix<Complex, 2, Eigen::Dynamic> plane_wave_map(const std::vector<int>& sites, double lambda,
                                                         double edge_margin) {
    const double k = band_momentum(lambda, edge_margin);
    const double rho = std::sqrt(channel_normalization(lambda, edge_margin));
    Eigen::Matrix<Complex, 2, Eigen::Dynamic> z(2, static_cast<Eigen::Index>(sites.size()));
    for (std::size_t j = 0; j < sites.size(); ++j) {
        z(0, j) = std::polar(rho, -k * sites[j]);
        z(1, j) = std::polar(rho, k * sites[j]);
    }
    return z;
}

ChannelMap channel_map(const FactoredPerturbation& f, double lambda, double edge_margin) {
    Eigen::Matrix<Complex, 2, Eigen::Dynamic> z = plane_wave_map(f.sites, lambda, edge_margin);
    z = z * f.g.cast<Complex>().asDiagonal();
    return {lambda, z};
}

Eigen::Matrix2cd perturbation_kernel(const FactoredPerturbation& f, double lambda, double lambda_prime,
                                     double edge_margin) {
    const auto z = channel_map(f, lambda, edge_margin).z;
    const auto zp = channel_map(f, lambda_prime, edge_margin).z;
    return z * f.j.cast<Complex>().asDiagonal() * zp.adjoint();
}

// ---------------------------------------------------------------- bound states

BoundStates bound_states(const FactoredPerturbation& f, double r) {
    if (!std::isfinite(r)) throw InputError("bound_states: non-finite coupling r");
    if (r == 0.0) return {};
    return bound_states(f.potential() * r);
}

BoundStates bound_states(const LatticePotential& v) {
    BoundStates out;
    if (v.empty()) return out;
    const FactoredPerturbation f = factor_potential(v);
    const int j_negative = static_cast<int>((f.j.array() < 0.0).count());
    // ||H0 + V|| <= 2 + ||V||.
    const double reach = 2.0 + v.norm() + 1.0;
    const double edge = 2.0 + kBisectionTolerance;

    std::vector<double> upper;
    auto above = [&](double e) { return count_above(f, j_negative, e); };
    isolate(above, edge, reach, above(edge), above(reach), upper);

    std::vector<double> lower;
    // count_below is increasing in E; isolate() expects the count to decrease
    // from lo to hi, so run it on the reflected axis.
    auto below_reflected = [&](double e) { return count_below(f, j_negative, -e); };
    isolate(below_reflected, edge, reach, below_reflected(edge), below_reflected(reach), lower);
    for (double& e : lower) e = -e;

    out.energies = lower;
    out.energies.insert(out.energies.end(), upper.begin(), upper.end());
    std::sort(out.energies.begin(), out.energies.end());
    for (double e : out.energies)
        if (std::abs(e) - 2.0 < 10.0 * kBisectionTolerance) out.near_band_edge = true;
    return out;
}

int bound_states_beyond(const LatticePotential& v, double energy) {
    if (std::abs(energy) <= 2.0) throw DomainError("bound_states_beyond: |E| must exceed 2");
    if (v.empty()) return 0;
    const FactoredPerturbation f = factor_potential(v);
    const int j_negative = static_cast<int>((f.j.array() < 0.0).count());
    return energy > 0.0 ? count_above(f, j_negative, energy) : count_below(f, j_negative, energy);
}

BoundStateWeight bound_state_weight(const LatticePotential& v, double energy, const LatticePotential& direction) {
    std::set<int> site_set;
    for (int n : v.sites()) site_set.insert(n);
    for (int n : direction.sites()) site_set.insert(n);
    const std::vector<int> sites(site_set.begin(), site_set.end());
    const auto m = static_cast<Eigen::Index>(sites.size());

    Eigen::VectorXd p(m);
    Eigen::VectorXd d(m);
    Eigen::MatrixXd dr0(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        p(i) = v.at(sites[i]);
        d(i) = direction.at(sites[i]);
        for (Eigen::Index j = 0; j < m; ++j) dr0(i, j) = free_resolvent_kernel_derivative(energy, sites[i], sites[j]);
    }
    const Eigen::MatrixXd r0 = free_resolvent_block(SpectralPoint::off_axis(energy), sites).real();
    // psi = -R0(E) V psi; on the sites, (1 + R0 P) u = 0.
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(m, m) + r0 * p.asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(system, Eigen::ComputeFullV);
    const Eigen::VectorXd u = svd.matrixV().col(m - 1);
    const Eigen::VectorXd pu = p.asDiagonal() * u;
    // ||psi||^2 = (Pu)* (H0 - E)^{-2} (Pu) = (Pu)* dR0/dE (Pu).
    const double norm2 = pu.dot(dr0 * pu);
    return {energy, u.dot(d.asDiagonal() * u) / norm2};
}

// ------------------------------------------------------------------ truncation

namespace {

int truncation_offset(const LatticePotential& v, int n) {
    if (n < 3 || n % 2 == 0) throw ConfigError("truncate: N must be odd and >= 3");
    const int half = (n - 1) / 2;
    for (int site : v.sites())
        if (std::abs(site) > half) throw ConfigError("truncate: potential support outside the window");
    return half;
}

}  // namespace

HermitianMatrix<double> truncate(const LatticePotential& v, int n) {
    const int half = truncation_offset(v, n);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        h(i, i + 1) = 1.0;
        h(i + 1, i) = 1.0;
    }
    for (const auto& [site, c] : v.couplings()) h(site + half, site + half) = c;
    return HermitianMatrix<double>(h);
}

Eigen::VectorXd truncated_spectrum(const LatticePotential& v, int n) {
    const int half = truncation_offset(v, n);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    for (const auto& [site, c] : v.couplings()) diag(site + half) = c;
    const Eigen::VectorXd sub = Eigen::VectorXd::Ones(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw InputError("truncated_spectrum: no convergence");
    return solver.eigenvalues();
}

}  // namespace sfl
