#include "sfl/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <memory>
#include <set>

namespace sfl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr Complex kI{0.0, 1.0};
constexpr double kMatchTieTolerance = 1e-12;
constexpr double kMaxStepNorm = 0.5;
constexpr int kMaxRefineDepth = 24;

// Resonance test shared by every continuation: cond(M) < 1e12.
void check_invertible(const MatrixXc& m, double lambda, double r) {
    if (m.size() == 0) return;
    Eigen::JacobiSVD<MatrixXc> svd(m);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || sv(0) / smin >= kResonanceCondition)
        throw ResonanceError(lambda, r,
                             "resonance: 1 + r T0 J is singular at lambda = " + std::to_string(lambda) +
                                 ", r = " + std::to_string(r));
}

double wrap_angle(double a) {
    a = std::remainder(a, kTwoPi);
    return a <= -std::numbers::pi ? a + kTwoPi : a;
}

Eigen::Vector2cd unitary_eigenvalues(const Eigen::Matrix2cd& s) {
    Eigen::ComplexEigenSolver<Eigen::Matrix2cd> solver(s, false);
    return solver.eigenvalues();
}

}  // namespace

// -------------------------------------------------------------------- paths

OperatorPath::OperatorPath(std::vector<LatticePotential> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 2) throw ConfigError("OperatorPath: need at least one segment");
}

OperatorPath OperatorPath::straight(const LatticePotential& v) { return OperatorPath({LatticePotential{}, v}); }

OperatorPath OperatorPath::through(std::vector<LatticePotential> vertices) { return OperatorPath(std::move(vertices)); }

OperatorPath OperatorPath::from_segments(
    const std::vector<std::pair<LatticePotential, LatticePotential>>& segments) {
    if (segments.empty()) throw ConfigError("OperatorPath: need at least one segment");
    std::vector<LatticePotential> vertices{segments.front().first};
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (!(segments[i].first == vertices.back()))
            throw ConfigError("OperatorPath: segment " + std::to_string(i) + " does not start where the previous ends");
        vertices.push_back(segments[i].second);
    }
    return OperatorPath(std::move(vertices));
}

LatticePotential OperatorPath::direction(std::size_t segment) const {
    return vertices_.at(segment + 1) - vertices_.at(segment);
}

std::pair<std::size_t, double> OperatorPath::locate(double r) const {
    const auto n = segment_count();
    const double scaled = std::clamp(r, 0.0, 1.0) * static_cast<double>(n);
    const auto i = std::min(static_cast<std::size_t>(scaled), n - 1);
    return {i, scaled - static_cast<double>(i)};
}

LatticePotential OperatorPath::at(double r) const {
    const auto [i, s] = locate(r);
    if (s == 0.0) return vertices_[i];
    if (s == 1.0) return vertices_[i + 1];
    return vertices_[i] + direction(i) * s;
}

std::vector<double> OperatorPath::joints() const {
    std::vector<double> out;
    const auto n = segment_count();
    for (std::size_t i = 1; i < n; ++i) out.push_back(static_cast<double>(i) / static_cast<double>(n));
    return out;
}

OperatorPath OperatorPath::reversed() const {
    return OperatorPath(std::vector<LatticePotential>(vertices_.rbegin(), vertices_.rend()));
}

std::vector<int> OperatorPath::sites() const {
    std::set<int> all;
    for (const auto& v : vertices_)
        for (int n : v.sites()) all.insert(n);
    return {all.begin(), all.end()};
}

// --------------------------------------------------------------- fiber frame

FiberFrame::FiberFrame(std::vector<int> sites, double lambda, double edge_margin)
    : sites_(std::move(sites)), lambda_(lambda) {
    z_ = plane_wave_map(sites_, lambda, edge_margin);
    r0_ = free_resolvent_block(SpectralPoint::plus_i0(lambda), sites_);
}

Eigen::VectorXd FiberFrame::diagonal(const LatticePotential& p) const {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sites_.size()));
    for (const auto& [site, c] : p.couplings()) {
        auto it = std::lower_bound(sites_.begin(), sites_.end(), site);
        if (it == sites_.end() || *it != site) throw InputError("FiberFrame: potential outside the frame sites");
        d(it - sites_.begin()) = c;
    }
    return d;
}

FiberFrame::Dressing FiberFrame::dress(const LatticePotential& p, double r_tag) const {
    const auto m = static_cast<Eigen::Index>(sites_.size());
    const MatrixXc system = MatrixXc::Identity(m, m) + diagonal(p).cast<Complex>().asDiagonal() * r0_;
    check_invertible(system, lambda_, r_tag);
    MatrixXc inverse = system.partialPivLu().inverse();
    return {inverse, r0_ * inverse, z_ * inverse};
}

Eigen::Matrix2cd FiberFrame::scattering(const LatticePotential& p, double r_tag) const {
    const Dressing d = dress(p, r_tag);
    // Z P (1 + R0 P)^{-1} Z* = Z (1 + P R0)^{-1} P Z*.
    const Eigen::VectorXd pd = diagonal(p);
    return Eigen::Matrix2cd::Identity() - kTwoPi * kI * (d.channel * pd.cast<Complex>().asDiagonal() * z_.adjoint());
}

Eigen::Matrix2cd FiberFrame::infinitesimal(const Dressing& dressing, const LatticePotential& direction) const {
    const Eigen::VectorXd dd = diagonal(direction);
    return dressing.channel * dd.cast<Complex>().asDiagonal() * dressing.channel.adjoint();
}

double FiberFrame::flow_density(const Dressing& dressing, const LatticePotential& direction) const {
    const Eigen::VectorXd dd = diagonal(direction);
    const MatrixXc im = (dressing.resolvent - dressing.resolvent.adjoint()) / Complex(0.0, 2.0);
    return (dd.cast<Complex>().asDiagonal() * im).trace().real() / std::numbers::pi;
}

// ------------------------------------------------------------ single segment

ScatteringSample ScatteringSample::from_matrix(double lambda, double r, const Eigen::Matrix2cd& s) {
    ScatteringSample out;
    out.lambda = lambda;
    out.r = r;
    out.s = s;
    out.det = s.determinant();
    const Eigen::Vector2cd ev = unitary_eigenvalues(s);
    out.eigenphases << std::arg(ev(0)), std::arg(ev(1));
    for (Eigen::Index i = 0; i < 2; ++i) out.eigenphases(i) = wrap_angle(out.eigenphases(i));
    if (out.eigenphases(0) > out.eigenphases(1)) std::swap(out.eigenphases(0), out.eigenphases(1));
    out.unitarity_residual = (s.adjoint() * s - Eigen::Matrix2cd::Identity()).norm();
    return out;
}

BoundaryT t_matrix_at(const FactoredPerturbation& f, double lambda, double r) {
    const SpectralPoint p = SpectralPoint::plus_i0(lambda);
    const MatrixXc t0 = sandwiched_resolvent(f, p).matrix;
    const auto m = f.rank();
    const MatrixXc system = MatrixXc::Identity(m, m) + r * f.j.cast<Complex>().asDiagonal() * t0;
    check_invertible(system, lambda, r);
    return BoundaryT(p, t0 * system.partialPivLu().inverse());
}

ScatteringSample scattering_matrix(const FactoredPerturbation& f, double lambda, double r, double edge_margin) {
    const SpectralPoint p = SpectralPoint::plus_i0(lambda);
    const auto z = channel_map(f, lambda, edge_margin).z;
    const MatrixXc t0 = sandwiched_resolvent(f, p).matrix;
    const auto m = f.rank();
    const MatrixXc jd = f.j.cast<Complex>().asDiagonal();
    const MatrixXc system = MatrixXc::Identity(m, m) + r * t0 * jd;
    check_invertible(system, lambda, r);
    const Eigen::Matrix2cd s =
        Eigen::Matrix2cd::Identity() - kTwoPi * kI * r * (z * jd * system.partialPivLu().inverse() * z.adjoint());
    return ScatteringSample::from_matrix(lambda, r, s);
}

Complex det_scattering(const FactoredPerturbation& f, double lambda, double r) {
    const BoundaryT t0 = sandwiched_resolvent(f, SpectralPoint::plus_i0(lambda));
    const auto m = f.rank();
    const MatrixXc jd = f.j.cast<Complex>().asDiagonal();
    const MatrixXc system = MatrixXc::Identity(m, m) + r * t0.matrix * jd;
    check_invertible(system, lambda, r);
    // det(I_2 + Z X Z*) = det(I_m + X Z*Z) with pi Z*Z = Im T0.
    const MatrixXc a = Complex(0.0, -2.0) * r * jd * system.partialPivLu().inverse() * t0.b;
    return fredholm_det(a);
}

Eigen::Matrix<Complex, 2, Eigen::Dynamic> dressed_channel_map(const FactoredPerturbation& f, double lambda, double r,
                                                              double edge_margin) {
    const auto z = channel_map(f, lambda, edge_margin).z;
    const MatrixXc t0 = sandwiched_resolvent(f, SpectralPoint::plus_i0(lambda)).matrix;
    const auto m = f.rank();
    const MatrixXc system = MatrixXc::Identity(m, m) + r * f.j.cast<Complex>().asDiagonal() * t0;
    check_invertible(system, lambda, r);
    return z * system.partialPivLu().inverse();
}

InfinitesimalSM infinitesimal_sm(const FactoredPerturbation& f, double lambda, double r,
                                 const LatticePotential& direction, double edge_margin) {
    std::set<int> all(f.sites.begin(), f.sites.end());
    for (int n : direction.sites()) all.insert(n);
    const FiberFrame frame({all.begin(), all.end()}, lambda, edge_margin);
    const auto dressing = frame.dress(f.potential() * r, r);
    return {lambda, r, frame.infinitesimal(dressing, direction), frame.flow_density(dressing, direction)};
}

Eigen::Matrix2cd rebased_scattering_matrix(const FactoredPerturbation& f, double lambda, double r0, double h,
                                           double edge_margin) {
    const auto zr = dressed_channel_map(f, lambda, r0, edge_margin);
    const MatrixXc tr = t_matrix_at(f, lambda, r0).matrix;
    const auto m = f.rank();
    const MatrixXc jd = f.j.cast<Complex>().asDiagonal();
    const MatrixXc system = MatrixXc::Identity(m, m) + h * tr * jd;
    check_invertible(system, lambda, r0 + h);
    return Eigen::Matrix2cd::Identity() - kTwoPi * kI * h * (zr * jd * system.partialPivLu().inverse() * zr.adjoint());
}

// ---------------------------------------------------------------- along paths

ScatteringSample path_scattering_matrix(const OperatorPath& path, double lambda, double edge_margin) {
    const FiberFrame frame(path.sites(), lambda, edge_margin);
    const Eigen::Matrix2cd s_end = frame.scattering(path.end(), 1.0);
    const Eigen::Matrix2cd s_start = frame.scattering(path.start(), 0.0);
    return ScatteringSample::from_matrix(lambda, 1.0, s_end * s_start.adjoint());
}

MatrixPath infinitesimal_path(const OperatorPath& path, double lambda, double edge_margin) {
    auto frame = std::make_shared<const FiberFrame>(path.sites(), lambda, edge_margin);
    std::vector<LatticePotential> directions;
    for (std::size_t i = 0; i < path.segment_count(); ++i) directions.push_back(path.direction(i));
    const double rate = static_cast<double>(path.segment_count());

    MatrixPath out;
    out.a = 0.0;
    out.b = 1.0;
    out.dim = 2;
    out.hermitian = true;
    out.breakpoints = path.joints();
    out.evaluate = [frame, path, directions, rate](double r) -> MatrixXc {
        const auto [segment, s] = path.locate(r);
        const auto dressing = frame->dress(path.at(r), r);
        return kTwoPi * rate * frame->infinitesimal(dressing, directions[segment]);
    };
    return out;
}

ScatteringSample scattering_via_texp(const OperatorPath& path, double lambda, int r_steps, double edge_margin) {
    const TexpResult result = texp(infinitesimal_path(path, lambda, edge_margin), r_steps);
    return ScatteringSample::from_matrix(lambda, 1.0, result.value);
}

std::vector<double> uniform_grid(int points) {
    if (points < 1) throw ConfigError("uniform_grid: need at least one point");
    if (points == 1) return {0.0};
    std::vector<double> out(points);
    for (int i = 0; i < points; ++i) out[i] = static_cast<double>(i) / (points - 1);
    return out;
}

namespace {

struct Tracker {
    const OperatorPath& path;
    const FiberFrame& frame;
    Eigen::Matrix2cd start_adjoint;
    bool ambiguous = false;

    Eigen::Matrix2cd s_at(double r) const { return frame.scattering(path.at(r), r) * start_adjoint; }

    // Pair the eigenvalues of s with the unwound phases; returns false on a tie.
    static bool match(const Eigen::Vector2d& phases, const Eigen::Matrix2cd& s, Eigen::Vector2d& next) {
        const Eigen::Vector2cd ev = unitary_eigenvalues(s);
        Eigen::Matrix2d step;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) step(a, b) = std::arg(ev(b) * std::polar(1.0, -phases(a)));
        const double straight = std::abs(step(0, 0)) + std::abs(step(1, 1));
        const double crossed = std::abs(step(0, 1)) + std::abs(step(1, 0));
        if (crossed < straight) {
            next << phases(0) + step(0, 1), phases(1) + step(1, 0);
        } else {
            next << phases(0) + step(0, 0), phases(1) + step(1, 1);
        }
        if (std::abs(crossed - straight) > kMatchTieTolerance) return true;
        // Either pairing gives the same phase set when one side is degenerate.
        const double gap = std::abs(wrap_angle(phases(0) - phases(1)));
        return gap < kMatchTieTolerance || std::abs(ev(0) - ev(1)) < kMatchTieTolerance;
    }

    // Advance unwound phases from (r_a, s_a) to r_b, subdividing as needed.
    Eigen::Vector2d advance(double r_a, const Eigen::Matrix2cd& s_a, const Eigen::Vector2d& phases, double r_b,
                            const Eigen::Matrix2cd& s_b, int depth) {
        const double jump = (s_b - s_a).operatorNorm();
        Eigen::Vector2d next;
        const bool clean = match(phases, s_b, next);
        const bool identical = jump == 0.0;
        if ((clean && jump < kMaxStepNorm) || identical) return next;
        if (depth >= kMaxRefineDepth) {
            ambiguous = ambiguous || !clean;
            return next;
        }
        const double r_mid = 0.5 * (r_a + r_b);
        const Eigen::Matrix2cd s_mid = s_at(r_mid);
        const Eigen::Vector2d mid = advance(r_a, s_a, phases, r_mid, s_mid, depth + 1);
        return advance(r_mid, s_mid, mid, r_b, s_b, depth + 1);
    }
};

}  // namespace

EigenphasePath eigenphase_track(const OperatorPath& path, double lambda, const std::vector<double>& r_grid,
                                double edge_margin) {
    if (r_grid.empty()) throw ConfigError("eigenphase_track: empty r grid");
    for (std::size_t i = 0; i < r_grid.size(); ++i) {
        if (!(r_grid[i] >= 0.0 && r_grid[i] <= 1.0)) throw ConfigError("eigenphase_track: r outside [0, 1]");
        if (i > 0 && !(r_grid[i] > r_grid[i - 1])) throw ConfigError("eigenphase_track: r grid must ascend");
    }
    const FiberFrame frame(path.sites(), lambda, edge_margin);
    Tracker tracker{path, frame, frame.scattering(path.start(), 0.0).adjoint()};

    EigenphasePath out;
    out.lambda = lambda;
    out.r_grid = r_grid;
    out.theta.resize(2, static_cast<Eigen::Index>(r_grid.size()));

    // Phases start at zero at r = 0 and are advanced to the first grid point.
    Eigen::Vector2d phases = Eigen::Vector2d::Zero();
    double r_prev = 0.0;
    Eigen::Matrix2cd s_prev = Eigen::Matrix2cd::Identity();
    for (std::size_t k = 0; k < r_grid.size(); ++k) {
        const Eigen::Matrix2cd s = tracker.s_at(r_grid[k]);
        if (r_grid[k] > r_prev) phases = tracker.advance(r_prev, s_prev, phases, r_grid[k], s, 0);
        out.theta.col(static_cast<Eigen::Index>(k)) = phases;
        r_prev = r_grid[k];
        s_prev = s;
    }
    out.degenerate_crossing = tracker.ambiguous;
    return out;
}

EigenphasePath eigenphase_track(const FactoredPerturbation& f, double lambda, const std::vector<double>& r_grid,
                                double edge_margin) {
    return eigenphase_track(OperatorPath::straight(f.potential()), lambda, r_grid, edge_margin);
}

// --------------------------------------------------------------- mu-invariant

MuValue mu_from_phases(const Eigen::Vector2d& final_phases, double theta) {
    MuValue out;
    for (Eigen::Index j = 0; j < 2; ++j) {
        const double x = (final_phases(j) - theta) / kTwoPi;
        out.value += 1 + static_cast<int>(std::floor(x));
        if (std::abs(x - std::round(x)) < 1e-12) out.on_boundary = true;
    }
    return out;
}

MuValue mu_invariant(const OperatorPath& path, double lambda, double theta, int r_points, double edge_margin) {
    if (!(theta >= 0.0 && theta < kTwoPi)) throw ConfigError("mu_invariant: theta must lie in [0, 2 pi)");
    const EigenphasePath track = eigenphase_track(path, lambda, uniform_grid(r_points), edge_margin);
    return mu_from_phases(track.theta.col(track.theta.cols() - 1), theta);
}

double mu_integral_exact(const Eigen::Vector2d& final_phases) {
    // mu is piecewise constant on [0, 2 pi) with jumps where theta = theta_j mod 2 pi.
    std::vector<double> cuts{0.0, kTwoPi};
    for (Eigen::Index j = 0; j < 2; ++j) {
        double c = std::fmod(final_phases(j), kTwoPi);
        if (c < 0.0) c += kTwoPi;
        cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double width = cuts[i + 1] - cuts[i];
        if (width <= 0.0) continue;
        integral += width * mu_from_phases(final_phases, 0.5 * (cuts[i] + cuts[i + 1])).value;
    }
    return -integral / kTwoPi;
}

double mu_integral_grid(const Eigen::Vector2d& final_phases, int points) {
    if (points < 1) throw ConfigError("mu_integral_grid: need at least one theta point");
    double sum = 0.0;
    for (int k = 0; k < points; ++k) sum += mu_from_phases(final_phases, kTwoPi * (k + 0.5) / points).value;
    return -sum / points;
}

}  // namespace sfl
