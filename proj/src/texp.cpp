#include "sfl/texp.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "sfl/quadrature.hpp"

namespace sfl {

namespace {

constexpr Complex kMinusI{0.0, -1.0};

struct Piece {
    double lo;
    double hi;
    int steps;
};

std::vector<double> piece_edges(const MatrixPath& path) {
    if (!(path.b > path.a)) throw ConfigError("MatrixPath: empty or reversed interval");
    std::vector<double> edges{path.a};
    for (double t : path.breakpoints) {
        if (!(t > edges.back()) || !(t < path.b))
            throw ConfigError("MatrixPath: breakpoints must be ascending and inside (a, b)");
        edges.push_back(t);
    }
    edges.push_back(path.b);
    return edges;
}

std::vector<Piece> split_steps(const MatrixPath& path, int steps) {
    const std::vector<double> edges = piece_edges(path);
    const int pieces = static_cast<int>(edges.size()) - 1;
    if (steps < pieces)
        throw ConfigError("texp: step budget cannot give every breakpoint interval a step");
    const double length = path.b - path.a;
    std::vector<Piece> out;
    int assigned = 0;
    for (int p = 0; p < pieces; ++p) {
        const int remaining_pieces = pieces - p - 1;
        int n = p + 1 == pieces
                    ? steps - assigned
                    : static_cast<int>(std::lround(steps * (edges[p + 1] - edges[p]) / length));
        n = std::clamp(n, 1, steps - assigned - remaining_pieces);
        out.push_back({edges[p], edges[p + 1], n});
        assigned += n;
    }
    return out;
}

MatrixXc checked_eval(const MatrixPath& path, double t) {
    MatrixXc a = path.evaluate(t);
    if (a.rows() != path.dim || a.cols() != path.dim)
        throw InputError("MatrixPath: evaluate returned a matrix of the wrong size");
    if (!detail::all_finite(a)) throw InputError("MatrixPath: non-finite evaluation");
    return a;
}

double unitarity_defect(const MatrixXc& x, bool hermitian) {
    if (!hermitian) return std::numeric_limits<double>::quiet_NaN();
    return (x.adjoint() * x - MatrixXc::Identity(x.rows(), x.cols())).norm();
}

}  // namespace

MatrixPath MatrixPath::restricted(double from, double to) const {
    MatrixPath out = *this;
    out.a = from;
    out.b = to;
    out.breakpoints.clear();
    for (double t : breakpoints)
        if (t > from && t < to) out.breakpoints.push_back(t);
    return out;
}

MatrixXc step_propagator(const MatrixXc& a, double dt, bool hermitian) {
    if (hermitian) {
        Eigen::SelfAdjointEigenSolver<MatrixXc> solver(a);
        const VectorXc phases =
            (kMinusI * dt * solver.eigenvalues().cast<Complex>()).array().exp().matrix();
        return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
    }
    return MatrixXc((kMinusI * dt * a).exp());
}

TexpResult texp(const MatrixPath& path, int steps) {
    if (steps < 1) throw ConfigError("texp: steps must be >= 1");
    if (!path.evaluate) throw ConfigError("texp: path has no evaluation function");
    MatrixXc x = MatrixXc::Identity(path.dim, path.dim);
    int count = 0;
    for (const Piece& piece : split_steps(path, steps)) {
        const double dt = (piece.hi - piece.lo) / piece.steps;
        for (int k = 0; k < piece.steps; ++k) {
            const double mid = piece.lo + (k + 0.5) * dt;
            x = step_propagator(checked_eval(path, mid), dt, path.hermitian) * x;
            ++count;
        }
    }
    return {x, count, TexpScheme::product_midpoint, unitarity_defect(x, path.hermitian)};
}

TexpResult texp_series(const MatrixPath& path, int order, int quad_points) {
    if (order < 1) throw ConfigError("texp_series: order must be >= 1");
    if (quad_points < 1) throw ConfigError("texp_series: need at least one quadrature point");
    if (!path.evaluate) throw ConfigError("texp_series: path has no evaluation function");

    const Eigen::Index d = path.dim;
    const GaussLegendreRule rule = gauss_legendre(quad_points);
    const Eigen::MatrixXd q = legendre_integration_matrix(rule);
    const std::vector<double> edges = piece_edges(path);

    // I_0 = 1, I_k(t) = int_a^t A(s) I_{k-1}(s) ds, carried across pieces by
    // their values at the left edge of each piece.
    std::vector<MatrixXc> at_edge(order + 1, MatrixXc::Zero(d, d));
    at_edge[0] = MatrixXc::Identity(d, d);

    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double lo = edges[p];
        const double half = 0.5 * (edges[p + 1] - lo);
        std::vector<MatrixXc> a_nodes;
        a_nodes.reserve(quad_points);
        for (int j = 0; j < quad_points; ++j)
            a_nodes.push_back(checked_eval(path, lo + half * (rule.nodes(j) + 1.0)));

        // level[k][j]: k-th iterated integral I_k at node j of this piece.
        std::vector<std::vector<MatrixXc>> level(order + 1, std::vector<MatrixXc>(quad_points));
        for (int j = 0; j < quad_points; ++j) level[0][j] = at_edge[0];
        std::vector<MatrixXc> next_edge(order + 1);
        next_edge[0] = at_edge[0];
        for (int k = 1; k <= order; ++k) {
            std::vector<MatrixXc> integrand(quad_points);
            for (int j = 0; j < quad_points; ++j) integrand[j] = a_nodes[j] * level[k - 1][j];
            MatrixXc total = MatrixXc::Zero(d, d);
            for (int j = 0; j < quad_points; ++j) total += rule.weights(j) * integrand[j];
            next_edge[k] = at_edge[k] + half * total;
            for (int i = 0; i < quad_points; ++i) {
                MatrixXc acc = MatrixXc::Zero(d, d);
                for (int j = 0; j < quad_points; ++j) acc += q(i, j) * integrand[j];
                level[k][i] = at_edge[k] + half * acc;
            }
        }
        at_edge = std::move(next_edge);
    }

    MatrixXc x = MatrixXc::Zero(d, d);
    Complex factor{1.0, 0.0};
    for (int k = 0; k <= order; ++k) {
        x += factor * at_edge[k];
        factor *= kMinusI;
    }
    const int evaluations = quad_points * static_cast<int>(edges.size() - 1);
    return {x, evaluations, TexpScheme::series, unitarity_defect(x, path.hermitian)};
}

Complex integrate_trace(const MatrixPath& path, int steps, int nodes_per_cell) {
    const GaussLegendreRule rule = gauss_legendre(nodes_per_cell);
    Complex sum{0.0, 0.0};
    for (const Piece& piece : split_steps(path, steps)) {
        const double dt = (piece.hi - piece.lo) / piece.steps;
        for (int k = 0; k < piece.steps; ++k) {
            const double lo = piece.lo + k * dt;
            for (int j = 0; j < nodes_per_cell; ++j)
                sum += 0.5 * dt * rule.weights(j) *
                       checked_eval(path, lo + 0.5 * dt * (rule.nodes(j) + 1.0)).trace();
        }
    }
    return sum;
}

}  // namespace sfl
