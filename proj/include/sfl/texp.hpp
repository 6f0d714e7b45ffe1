#ifndef SFL_TEXP_HPP
#define SFL_TEXP_HPP

// Chronological (time-ordered) exponential X(b) of dX/dt = (1/i) A(t) X(t),
// X(a) = 1, for a piecewise-continuous matrix path A.

#include <functional>
#include <vector>

#include "sfl/linalg.hpp"

namespace sfl {

/// Matrix-valued path t -> A(t) on [a, b], continuous between breakpoints.
struct MatrixPath {
    double a = 0.0;
    double b = 1.0;
    Eigen::Index dim = 1;
    std::function<MatrixXc(double)> evaluate;
    /// Ascending discontinuity points strictly inside (a, b).
    std::vector<double> breakpoints;
    /// Set when A(t) is Hermitian for every t; enables the unitary step factor.
    bool hermitian = false;

    /// Same path restricted to [from, to] (breakpoints outside are dropped).
    MatrixPath restricted(double from, double to) const;
};

enum class TexpScheme { product_midpoint, series };

struct TexpResult {
    MatrixXc value;
    int step_count = 0;
    TexpScheme scheme = TexpScheme::product_midpoint;
    /// ||X*X - I||_F, meaningful when the path is Hermitian (NaN otherwise).
    double unitarity_defect = 0.0;
};

/// exp(-i dt A): spectral for Hermitian A, Pade scaling-and-squaring otherwise.
MatrixXc step_propagator(const MatrixXc& a, double dt, bool hermitian);

/// Ordered product of midpoint factors exp((dt/i) A(t_mid)), later times on the left.
/// The grid is split at breakpoints; each piece gets steps proportional to its
/// length and at least one.
TexpResult texp(const MatrixPath& path, int steps);

/// Truncated iterated-integral series of the chronological exponential up to
/// `order`, each nested integral done by spectral Gauss-Legendre collocation
/// with `quad_points` nodes per continuous piece.
TexpResult texp_series(const MatrixPath& path, int order, int quad_points);

/// Integral of Tr A(t) over [a, b] by Gauss-Legendre panels aligned with the
/// texp grid of `steps` cells.
Complex integrate_trace(const MatrixPath& path, int steps, int nodes_per_cell = 4);

}  // namespace sfl

#endif  // SFL_TEXP_HPP
