#ifndef SFL_QUADRATURE_HPP
#define SFL_QUADRATURE_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace sfl {

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
struct GaussLegendreRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

GaussLegendreRule gauss_legendre(int n);

/// Nodes and weights of `panels` equal copies of the n-point rule on [a, b].
GaussLegendreRule composite_gauss_legendre(int n, int panels, double a, double b);

/// Integral of f over [a, b] with a composite n-point rule.
double integrate(const std::function<double(double)>& f, double a, double b, int n, int panels = 1);

/// Cumulative integration matrix Q on the Gauss-Legendre nodes of [-1, 1]:
/// (Q y)_i = integral from -1 to x_i of the interpolant of y.
Eigen::MatrixXd legendre_integration_matrix(const GaussLegendreRule& rule);

/// Legendre polynomial P_n(x).
double legendre(int n, double x);

}  // namespace sfl

#endif  // SFL_QUADRATURE_HPP
