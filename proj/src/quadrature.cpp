#include "sfl/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "sfl/errors.hpp"

namespace sfl {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre_with_derivative(int n, double x) {
    double p0 = 1.0;
    double p1 = x;
    if (n == 0) return {1.0, 0.0};
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}

}  // namespace

double legendre(int n, double x) {
    if (n == 0) return 1.0;
    return legendre_with_derivative(n, x).first;
}

GaussLegendreRule gauss_legendre(int n) {
    if (n < 1) throw ConfigError("gauss_legendre: need at least one node");
    GaussLegendreRule rule{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Tricomi initial guess, then Newton.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            auto [p, d] = legendre_with_derivative(n, x);
            dp = d;
            const double dx = p / d;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        dp = legendre_with_derivative(n, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes(i) = -x;
        rule.nodes(n - 1 - i) = x;
        rule.weights(i) = w;
        rule.weights(n - 1 - i) = w;
    }
    if (n % 2 == 1) rule.nodes(n / 2) = 0.0;
    return rule;
}

GaussLegendreRule composite_gauss_legendre(int n, int panels, double a, double b) {
    if (panels < 1) throw ConfigError("composite_gauss_legendre: need at least one panel");
    const GaussLegendreRule base = gauss_legendre(n);
    GaussLegendreRule out{Eigen::VectorXd(n * panels), Eigen::VectorXd(n * panels)};
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        for (int i = 0; i < n; ++i) {
            out.nodes(p * n + i) = lo + 0.5 * width * (base.nodes(i) + 1.0);
            out.weights(p * n + i) = 0.5 * width * base.weights(i);
        }
    }
    return out;
}

double integrate(const std::function<double(double)>& f, double a, double b, int n, int panels) {
    const GaussLegendreRule rule = composite_gauss_legendre(n, panels, a, b);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) sum += rule.weights(i) * f(rule.nodes(i));
    return sum;
}

Eigen::MatrixXd legendre_integration_matrix(const GaussLegendreRule& rule) {
    const Eigen::Index n = rule.nodes.size();
    // Interpolant in the Legendre basis: y = V c, V_ij = P_j(x_i).
    Eigen::MatrixXd vandermonde(n, n);
    Eigen::MatrixXd integrated(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = rule.nodes(i);
        for (Eigen::Index j = 0; j < n; ++j) {
            vandermonde(i, j) = legendre(static_cast<int>(j), x);
            // int_{-1}^{x} P_j = (P_{j+1} - P_{j-1}) / (2j + 1), j >= 1.
            integrated(i, j) =
                j == 0 ? x + 1.0
                       : (legendre(static_cast<int>(j + 1), x) - legendre(static_cast<int>(j - 1), x)) /
                             (2.0 * j + 1.0);
        }
    }
    return integrated * vandermonde.partialPivLu().inverse();
}

}  // namespace sfl
