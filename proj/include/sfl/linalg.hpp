#ifndef SFL_LINALG_HPP
#define SFL_LINALG_HPP

// Dense Hermitian matrix services: eigendecomposition, functions of
// matrices, traces and Fredholm determinants of finite matrices.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <type_traits>

#include <Eigen/Dense>

#include "sfl/errors.hpp"

namespace sfl {

using Complex = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Scalar real-valued function of a real argument, applied spectrally.
using RealFunction = std::function<double(double)>;

namespace detail {

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& a) {
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (!std::isfinite(std::abs(a(i, j)))) return false;
    return true;
}

}  // namespace detail

/// Square matrix equal to its conjugate transpose.
///
/// Inputs whose Hermitian defect exceeds 1e-12 (relative to the largest
/// entry, floored at 1) are rejected; smaller defects are removed by
/// symmetrization so that stored entries stay within 1e-12 of the input.
template <typename Scalar>
class HermitianMatrix {
  public:
    using MatrixType = DenseMatrix<Scalar>;

    static constexpr double kTolerance = 1e-12;

    explicit HermitianMatrix(const MatrixType& entries) {
        if (entries.rows() < 1 || entries.rows() != entries.cols())
            throw InputError("HermitianMatrix: expected a non-empty square matrix");
        if (!detail::all_finite(entries))
            throw InputError("HermitianMatrix: non-finite entry");
        const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
        const double defect = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
        if (defect > kTolerance * scale)
            throw InputError("HermitianMatrix: input is not Hermitian");
        entries_ = (entries + entries.adjoint()) / 2.0;
    }

    static HermitianMatrix identity(Eigen::Index n) {
        return HermitianMatrix(MatrixType::Identity(n, n));
    }

    Eigen::Index dim() const noexcept { return entries_.rows(); }
    const MatrixType& matrix() const noexcept { return entries_; }
    Scalar operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

    Scalar trace() const { return entries_.trace(); }

    HermitianMatrix operator+(const HermitianMatrix& other) const {
        check_same_dim(other);
        return HermitianMatrix(entries_ + other.entries_);
    }
    HermitianMatrix operator-(const HermitianMatrix& other) const {
        check_same_dim(other);
        return HermitianMatrix(entries_ - other.entries_);
    }
    HermitianMatrix operator*(double s) const { return HermitianMatrix(entries_ * s); }

  private:
    void check_same_dim(const HermitianMatrix& other) const {
        if (other.dim() != dim()) throw InputError("HermitianMatrix: dimension mismatch");
    }

    MatrixType entries_;
};

/// Unitary diagonalization H = U diag(eigenvalues) U*, eigenvalues ascending.
template <typename Scalar>
struct EigenSystem {
    Eigen::VectorXd eigenvalues;
    DenseMatrix<Scalar> eigenvectors;

    DenseMatrix<Scalar> reconstruct() const {
        return eigenvectors * eigenvalues.template cast<Scalar>().asDiagonal() *
               eigenvectors.adjoint();
    }
};

template <typename Scalar>
EigenSystem<Scalar> eigh(const HermitianMatrix<Scalar>& h) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> solver(h.matrix(), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw InputError("eigh: eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Eigenvalues only, ascending. Cheaper than eigh for large matrices.
template <typename Scalar>
Eigen::VectorXd eigvalsh(const HermitianMatrix<Scalar>& h) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> solver(h.matrix(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw InputError("eigvalsh: eigensolver did not converge");
    return solver.eigenvalues();
}

namespace detail {

inline Eigen::VectorXd apply_spectrally(const Eigen::VectorXd& eigenvalues, const RealFunction& f) {
    Eigen::VectorXd out(eigenvalues.size());
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        out(i) = f(eigenvalues(i));
        if (!std::isfinite(out(i)))
            throw EvaluationError("matrix_function: f is not finite on the spectrum");
    }
    return out;
}

}  // namespace detail

template <typename Scalar>
HermitianMatrix<Scalar> matrix_function(const EigenSystem<Scalar>& es, const RealFunction& f) {
    const Eigen::VectorXd fv = detail::apply_spectrally(es.eigenvalues, f);
    DenseMatrix<Scalar> out =
        es.eigenvectors * fv.template cast<Scalar>().asDiagonal() * es.eigenvectors.adjoint();
    return HermitianMatrix<Scalar>(out);
}

/// f(H) = U f(diag) U*.
template <typename Scalar>
HermitianMatrix<Scalar> matrix_function(const HermitianMatrix<Scalar>& h, const RealFunction& f) {
    return matrix_function(eigh(h), f);
}

/// Tr f(H), evaluated from the spectrum alone.
template <typename Scalar>
double trace_function(const HermitianMatrix<Scalar>& h, const RealFunction& f) {
    return detail::apply_spectrally(eigvalsh(h), f).sum();
}

/// det(I + A) through a partially pivoted LU factorization.
template <typename Derived>
typename Derived::Scalar fredholm_det(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    if (a.rows() != a.cols()) throw InputError("fredholm_det: matrix must be square");
    if (!detail::all_finite(a)) throw InputError("fredholm_det: non-finite entry");
    if (a.rows() == 0) return Scalar(1);
    DenseMatrix<Scalar> m = DenseMatrix<Scalar>::Identity(a.rows(), a.cols()) + a;
    return Eigen::PartialPivLU<DenseMatrix<Scalar>>(m).determinant();
}

/// Number of eigenvalues in (-inf, lambda]; `eigenvalues` must be ascending.
inline Eigen::Index count_at_most(const Eigen::VectorXd& eigenvalues, double lambda) {
    const double* first = eigenvalues.data();
    const double* last = first + eigenvalues.size();
    return std::upper_bound(first, last, lambda) - first;
}

/// Tr(V E_{(-inf, lambda]}) for the spectral projection of the diagonalized operator.
/// The closed interval includes an eigenvalue equal to lambda.
template <typename Scalar>
double projected_trace(const HermitianMatrix<Scalar>& v, const EigenSystem<Scalar>& es, double lambda) {
    const Eigen::Index k = count_at_most(es.eigenvalues, lambda);
    if (k == 0) return 0.0;
    const auto u = es.eigenvectors.leftCols(k);
    return std::real((u.adjoint() * v.matrix() * u).trace());
}

}  // namespace sfl

#endif  // SFL_LINALG_HPP
