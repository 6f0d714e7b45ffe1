#ifndef SFL_ERRORS_HPP
#define SFL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sfl {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed numerical input (non-finite entries, non-Hermitian data, bad shapes).
class InputError : public Error {
  public:
    using Error::Error;
};

/// A user-supplied function produced a non-finite value on the spectrum.
class EvaluationError : public Error {
  public:
    using Error::Error;
};

/// Inconsistent configuration: step budgets, truncation windows, config files.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Spectral parameter outside the domain of a model operation.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Energy too close to (or outside) the band edges +-2.
class BandEdgeError : public DomainError {
  public:
    using DomainError::DomainError;
};

/// 1 + r T0(lambda + i0) J is numerically singular at (lambda, r).
class ResonanceError : public DomainError {
  public:
    ResonanceError(double lambda, double r, const std::string& what)
        : DomainError(what), lambda_(lambda), r_(r) {}

    double lambda() const noexcept { return lambda_; }
    double r() const noexcept { return r_; }

  private:
    double lambda_;
    double r_;
};

}  // namespace sfl

#endif  // SFL_ERRORS_HPP
