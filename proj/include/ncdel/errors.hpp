#pragma once

#include <stdexcept>
#include <string>

namespace ncdel {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainViolation : Error {
  double norm;
  double bound;
  DomainViolation(const std::string& what, double n, double c) : Error(what), norm(n), bound(c) {}
};

struct SingularDenominator : Error { using Error::Error; };
struct NotSelfAdjoint : Error { using Error::Error; };
struct SingularLhat : Error { using Error::Error; };
struct SingularPencil : Error { using Error::Error; };
struct SizeMismatch : Error { using Error::Error; };
struct InvalidParams : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct NoPositiveRoot : Error { using Error::Error; };
struct SingularStabilityOperator : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

struct NonConvergence : Error {
  double best_residual;
  NonConvergence(const std::string& what, double r) : Error(what), best_residual(r) {}
};

struct HerglotzViolation : Error {
  double min_eig;
  HerglotzViolation(const std::string& what, double e) : Error(what), min_eig(e) {}
};

}  // namespace ncdel
