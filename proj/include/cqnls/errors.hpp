#pragma once

#include <stdexcept>
#include <string>

namespace cqnls {

/// Root of every error raised by the library. `kind()` is the stable,
/// machine-readable tag written into structured error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define CQNLS_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

CQNLS_DEFINE_ERROR(InvalidArgument);
CQNLS_DEFINE_ERROR(InvalidField);
CQNLS_DEFINE_ERROR(OmegaOutOfRange);
CQNLS_DEFINE_ERROR(NoSoliton);
CQNLS_DEFINE_ERROR(ConvergenceFailure);
CQNLS_DEFINE_ERROR(NoNegativeEnergyMinimizer);
CQNLS_DEFINE_ERROR(NumericalBlowup);
CQNLS_DEFINE_ERROR(EdgeMassWarning);
CQNLS_DEFINE_ERROR(DimensionError);
CQNLS_DEFINE_ERROR(Undefined);
CQNLS_DEFINE_ERROR(EigenFailure);
CQNLS_DEFINE_ERROR(AssumptionViolated);
CQNLS_DEFINE_ERROR(NotEnoughData);
CQNLS_DEFINE_ERROR(BoundaryMinimumWarning);
CQNLS_DEFINE_ERROR(ConfigParseError);
CQNLS_DEFINE_ERROR(ConfigValidationError);
CQNLS_DEFINE_ERROR(IoError);

#undef CQNLS_DEFINE_ERROR

}  // namespace cqnls
