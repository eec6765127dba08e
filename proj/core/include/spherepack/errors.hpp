#pragma once

#include <stdexcept>
#include <string>

namespace spherepack {

// Base class for every error raised by the library. `kind()` is a stable
// identifier used by the CLI for its machine-parseable diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SPHEREPACK_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

// geometry
SPHEREPACK_DEFINE_ERROR(ParseError)
SPHEREPACK_DEFINE_ERROR(DegenerateMesh)
SPHEREPACK_DEFINE_ERROR(NumericalAmbiguity)
SPHEREPACK_DEFINE_ERROR(RejectionBudgetExceeded)
// model
SPHEREPACK_DEFINE_ERROR(UnknownPreset)
SPHEREPACK_DEFINE_ERROR(InvalidArgument)
// loss / optimizer
SPHEREPACK_DEFINE_ERROR(EmptyDomain)
SPHEREPACK_DEFINE_ERROR(InsufficientInterior)
SPHEREPACK_DEFINE_ERROR(AllPruned)
// metrics
SPHEREPACK_DEFINE_ERROR(DegenerateEstimate)
// export
SPHEREPACK_DEFINE_ERROR(SchemaError)
SPHEREPACK_DEFINE_ERROR(LinkNotFound)
SPHEREPACK_DEFINE_ERROR(XmlError)

#undef SPHEREPACK_DEFINE_ERROR

}  // namespace spherepack
