#pragma once

#include <stdexcept>
#include <string>

namespace alp {

// Mirrors alp_status in alp.h; the C layer maps exceptions through code().
enum class ErrorCode : int {
  kDomain = 1,
  kInvalidArgument = 2,
  kIo = 3,
  kSchema = 4,
  kInfeasible = 5,
  kNumerical = 6,
  kDiverged = 7,
  kArbitrage = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorCode::kDomain, w) {}
};
struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w) : Error(ErrorCode::kInvalidArgument, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorCode::kIo, w) {}
};
struct SchemaError : Error {
  explicit SchemaError(const std::string& w) : Error(ErrorCode::kSchema, w) {}
};
// A term structure violating pricing feasibility (beta <= sigma, non-positive
// parameters) at a specific tenor.
struct InfeasibleError : Error {
  InfeasibleError(const std::string& w, double tenor)
      : Error(ErrorCode::kInfeasible, w), tenor_(tenor) {}
  double tenor() const noexcept { return tenor_; }

 private:
  double tenor_;
};
struct NumericalError : Error {
  explicit NumericalError(const std::string& w) : Error(ErrorCode::kNumerical, w) {}
};
struct DivergenceError : Error {
  explicit DivergenceError(const std::string& w) : Error(ErrorCode::kDiverged, w) {}
};
struct ArbitrageError : Error {
  explicit ArbitrageError(const std::string& w) : Error(ErrorCode::kArbitrage, w) {}
};

}  // namespace alp
