#ifndef GTR_ERROR_HPP
#define GTR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gtr {

enum class errc {
  dimension_mismatch,
  projection_outside_membrane,
  outside_simplex,
  degenerate_state,
  invalid_density,
  rejection_stall,
  budget_exceeded,
  unstable_equilibrium,
  invalid_measurement,
  unsatisfiable_lock,
  zero_probability_branch,
  invalid_state,
  enumeration_too_large,
  unsupported,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::projection_outside_membrane: return "ProjectionOutsideMembrane";
    case errc::outside_simplex: return "OutsideSimplex";
    case errc::degenerate_state: return "DegenerateState";
    case errc::invalid_density: return "InvalidDensity";
    case errc::rejection_stall: return "RejectionStall";
    case errc::budget_exceeded: return "BudgetExceeded";
    case errc::unstable_equilibrium: return "UnstableEquilibrium";
    case errc::invalid_measurement: return "InvalidMeasurement";
    case errc::unsatisfiable_lock: return "UnsatisfiableLock";
    case errc::zero_probability_branch: return "ZeroProbabilityBranch";
    case errc::invalid_state: return "InvalidState";
    case errc::enumeration_too_large: return "EnumerationTooLarge";
    case errc::unsupported: return "Unsupported";
  }
  return "Unknown";
}

/// Library-wide exception carrying a structured error code.
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace gtr

#endif  // GTR_ERROR_HPP
