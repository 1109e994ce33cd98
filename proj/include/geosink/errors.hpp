#pragma once

#include <stdexcept>
#include <string>

namespace geosink {

// Error categories used across the library. The CLI maps these onto exit
// codes: io -> 2, validation -> 3, numerical -> 4.
enum class errc {
  // validation
  dimension_mismatch,
  duplicate_points,
  negative_weight,
  non_positive_time,
  length_mismatch,
  too_large,
  index_out_of_range,
  size_mismatch,
  degenerate_input,
  invalid_argument,
  // numerical
  kernel_not_positive,
  disconnected,
  solve_failure,
  numerical_underflow,
  degenerate_plan,
  // io
  io_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::duplicate_points: return "DuplicatePoints";
    case errc::negative_weight: return "NegativeWeight";
    case errc::non_positive_time: return "NonPositiveTime";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::too_large: return "TooLarge";
    case errc::index_out_of_range: return "IndexOutOfRange";
    case errc::size_mismatch: return "SizeMismatch";
    case errc::degenerate_input: return "DegenerateInput";
    case errc::invalid_argument: return "InvalidArgument";
    case errc::kernel_not_positive: return "KernelNotPositive";
    case errc::disconnected: return "Disconnected";
    case errc::solve_failure: return "SolveFailure";
    case errc::numerical_underflow: return "NumericalUnderflow";
    case errc::degenerate_plan: return "DegeneratePlan";
    case errc::io_error: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

  bool is_validation() const noexcept {
    switch (code_) {
      case errc::kernel_not_positive:
      case errc::disconnected:
      case errc::solve_failure:
      case errc::numerical_underflow:
      case errc::degenerate_plan:
      case errc::io_error:
        return false;
      default:
        return true;
    }
  }

  bool is_io() const noexcept { return code_ == errc::io_error; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace geosink
