#pragma once

#include <stdexcept>
#include <string>

namespace cage {

/// Failure categories. The CLI maps these to process exit codes.
enum class ErrorKind {
  InvalidGeometry,
  Configuration,
  InvalidInput,
  SupportMismatch,
  DegenerateBasis,
  NumericalFailure,
  Unimplemented,
  InsufficientDraws,
  InfeasibleContiguity,
  DegenerateComparison,
};

const char* to_string(ErrorKind kind) noexcept;

/// True for failures caused by the numbers rather than by the inputs.
bool is_numerical(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace cage
