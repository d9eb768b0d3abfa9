#include "cage/error.hpp"

namespace cage {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidGeometry: return "invalid-geometry";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::SupportMismatch: return "support-mismatch";
    case ErrorKind::DegenerateBasis: return "degenerate-basis";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::Unimplemented: return "unimplemented";
    case ErrorKind::InsufficientDraws: return "insufficient-draws";
    case ErrorKind::InfeasibleContiguity: return "infeasible-contiguity";
    case ErrorKind::DegenerateComparison: return "degenerate-comparison";
  }
  return "unknown";
}

bool is_numerical(ErrorKind kind) noexcept {
  return kind == ErrorKind::NumericalFailure || kind == ErrorKind::DegenerateBasis;
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace cage
