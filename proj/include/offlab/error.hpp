#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace offlab {

enum class ErrorKind {
  invalid_parameter,
  degenerate_correlation,
  flip_count_too_small,
  slice_too_thin,
  domain,
  unreliable_tail,
  quadrature,
  degenerate_series,
  undefined_off,
  attempts_exhausted,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Parameter errors are the caller's fault and map to CLI exit status 2;
// everything else is a numeric failure (exit status 3).
constexpr bool is_parameter_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_parameter:
    case ErrorKind::degenerate_correlation:
    case ErrorKind::flip_count_too_small:
    case ErrorKind::slice_too_thin:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace offlab
