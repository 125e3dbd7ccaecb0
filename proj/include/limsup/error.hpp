#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace limsup {

enum class ErrorCode {
  PreViolation,
  InsufficientFamily,
  Degenerate,
  Unsupported,
  RasterEmpty,
  DepthUnreachable,
  UnresolvedScale,
  DepthTooShallow,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Contract violation or failed computation, tagged with the violated contract.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorCode::PreViolation, what);
}

}  // namespace limsup
