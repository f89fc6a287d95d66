#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shiftshare {

enum class ErrorKind {
  invalid_argument,
  missing_column,
  non_finite,
  rank_deficient,
  underidentified,
  collinear,
  undefined_test,
  exhaustion,
  numerical,
  panel_gap,
  missing_key,
  unsupported,
  io,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::missing_column: return "missing_column";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::rank_deficient: return "rank_deficient";
    case ErrorKind::underidentified: return "underidentified";
    case ErrorKind::collinear: return "collinear";
    case ErrorKind::undefined_test: return "undefined_test";
    case ErrorKind::exhaustion: return "exhaustion";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::panel_gap: return "panel_gap";
    case ErrorKind::missing_key: return "missing_key";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

template <typename... Args>
std::string cat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

template <typename... Args>
[[noreturn]] void fail(ErrorKind kind, const Args&... args) {
  throw Error(kind, cat(args...));
}

}  // namespace detail
}  // namespace shiftshare
