#pragma once

#include <stdexcept>
#include <string>

namespace magedge {

enum class ErrorKind {
  invalid_argument,
  dimension_mismatch,
  domain,
  not_finite,
  not_hermitian,
  not_converged,
  size_cap,
  io,
  config,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace magedge
