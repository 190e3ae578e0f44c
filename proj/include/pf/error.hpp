#pragma once

#include <stdexcept>
#include <string>

namespace pf {

enum class ErrorKind {
  dimension,  // shape or size mismatch
  numeric,    // non-finite values, degenerate normalization
  config,     // invalid parameter or option
  data,       // malformed or missing input data
  contract,   // API misuse (e.g. backward on a non-scalar)
  io,         // file system failures
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace pf
