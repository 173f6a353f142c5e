#pragma once

#include <stdexcept>
#include <string>

namespace lidomaug {

enum class ErrorKind {
  kInvalidArgument,  // caller violated a precondition
  kIo,               // file could not be opened / read / written
  kFormat,           // file contents malformed or truncated
  kVersion,          // cache container from an incompatible layout
};

/// Single exception type for the library. `kind()` lets callers (the CLI in
/// particular) map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::kInvalidArgument, what);
}

}  // namespace lidomaug
