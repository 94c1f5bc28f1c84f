#pragma once

#include <stdexcept>
#include <string>

namespace cmvdlm {

// Error categories map onto CLI exit codes (see tools/main.cpp).
enum class ErrorKind {
  kInvalidScale,   // non-s.p.d. scale / variance matrix
  kInvalidDof,     // non-positive degrees of freedom
  kDegenerateDof,  // discounting drove the d.o.f. to zero or below
  kPartition,      // block sizes out of range
  kInput,          // malformed or non-finite input values
  kMode,           // operation not valid in the configured mode
  kConfig,         // configuration file or option problem
  kData,           // dataset parse / validation problem
  kIo,             // file system problem
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  bool numerical() const noexcept {
    return kind_ == ErrorKind::kInvalidScale ||
           kind_ == ErrorKind::kInvalidDof ||
           kind_ == ErrorKind::kDegenerateDof;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace cmvdlm
