#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hetnet {

enum class ErrorKind {
  Config,      // invalid configuration value or file content
  Shape,       // dimension mismatch between operands
  Numeric,     // non-finite value where a finite one is required
  Domain,      // argument outside the mathematical domain of an operation
  Contract,    // caller violated a documented precondition
  Io,          // filesystem or stream failure
  Reconstruction,
  Incomplete,  // assembly attempted with missing inputs
  InsufficientData,
  CostGuard,
};

std::string_view to_string(ErrorKind kind);

// Process exit code used by the CLI for each error category.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) raise(kind, message);
}

}  // namespace hetnet
