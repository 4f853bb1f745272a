#include "hetnet/error.hpp"

namespace hetnet {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Io: return "io";
    case ErrorKind::Reconstruction: return "reconstruction";
    case ErrorKind::Incomplete: return "incomplete";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::CostGuard: return "cost-guard";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Numeric: return 3;
    case ErrorKind::Io: return 4;
    case ErrorKind::CostGuard: return 5;
    default: return 1;
  }
}

void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace hetnet
