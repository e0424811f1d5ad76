#include "curvealign/error.hpp"

namespace curvealign {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format: return "format error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Partition: return "partition error";
    case ErrorKind::Grid: return "grid error";
    case ErrorKind::Input: return "input error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Assumption: return "assumption error";
    case ErrorKind::Io: return "io error";
    case ErrorKind::Numerical: return "numerical error";
    case ErrorKind::DegenerateSample: return "degenerate sample";
    case ErrorKind::DegenerateLandmark: return "degenerate landmark";
    case ErrorKind::EmptySegmentation: return "empty segmentation";
    case ErrorKind::NoSpike: return "no spike";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
      return 3;
    case ErrorKind::Numerical:
    case ErrorKind::DegenerateSample:
    case ErrorKind::DegenerateLandmark:
    case ErrorKind::EmptySegmentation:
    case ErrorKind::NoSpike:
      return 4;
    default:
      return 2;
  }
}

}  // namespace curvealign
