#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace curvealign {

enum class ErrorKind {
  Format,
  Parse,
  InsufficientData,
  Partition,
  Grid,
  Input,
  Config,
  Assumption,
  Io,
  Numerical,
  DegenerateSample,
  DegenerateLandmark,
  EmptySegmentation,
  NoSpike,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception. The kind selects the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

/// 2 usage/config, 3 IO, 4 numerical.
int exit_code_for(ErrorKind kind);

}  // namespace curvealign
