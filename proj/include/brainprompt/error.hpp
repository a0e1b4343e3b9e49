#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace brainprompt {

enum class ErrorCode {
  BadMagic,
  UnsupportedDatatype,
  Truncated,
  DegenerateDims,
  NonInvertibleAffine,
  InvalidGrid,
  EmptyVolume,
  InvalidAxis,
  CountMismatch,
  ShapeMismatch,
  EmptyForeground,
  EmptyPromptSet,
  InvalidPrompt,
  BadRunLength,
  BackendUnavailable,
  ProtocolError,
  Timeout,
  InvalidConfig,
  ExecutableNotFound,
  ToolFailed,
  OutputMissing,
  EmptyResult,
  EmptyList,
  SpecOutOfBounds,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is the
/// stable, machine-checkable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Failure of a child process (external tool or backend). Carries the exit
/// status when the process terminated, and whatever it wrote to stderr.
class ProcessError : public Error {
 public:
  ProcessError(ErrorCode code, const std::string& message, std::optional<int> exit_status,
               std::string diagnostics)
      : Error(code, message), exit_status_(exit_status), diagnostics_(std::move(diagnostics)) {}

  std::optional<int> exit_status() const noexcept { return exit_status_; }
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::optional<int> exit_status_;
  std::string diagnostics_;
};

}  // namespace brainprompt
