#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dmriqc {

/// Categorised failure raised by every dmriqc operation.
enum class ErrorCode {
  // graph / model
  CycleDetected,
  UnknownDependency,
  DuplicateNode,
  UnknownNode,
  UnknownUnit,
  InvalidGraph,
  // numerics
  InsufficientDirections,
  SingularDesign,
  SeedOutsideMask,
  InvalidSpec,
  InvalidArgument,
  // diagnostics / render
  ShapeMismatch,
  MaskEmpty,
  EmptyInput,
  EmptyVolume,
  NotSquare,
  SliceOutOfRange,
  // io
  IoFailure,
  BadMagic,
  UnsupportedDatatype,
  TruncatedData,
  CountMismatch,
  MalformedNumber,
  NonUnitVector,
  BadHeader,
  UnterminatedStream,
  RaggedRows,
  NonBinaryToken,
  MissingArtifact,
  UnknownNodeReference,
  DuplicateScanId,
  SchemaViolation,
};

auto to_string(ErrorCode code) -> std::string_view;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code), detail_(message) {}

  [[nodiscard]] auto code() const noexcept -> ErrorCode { return code_; }
  /// Message without the code prefix.
  [[nodiscard]] auto detail() const noexcept -> const std::string & {
    return detail_;
  }

private:
  ErrorCode code_;
  std::string detail_;
};

} // namespace dmriqc
