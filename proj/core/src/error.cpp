#include "dmriqc/error.hpp"

namespace dmriqc {

auto to_string(ErrorCode code) -> std::string_view {
  switch (code) {
  case ErrorCode::CycleDetected: return "CycleDetected";
  case ErrorCode::UnknownDependency: return "UnknownDependency";
  case ErrorCode::DuplicateNode: return "DuplicateNode";
  case ErrorCode::UnknownNode: return "UnknownNode";
  case ErrorCode::UnknownUnit: return "UnknownUnit";
  case ErrorCode::InvalidGraph: return "InvalidGraph";
  case ErrorCode::InsufficientDirections: return "InsufficientDirections";
  case ErrorCode::SingularDesign: return "SingularDesign";
  case ErrorCode::SeedOutsideMask: return "SeedOutsideMask";
  case ErrorCode::InvalidSpec: return "InvalidSpec";
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  case ErrorCode::ShapeMismatch: return "ShapeMismatch";
  case ErrorCode::MaskEmpty: return "MaskEmpty";
  case ErrorCode::EmptyInput: return "EmptyInput";
  case ErrorCode::EmptyVolume: return "EmptyVolume";
  case ErrorCode::NotSquare: return "NotSquare";
  case ErrorCode::SliceOutOfRange: return "SliceOutOfRange";
  case ErrorCode::IoFailure: return "IoFailure";
  case ErrorCode::BadMagic: return "BadMagic";
  case ErrorCode::UnsupportedDatatype: return "UnsupportedDatatype";
  case ErrorCode::TruncatedData: return "TruncatedData";
  case ErrorCode::CountMismatch: return "CountMismatch";
  case ErrorCode::MalformedNumber: return "MalformedNumber";
  case ErrorCode::NonUnitVector: return "NonUnitVector";
  case ErrorCode::BadHeader: return "BadHeader";
  case ErrorCode::UnterminatedStream: return "UnterminatedStream";
  case ErrorCode::RaggedRows: return "RaggedRows";
  case ErrorCode::NonBinaryToken: return "NonBinaryToken";
  case ErrorCode::MissingArtifact: return "MissingArtifact";
  case ErrorCode::UnknownNodeReference: return "UnknownNodeReference";
  case ErrorCode::DuplicateScanId: return "DuplicateScanId";
  case ErrorCode::SchemaViolation: return "SchemaViolation";
  }
  return "Unknown";
}

} // namespace dmriqc
