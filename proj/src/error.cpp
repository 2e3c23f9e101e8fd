#include "fca/error.hpp"

namespace fca {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::DuplicateImageId: return "DuplicateImageId";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NClOutOfRange: return "NClOutOfRange";
    case ErrorCode::ClassNotInManifest: return "ClassNotInManifest";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::EmptyClassAfterFilter: return "EmptyClassAfterFilter";
    case ErrorCode::DuplicateEmbeddingId: return "DuplicateEmbeddingId";
    case ErrorCode::EmptyPairSet: return "EmptyPairSet";
    case ErrorCode::SingletonClass: return "SingletonClass";
    case ErrorCode::SameClass: return "SameClass";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::TooFewClasses: return "TooFewClasses";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::UnknownInstance: return "UnknownInstance";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::Top1OutOfRange: return "Top1OutOfRange";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::MissingModel: return "MissingModel";
    case ErrorCode::NoData: return "NoData";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ConstantSequence: return "ConstantSequence";
    case ErrorCode::JoinMiss: return "JoinMiss";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::MissingRequired: return "MissingRequired";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory error_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownKey:
    case ErrorCode::MissingRequired:
    case ErrorCode::InvalidValue:
    case ErrorCode::NClOutOfRange:
      return ErrorCategory::config;
    case ErrorCode::EmptyPairSet:
    case ErrorCode::SingletonClass:
    case ErrorCode::SameClass:
    case ErrorCode::EmptyClass:
    case ErrorCode::TooFewClasses:
    case ErrorCode::UnknownClass:
    case ErrorCode::UnknownInstance:
    case ErrorCode::EmptyGroup:
    case ErrorCode::NoData:
    case ErrorCode::LengthMismatch:
    case ErrorCode::ConstantSequence:
    case ErrorCode::JoinMiss:
      return ErrorCategory::compute;
    case ErrorCode::IoError:
      return ErrorCategory::io;
    default:
      return ErrorCategory::data;
  }
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + (detail.empty() ? "" : ": " + detail)),
      code_(code),
      detail_(detail) {}

}  // namespace fca
