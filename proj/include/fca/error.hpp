#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fca {

// Which exit code a failure maps to at the CLI boundary.
enum class ErrorCategory { config, data, compute, io };

enum class ErrorCode {
  // manifest
  MalformedLine,
  DuplicateImageId,
  EmptyManifest,
  EmptyInput,
  // subset
  NClOutOfRange,
  ClassNotInManifest,
  // embedstore
  ZeroVector,
  DimensionMismatch,
  BadMagic,
  UnsupportedVersion,
  TruncatedFile,
  MissingEmbedding,
  EmptyClassAfterFilter,
  DuplicateEmbeddingId,
  // simcore
  EmptyPairSet,
  SingletonClass,
  SameClass,
  EmptyClass,
  TooFewClasses,
  UnknownClass,
  UnknownInstance,
  // bench
  MalformedRow,
  DuplicateKey,
  Top1OutOfRange,
  EmptyGroup,
  MissingModel,
  NoData,
  LengthMismatch,
  ConstantSequence,
  JoinMiss,
  // cli / config
  UnknownKey,
  MissingRequired,
  InvalidValue,
  IoError,
};

std::string_view error_name(ErrorCode code);
ErrorCategory error_category(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const { return code_; }
  std::string_view name() const { return error_name(code_); }
  ErrorCategory category() const { return error_category(code_); }
  const std::string& detail() const { return detail_; }

private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace fca
