#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbir {

enum class Errc {
  // input / data validation
  BadMagic,
  VersionUnsupported,
  CountMismatch,
  NonFiniteValue,
  DuplicateId,
  UnknownLabel,
  EmptySet,
  ZeroVector,
  OverlapDetected,
  EmptyClass,
  UnnormalizedForIP,
  DimMismatch,
  IdOrderMismatch,
  LabelMismatch,
  RowOrderMismatch,
  IoFailure,
  // caller contract
  KOutOfRange,
  NonFiniteQuery,
  KExceedsList,
  WeightCountMismatch,
  TooFewMethods,
  TooFewValues,
  LengthMismatch,
  EmptySample,
  InvalidArgument,
  // numeric
  ZeroVariance,
  ZeroPooledVariance,
  // configuration
  ConfigParse,
};

std::string_view errc_name(Errc code) noexcept;

/// Exception carrying a stable error kind. The message is human-oriented;
/// callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

}  // namespace cbir
