#include "cbir/error.hpp"

namespace cbir {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionUnsupported: return "VersionUnsupported";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::EmptySet: return "EmptySet";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::OverlapDetected: return "OverlapDetected";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::UnnormalizedForIP: return "UnnormalizedForIP";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::IdOrderMismatch: return "IdOrderMismatch";
    case Errc::LabelMismatch: return "LabelMismatch";
    case Errc::RowOrderMismatch: return "RowOrderMismatch";
    case Errc::IoFailure: return "IoFailure";
    case Errc::KOutOfRange: return "KOutOfRange";
    case Errc::NonFiniteQuery: return "NonFiniteQuery";
    case Errc::KExceedsList: return "KExceedsList";
    case Errc::WeightCountMismatch: return "WeightCountMismatch";
    case Errc::TooFewMethods: return "TooFewMethods";
    case Errc::TooFewValues: return "TooFewValues";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptySample: return "EmptySample";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::ZeroPooledVariance: return "ZeroPooledVariance";
    case Errc::ConfigParse: return "ConfigParse";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message),
      code_(code) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace cbir
