#include "dknn/error.hpp"

namespace dknn {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kZeroVector: return "ZeroVector";
    case Errc::kTooFewPoints: return "TooFewPoints";
    case Errc::kEmptySet: return "EmptySet";
    case Errc::kDegenerateDraw: return "DegenerateDraw";
    case Errc::kAllPointsDegenerate: return "AllPointsDegenerate";
    case Errc::kNonFiniteGradient: return "NonFiniteGradient";
    case Errc::kInsufficientData: return "InsufficientData";
    case Errc::kBadShape: return "BadShape";
    case Errc::kEmptyIndex: return "EmptyIndex";
    case Errc::kEmptyStore: return "EmptyStore";
    case Errc::kEmptyPartition: return "EmptyPartition";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kEmptyHits: return "EmptyHits";
    case Errc::kSizeMismatch: return "SizeMismatch";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kIo: return "Io";
    case Errc::kFormat: return "Format";
  }
  return "Unknown";
}

}  // namespace dknn
