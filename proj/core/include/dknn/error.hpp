#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dknn {

enum class Errc {
  kZeroVector,
  kTooFewPoints,
  kEmptySet,
  kDegenerateDraw,
  kAllPointsDegenerate,
  kNonFiniteGradient,
  kInsufficientData,
  kBadShape,
  kEmptyIndex,
  kEmptyStore,
  kEmptyPartition,
  kLengthMismatch,
  kEmptyHits,
  kSizeMismatch,
  kInvalidArgument,
  kIo,
  kFormat,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const char* what) {
  if (!cond) fail(code, what);
}

}  // namespace dknn
