#pragma once

#include <stdexcept>
#include <string>

namespace semalign {

// Root of every error raised by the library. Each subclass names one failure
// category so callers (and the CLI) can branch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SEMALIGN_DEFINE_ERROR(Name)          \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

SEMALIGN_DEFINE_ERROR(InvalidMatrix);
SEMALIGN_DEFINE_ERROR(ShapeError);
SEMALIGN_DEFINE_ERROR(ZeroVector);
SEMALIGN_DEFINE_ERROR(DegenerateInput);
SEMALIGN_DEFINE_ERROR(DegenerateBasis);
SEMALIGN_DEFINE_ERROR(ConfigError);
SEMALIGN_DEFINE_ERROR(TokenRangeError);
SEMALIGN_DEFINE_ERROR(EmptyMask);
SEMALIGN_DEFINE_ERROR(NumericalError);
SEMALIGN_DEFINE_ERROR(RangeError);
SEMALIGN_DEFINE_ERROR(VocabMismatch);
SEMALIGN_DEFINE_ERROR(AlignmentError);
SEMALIGN_DEFINE_ERROR(IoError);

#undef SEMALIGN_DEFINE_ERROR

}  // namespace semalign
