#pragma once

#include <stdexcept>
#include <string>

namespace diffgreeks {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DIFFGREEKS_DEFINE_ERROR(Name) \
  class Name : public Error {         \
   public:                            \
    using Error::Error;               \
  }

DIFFGREEKS_DEFINE_ERROR(FactorizationError);
DIFFGREEKS_DEFINE_ERROR(DimensionError);
DIFFGREEKS_DEFINE_ERROR(DegenerateVolError);
DIFFGREEKS_DEFINE_ERROR(ScoreContextError);
DIFFGREEKS_DEFINE_ERROR(StabilityError);
DIFFGREEKS_DEFINE_ERROR(BoundaryError);
DIFFGREEKS_DEFINE_ERROR(UnsupportedActivationError);
DIFFGREEKS_DEFINE_ERROR(DivergenceError);
DIFFGREEKS_DEFINE_ERROR(ZeroReferenceError);
DIFFGREEKS_DEFINE_ERROR(ConfigError);
DIFFGREEKS_DEFINE_ERROR(UsageError);

#undef DIFFGREEKS_DEFINE_ERROR

}  // namespace diffgreeks
