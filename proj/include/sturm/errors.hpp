#ifndef STURM_ERRORS_HPP
#define STURM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sturm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define STURM_DEFINE_ERROR(NAME)                          \
  struct NAME : Error {                                   \
    explicit NAME(const std::string& what) : Error(what) {} \
  }

STURM_DEFINE_ERROR(ListExhausted);
STURM_DEFINE_ERROR(PrecisionExhausted);
STURM_DEFINE_ERROR(DepthTooLarge);
STURM_DEFINE_ERROR(NegativeDiscriminant);
STURM_DEFINE_ERROR(IndexOutOfTable);
STURM_DEFINE_ERROR(EpsilonOutOfRange);
STURM_DEFINE_ERROR(CountMismatch);
STURM_DEFINE_ERROR(TangencySuspected);
STURM_DEFINE_ERROR(BoundViolated);
STURM_DEFINE_ERROR(DepthUnavailable);
STURM_DEFINE_ERROR(NoRootInUnitInterval);
STURM_DEFINE_ERROR(NoWitness);
STURM_DEFINE_ERROR(WordsNotInTree);
STURM_DEFINE_ERROR(ConfigError);

#undef STURM_DEFINE_ERROR

}  // namespace sturm

#endif
