#pragma once

#include <stdexcept>
#include <string>

namespace allocrl {

// Base for every engine error; catch this to fail a cell without killing a run.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ALLOCRL_ERROR(Name)            \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  };

// market data
ALLOCRL_ERROR(FileNotFound)
ALLOCRL_ERROR(ParseError)
ALLOCRL_ERROR(NonPositivePrice)
ALLOCRL_ERROR(DegenerateSplit)
ALLOCRL_ERROR(NetworkError)
ALLOCRL_ERROR(ProviderFormatError)
ALLOCRL_ERROR(EmptyUniverse)

// environment
ALLOCRL_ERROR(NotOnSimplex)
ALLOCRL_ERROR(NonFiniteAction)
ALLOCRL_ERROR(EpisodeFinished)
ALLOCRL_ERROR(DataTooShort)

// tensor core
ALLOCRL_ERROR(ShapeMismatch)
ALLOCRL_ERROR(CheckpointError)

// baselines
ALLOCRL_ERROR(Infeasible)
ALLOCRL_ERROR(NotEnoughData)

// rl machinery
ALLOCRL_ERROR(BufferTooSmall)
ALLOCRL_ERROR(LineSearchFailed)

// backtest
ALLOCRL_ERROR(EmptyCurve)
ALLOCRL_ERROR(EmptyRuns)
ALLOCRL_ERROR(ZeroVolatility)
ALLOCRL_ERROR(LengthMismatch)

// runner
ALLOCRL_ERROR(ConfigError)

#undef ALLOCRL_ERROR

}  // namespace allocrl
