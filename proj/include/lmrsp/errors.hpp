#pragma once

#include <stdexcept>

namespace lmrsp {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error { using Error::Error; };
struct LengthMismatchError : Error { using Error::Error; };
struct SizeLimitError : Error { using Error::Error; };
struct InvalidRateError : Error { using Error::Error; };
struct InvalidScheduleError : Error { using Error::Error; };
struct UnsupportedKindError : Error { using Error::Error; };
struct InvalidMeanError : Error { using Error::Error; };
struct ZeroNuError : Error { using Error::Error; };
struct ZeroQueueError : Error { using Error::Error; };
struct InvalidGridError : Error { using Error::Error; };
struct SeriesTooShortError : Error { using Error::Error; };
struct UndefinedDelayError : Error { using Error::Error; };
struct QueueOverflowError : Error { using Error::Error; };

}  // namespace lmrsp
