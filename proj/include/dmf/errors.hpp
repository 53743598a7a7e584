#pragma once

#include <stdexcept>
#include <string>

namespace dmf {

// Every library failure derives from Error so callers can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidMeasure : Error {
  using Error::Error;
};

struct InvalidInput : Error {
  using Error::Error;
};

struct InvalidParameter : Error {
  using Error::Error;
};

struct InvalidSample : Error {
  using Error::Error;
};

// exp(theta) failed the a(1 + b f_1 ... f_p) factorization or |b f...f| < 1.
struct ConditionViolation : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

}  // namespace dmf
