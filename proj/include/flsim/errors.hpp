#pragma once

#include <stdexcept>

namespace flsim {

// One exception type per failure class so callers can react to the class
// instead of parsing messages.

struct InvalidQuantifierError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyAggregationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ArityError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct MissingAccuracyError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyDataError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IdxFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IdxConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IdxReadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SplitError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct PartitionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DerangementError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Wraps any error escaping a federation round; the offending round index is
// in the message, the original error is the nested exception.
struct RoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace flsim
