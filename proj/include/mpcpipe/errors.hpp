#pragma once

#include <stdexcept>
#include <string>

namespace mpcpipe {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Value outside the representable fixed-point range.
struct RangeError : Error {
  using Error::Error;
};

// Tensor shape/scale mismatch between operands.
struct ShapeError : Error {
  using Error::Error;
};

// Bad session or model configuration.
struct ConfigError : Error {
  using Error::Error;
};

// Parties disagree on a collective (kind/shape/order) or a triple is reused.
struct ProtocolError : Error {
  using Error::Error;
};

// Backend failure: peer disconnect, socket error, malformed frame.
struct TransportError : Error {
  using Error::Error;
};

// Inner dimension exceeds the limb plan's accumulation budget.
struct BudgetError : Error {
  using Error::Error;
};

// API misuse, e.g. waiting twice on one handle.
struct UsageError : Error {
  using Error::Error;
};

}  // namespace mpcpipe
