#pragma once

#include <stdexcept>
#include <string>

namespace ponos {

// Base class of every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyBatch : Error {
  EmptyBatch() : Error("empty mini-batch index set") {}
};

struct DimensionMismatch : Error {
  DimensionMismatch(std::size_t got, std::size_t want)
      : Error("parameter vector has length " + std::to_string(got) +
              ", problem dimension is " + std::to_string(want)) {}
};

struct BadLabel : Error {
  explicit BadLabel(double label)
      : Error("binary label must be -1 or +1, got " + std::to_string(label)) {}
};

struct RankDeficient : Error {
  using Error::Error;
};

struct InvalidStep : Error {
  using Error::Error;
};

struct NonFiniteValue : Error {
  using Error::Error;
};

struct NonDescentDirection : Error {
  explicit NonDescentDirection(double decrement)
      : Error("directional decrement is negative (" + std::to_string(decrement) +
              "); direction is not a descent direction") {}
};

struct DegenerateGradient : Error {
  explicit DegenerateGradient(double decrement)
      : Error("squared gradient norm " + std::to_string(decrement) +
              " is below the stationarity tolerance") {}
};

// The backtracking loop ran out of cuts without satisfying the sufficient
// decrease condition. Carries how far it got so the failure is diagnosable.
struct MaxBacktracksExceeded : Error {
  MaxBacktracksExceeded(int backtracks_, double last_eta_)
      : Error("line search exceeded " + std::to_string(backtracks_) +
              " backtracks, last trial step " + std::to_string(last_eta_)),
        backtracks(backtracks_),
        last_eta(last_eta_) {}
  int backtracks;
  double last_eta;
};

struct MissingMetadata : Error {
  using Error::Error;
};

struct NonPositiveSeries : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(int line_, const std::string& message)
      : Error("parse error at line " + std::to_string(line_) + ": " + message),
        line(line_) {}
  int line;
};

struct ValidationError : Error {
  ValidationError(const std::string& field_, const std::string& reason)
      : Error("invalid config value for '" + field_ + "': " + reason), field(field_) {}
  std::string field;
};

}  // namespace ponos
