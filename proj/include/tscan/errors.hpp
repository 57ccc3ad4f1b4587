#pragma once

#include <stdexcept>
#include <string>

namespace tscan {

// Base class for every recoverable failure raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateGeometry : Error {
  using Error::Error;
};

struct BehindCamera : Error {
  using Error::Error;
};

struct InvalidPixel : Error {
  InvalidPixel(double u, double v)
      : Error("no valid depth at pixel (" + std::to_string(u) + ", " + std::to_string(v) + ")"),
        u(u), v(v) {}
  double u;
  double v;
};

struct InsufficientTexture : Error {
  using Error::Error;
};

struct TooFewRois : Error {
  using Error::Error;
};

struct NoConsensus : Error {
  using Error::Error;
};

// A live factor of the control chain (or the tissue estimate) is missing or
// older than the configured timeout. `factor` names the offending transform.
struct StaleTransform : Error {
  explicit StaleTransform(std::string factor_name)
      : Error("stale or missing transform: " + factor_name), factor(std::move(factor_name)) {}
  std::string factor;
};

struct EndOfTrajectory : Error {
  EndOfTrajectory() : Error("scan trajectory exhausted") {}
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// A closed-loop run gave up, e.g. too many ticks without a fresh estimate.
struct ExperimentAborted : Error {
  using Error::Error;
};

}  // namespace tscan
