// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace stylerec {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or length mismatch in a linear-algebra or model operation.
struct DimensionError : Error {
  using Error::Error;
};

// A stated precondition of an operation was violated by the caller.
struct PreconditionError : Error {
  using Error::Error;
};

// Malformed input file; message carries the path and line number.
struct ParseError : Error {
  using Error::Error;
};

// Negative-sampling pool too small for the requested draw.
struct SamplingError : Error {
  using Error::Error;
};

// Evaluation-protocol violation (e.g. purchased article missing from the
// candidate set, or an AUC requested over an empty rank list).
struct EvaluationError : Error {
  using Error::Error;
};

// Synthetic-market generation cannot satisfy the configuration.
struct GenerationError : Error {
  using Error::Error;
};

// Training produced a non-finite loss or gradient.
struct NumericalError : Error {
  using Error::Error;
};

// Bad or incomplete run configuration.
struct ConfigError : Error {
  using Error::Error;
};

// A command needs an artifact another command has not produced yet.
struct DependencyError : Error {
  using Error::Error;
};

}  // namespace stylerec
