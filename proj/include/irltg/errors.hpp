#pragma once

#include <stdexcept>
#include <string>

namespace irltg {

// Invalid caller-supplied values: bad shapes, out-of-range tokens, empty
// batches. Maps to the "argument error" contract of the public operations.
struct ArgumentError : std::invalid_argument {
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// NaN/Inf surfaced where the contract requires finite values.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// File-format problems (token files, vocab files, checkpoints, configs).
struct IoError : std::runtime_error {
  enum class Kind {
    open_failed,
    bad_magic,
    bad_version,
    truncated,
    shape_mismatch,
    malformed,
  };

  IoError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}

  Kind kind;
};

}  // namespace irltg
