#pragma once

#include <stdexcept>
#include <string>

namespace attnav {

// Shape disagreement between operands; the message names both shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/inf input or output where a finite value is required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (non-scalar backward root, absent
// target class, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Task whose target cannot be reached from its start pose.
class UnsolvableTaskError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file, bad magic, truncated record.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace attnav
