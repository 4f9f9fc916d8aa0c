#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prac {

// Bad arguments: shape mismatches, out-of-range indices, invalid parameters.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Gaussian elimination hit a zero pivot column.
class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(std::size_t pivot_col)
      : std::runtime_error("singular matrix, no pivot in column " +
                           std::to_string(pivot_col)),
        pivot_col_(pivot_col) {}
  std::size_t pivot_col() const { return pivot_col_; }

 private:
  std::size_t pivot_col_;
};

// Conflicting data for the same logical item (e.g. two different payloads
// claiming the same fountain residual).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation called in a state that forbids it (decode before completion,
// packet construction after stop).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Peer violated the message contract.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TimeoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace prac
