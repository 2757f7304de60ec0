#pragma once

#include <stdexcept>
#include <string>

namespace gridcast {

// Dimension or shape mismatch between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values where finite ones are required.
class ValueError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent external data (CSV files, configs, checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric whose value is mathematically undefined for the given series.
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace gridcast
