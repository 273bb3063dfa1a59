#pragma once

#include <stdexcept>
#include <string>

namespace apcd {

/// Malformed or inconsistent input (dimension mismatch, empty dataset, ...).
class invalid_input_error : public std::runtime_error {
 public:
  explicit invalid_input_error(const std::string& what) : std::runtime_error(what) {}
};

/// Request exceeds the enumeration limit; callers must shrink the problem
/// or raise the limit explicitly, never truncate.
class capacity_error : public std::runtime_error {
 public:
  explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

/// Step-size pair fails the two-time-scale conditions for the requested variant.
class schedule_validation_error : public std::runtime_error {
 public:
  explicit schedule_validation_error(const std::string& what) : std::runtime_error(what) {}
};

/// A parameter update left the bounded region (or produced non-finite values).
class divergence_error : public std::runtime_error {
 public:
  divergence_error(const std::string& what, long iteration)
      : std::runtime_error(what), iteration(iteration) {}
  long iteration;
};

}  // namespace apcd
