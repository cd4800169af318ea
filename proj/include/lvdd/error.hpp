#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lvdd {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/extent mismatch between tensors, matrices or factorizations.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Index outside a valid range (mode index, ground-set index, ...).
class IndexError : public Error {
 public:
  using Error::Error;
};

// Invalid argument value: non-finite input, bad ratio, empty set, ...
class ValueError : public Error {
 public:
  using Error::Error;
};

// Iterative factorization failed to converge within its iteration cap.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// A matrix required to be positive definite is not.
class DefinitenessError : public Error {
 public:
  using Error::Error;
};

// Requested subset size exceeds the numerical rank of the kernel.
class InfeasibleSizeError : public Error {
 public:
  using Error::Error;
};

// Storage budget cannot fit even the smallest archive.
class InfeasibleBudgetError : public Error {
 public:
  InfeasibleBudgetError(const std::string& msg, std::uint64_t minimal_budget_bytes)
      : Error(msg), minimal_feasible_budget_bytes(minimal_budget_bytes) {}
  std::uint64_t minimal_feasible_budget_bytes = 0;
};

// Stored checksums or accounting do not match the file contents.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

enum class FormatFault : int {
  bad_magic = 1,
  truncated = 2,
  version_mismatch = 3,
  unknown_dtype = 4,
  length_mismatch = 5,
  corrupt_field = 6,
};

// Malformed container file; `fault` pins the exact failure.
class FormatError : public Error {
 public:
  FormatError(FormatFault f, const std::string& msg) : Error(msg), fault(f) {}
  FormatFault fault;
};

// Filesystem-level failure (open/read/write).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lvdd
