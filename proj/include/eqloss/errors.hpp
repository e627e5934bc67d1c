#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace eqloss {

/// Ragged, empty or undersized matrix input.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value violates a domain invariant (probability range, row sum, vanishing
/// denominator). `row()` is the first offending row when one applies.
class DomainError : public std::domain_error {
 public:
  static constexpr std::size_t kNoRow = static_cast<std::size_t>(-1);

  explicit DomainError(const std::string& what, std::size_t row = kNoRow)
      : std::domain_error(what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// An enumeration would exceed its configured budget.
class BudgetError : public std::length_error {
 public:
  BudgetError(const std::string& what, std::uint64_t requested)
      : std::length_error(what), requested_(requested) {}

  /// Number of items the enumeration would have produced (saturated at
  /// UINT64_MAX).
  std::uint64_t requested() const noexcept { return requested_; }

 private:
  std::uint64_t requested_;
};

/// An iterative numerical method hit its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::size_t iterations)
      : std::runtime_error(what), iterations_(iterations) {}

  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

/// Training blew up (source cross-entropy out of range).
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eqloss
