#pragma once

// Row-stochastic prediction matrices: validation, class-size queries,
// extreme-point enumeration and Euclidean projection onto the simplex.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "eqloss/matrix.hpp"

namespace eqloss {

inline constexpr double kRowSumTolerance = 1e-9;
inline constexpr std::uint64_t kDefaultEnumerationBudget = 10'000'000;

/// A B x C matrix whose rows are probability vectors over C classes.
///
/// Every entry is finite and in [0, 1] and every row sums to 1, both up to
/// kRowSumTolerance. B >= 1 and C >= 2. Values are stored exactly as given.
class ProbMatrix {
 public:
  /// Throws DimensionError for empty/ragged input or C < 2, DomainError
  /// (carrying the first offending row) for out-of-range entries or rows
  /// whose sum deviates from 1 by more than kRowSumTolerance.
  static ProbMatrix validate(const Matrix& raw);
  static ProbMatrix validate(const std::vector<std::vector<double>>& raw);

  std::size_t rows() const noexcept { return m_.rows(); }
  std::size_t cols() const noexcept { return m_.cols(); }
  double operator()(std::size_t i, std::size_t c) const { return m_(i, c); }
  std::span<const double> row(std::size_t i) const { return m_.row(i); }
  const Matrix& matrix() const noexcept { return m_; }

  bool operator==(const ProbMatrix&) const = default;

 private:
  explicit ProbMatrix(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

/// Divides each row by its sum. Rows with non-positive sum, negative or
/// non-finite entries are left for validate() to reject.
Matrix renormalize_rows(Matrix raw);

/// Soft class sizes n_c = sum_i P_ic.
struct ClassSizes {
  std::vector<double> sizes;
  double total = 0.0;
};

ClassSizes class_sizes(const ProbMatrix& p);

/// True iff every row has exactly one entry within `tol` of 1 and all others
/// within `tol` of 0. Requires tol in [0, 0.5).
bool is_one_hot_rows(const ProbMatrix& p, double tol);

/// One-hot matrix whose row i is hot in column labels[i].
ProbMatrix one_hot_from_labels(std::span<const std::size_t> labels, std::size_t classes);

/// Row-label tuple of a matrix with one-hot rows (argmax of each row).
std::vector<std::size_t> row_labels(const ProbMatrix& p);

/// Integer class sizes of a label tuple.
std::vector<std::size_t> label_counts(std::span<const std::size_t> labels, std::size_t classes);

/// Number of one-hot B x C matrices, C^B, saturated at UINT64_MAX.
std::uint64_t one_hot_count(std::size_t rows, std::size_t classes);

/// Number of compositions of B into C non-negative parts, binomial(B+C-1, C-1),
/// saturated at UINT64_MAX.
std::uint64_t composition_count(std::size_t total, std::size_t parts);

/// Streams all C^B row-label tuples in lexicographic order (row 0 most
/// significant). Single consumer.
class OneHotStream {
 public:
  /// Throws BudgetError if C^B exceeds `budget`.
  OneHotStream(std::size_t rows, std::size_t classes,
               std::uint64_t budget = kDefaultEnumerationBudget);

  std::optional<std::vector<std::size_t>> next_labels();
  std::optional<ProbMatrix> next();
  std::uint64_t size() const noexcept { return size_; }

 private:
  std::size_t classes_;
  std::vector<std::size_t> labels_;
  std::uint64_t size_;
  bool started_ = false;
  bool done_ = false;
};

/// Streams all C-tuples of non-negative integers summing to B, in ascending
/// lexicographic order. Single consumer.
class CompositionStream {
 public:
  /// Throws BudgetError if the composition count exceeds `budget`.
  CompositionStream(std::size_t total, std::size_t parts,
                    std::uint64_t budget = kDefaultEnumerationBudget);

  std::optional<std::vector<std::size_t>> next();
  std::uint64_t size() const noexcept { return size_; }

 private:
  std::vector<std::size_t> current_;
  std::uint64_t size_;
  bool started_ = false;
  bool done_ = false;
};

std::vector<ProbMatrix> enumerate_one_hot(std::size_t rows, std::size_t classes,
                                          std::uint64_t budget = kDefaultEnumerationBudget);

std::vector<ClassSizes> enumerate_size_compositions(
    std::size_t total, std::size_t classes, std::uint64_t budget = kDefaultEnumerationBudget);

/// Euclidean projection of `v` onto the probability simplex (sort and
/// threshold).
std::vector<double> project_row_simplex(std::span<const double> v);

/// Projects every row of `m` onto the simplex in place.
void project_rows_simplex(Matrix& m);

namespace examples {

// 4x2 matrices with one, two (3:1) and two (2:2) predicted classes.
ProbMatrix table_p1();
ProbMatrix table_p2();
ProbMatrix table_p3();

// 2x2 extreme points of [[p1, 1-p1], [p2, 1-p2]]:
// P1 = (0,0), P2 = (1,0), P3 = (0,1), P4 = (1,1) in (p1, p2).
ProbMatrix corner_p1();
ProbMatrix corner_p2();
ProbMatrix corner_p3();
ProbMatrix corner_p4();

}  // namespace examples

}  // namespace eqloss
