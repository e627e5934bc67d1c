#include "eqloss/probmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "eqloss/errors.hpp"

namespace eqloss {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      std::ostringstream msg;
      msg << "ragged matrix: row " << i << " has " << rows[i].size() << " columns, expected "
          << cols;
      throw DimensionError(msg.str());
    }
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
  return out;
}

ProbMatrix ProbMatrix::validate(const Matrix& raw) {
  if (raw.rows() < 1) throw DimensionError("probability matrix needs at least one row");
  if (raw.cols() < 2) {
    std::ostringstream msg;
    msg << "probability matrix needs at least two columns, got " << raw.cols();
    throw DimensionError(msg.str());
  }
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < raw.cols(); ++c) {
      const double x = raw(i, c);
      if (!std::isfinite(x) || x < -kRowSumTolerance || x > 1.0 + kRowSumTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "row " << i << ": entry " << c << " = " << x << " is outside [0, 1]";
        throw DomainError(msg.str(), i);
      }
      sum += x;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "row " << i << " sums to " << sum << ", expected 1";
      throw DomainError(msg.str(), i);
    }
  }
  return ProbMatrix(raw);
}

ProbMatrix ProbMatrix::validate(const std::vector<std::vector<double>>& raw) {
  return validate(Matrix::from_rows(raw));
}

Matrix renormalize_rows(Matrix raw) {
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    auto row = raw.row(i);
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    if (!(sum > 0.0) || !std::isfinite(sum)) continue;
    for (double& x : row) x /= sum;
  }
  return raw;
}

ClassSizes class_sizes(const ProbMatrix& p) {
  ClassSizes out;
  out.sizes.assign(p.cols(), 0.0);
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t c = 0; c < p.cols(); ++c) out.sizes[c] += p(i, c);
  out.total = std::accumulate(out.sizes.begin(), out.sizes.end(), 0.0);
  return out;
}

bool is_one_hot_rows(const ProbMatrix& p, double tol) {
  if (!(tol >= 0.0 && tol < 0.5))
    throw std::invalid_argument("one-hot tolerance must lie in [0, 0.5)");
  for (std::size_t i = 0; i < p.rows(); ++i) {
    std::size_t hot = 0;
    for (double x : p.row(i)) {
      if (std::abs(x - 1.0) <= tol) {
        ++hot;
      } else if (std::abs(x) > tol) {
        return false;
      }
    }
    if (hot != 1) return false;
  }
  return true;
}

ProbMatrix one_hot_from_labels(std::span<const std::size_t> labels, std::size_t classes) {
  Matrix m(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw DimensionError("label out of range");
    m(i, labels[i]) = 1.0;
  }
  return ProbMatrix::validate(m);
}

std::vector<std::size_t> row_labels(const ProbMatrix& p) {
  std::vector<std::size_t> labels(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    auto row = p.row(i);
    labels[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return labels;
}

std::vector<std::size_t> label_counts(std::span<const std::size_t> labels, std::size_t classes) {
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t l : labels) ++counts.at(l);
  return counts;
}

namespace {

constexpr std::uint64_t kSaturated = UINT64_MAX;

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > kSaturated / a) return kSaturated;
  return a * b;
}

std::string budget_message(const char* what, std::size_t rows, std::size_t classes,
                           std::uint64_t count, std::uint64_t budget) {
  std::ostringstream msg;
  msg << what << " for B=" << rows << ", C=" << classes << " has ";
  if (count == kSaturated) {
    msg << "more than 2^64";
  } else {
    msg << count;
  }
  msg << " items, exceeding the enumeration budget " << budget;
  return msg.str();
}

}  // namespace

std::uint64_t one_hot_count(std::size_t rows, std::size_t classes) {
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < rows; ++i) n = saturating_mul(n, classes);
  return n;
}

std::uint64_t composition_count(std::size_t total, std::size_t parts) {
  if (parts == 0) return total == 0 ? 1 : 0;
  // binomial(total + parts - 1, k) with k = min(total, parts - 1), built up so
  // every intermediate is itself a binomial coefficient.
  const std::uint64_t n = total + parts - 1;
  const std::uint64_t k = std::min<std::uint64_t>(total, parts - 1);
  std::uint64_t acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // acc * (n - k + i) is divisible by i; split the division to avoid overflow.
    const std::uint64_t g = std::gcd(acc, i);
    const std::uint64_t factor = (n - k + i) / (i / g);
    acc /= g;
    if (acc > kSaturated / factor) return kSaturated;
    acc *= factor;
  }
  return acc;
}

OneHotStream::OneHotStream(std::size_t rows, std::size_t classes, std::uint64_t budget)
    : classes_(classes), labels_(rows, 0), size_(one_hot_count(rows, classes)) {
  if (rows < 1 || classes < 2) throw DimensionError("one-hot enumeration needs B >= 1, C >= 2");
  if (size_ > budget)
    throw BudgetError(budget_message("one-hot enumeration (C^B)", rows, classes, size_, budget),
                      size_);
}

std::optional<std::vector<std::size_t>> OneHotStream::next_labels() {
  if (done_) return std::nullopt;
  if (!started_) {
    started_ = true;
    return labels_;
  }
  // Odometer increment, last row least significant.
  for (std::size_t i = labels_.size(); i-- > 0;) {
    if (++labels_[i] < classes_) return labels_;
    labels_[i] = 0;
  }
  done_ = true;
  return std::nullopt;
}

std::optional<ProbMatrix> OneHotStream::next() {
  auto labels = next_labels();
  if (!labels) return std::nullopt;
  return one_hot_from_labels(*labels, classes_);
}

CompositionStream::CompositionStream(std::size_t total, std::size_t parts, std::uint64_t budget)
    : current_(parts, 0), size_(composition_count(total, parts)) {
  if (parts < 1) throw DimensionError("composition needs at least one part");
  if (size_ > budget)
    throw BudgetError(budget_message("size composition enumeration", total, parts, size_, budget),
                      size_);
  current_.back() = total;
}

std::optional<std::vector<std::size_t>> CompositionStream::next() {
  if (done_) return std::nullopt;
  if (!started_) {
    started_ = true;
    return current_;
  }
  // Rightmost position (excluding the last) with a non-empty suffix after it
  // is incremented; the suffix collapses onto the last part.
  const std::size_t k = current_.size();
  std::size_t suffix = current_[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) {
    if (suffix > 0) {
      ++current_[i];
      for (std::size_t j = i + 1; j < k; ++j) current_[j] = 0;
      current_[k - 1] = suffix - 1;
      return current_;
    }
    suffix += current_[i];
  }
  done_ = true;
  return std::nullopt;
}

std::vector<ProbMatrix> enumerate_one_hot(std::size_t rows, std::size_t classes,
                                          std::uint64_t budget) {
  OneHotStream stream(rows, classes, budget);
  std::vector<ProbMatrix> out;
  out.reserve(stream.size());
  while (auto p = stream.next()) out.push_back(std::move(*p));
  return out;
}

std::vector<ClassSizes> enumerate_size_compositions(std::size_t total, std::size_t classes,
                                                    std::uint64_t budget) {
  CompositionStream stream(total, classes, budget);
  std::vector<ClassSizes> out;
  out.reserve(stream.size());
  while (auto comp = stream.next()) {
    ClassSizes s;
    s.sizes.assign(comp->begin(), comp->end());
    s.total = static_cast<double>(total);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> project_row_simplex(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    prefix += sorted[j];
    const double candidate = (prefix - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) tau = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t c = 0; c < v.size(); ++c) out[c] = std::max(v[c] - tau, 0.0);
  return out;
}

void project_rows_simplex(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    const auto projected = project_row_simplex(row);
    std::copy(projected.begin(), projected.end(), row.begin());
  }
}

namespace examples {

namespace {
ProbMatrix from_labels(std::initializer_list<std::size_t> labels, std::size_t classes) {
  const std::vector<std::size_t> v(labels);
  return one_hot_from_labels(v, classes);
}
}  // namespace

ProbMatrix table_p1() { return from_labels({0, 0, 0, 0}, 2); }
ProbMatrix table_p2() { return from_labels({0, 0, 0, 1}, 2); }
ProbMatrix table_p3() { return from_labels({0, 0, 1, 1}, 2); }

ProbMatrix corner_p1() { return from_labels({1, 1}, 2); }
ProbMatrix corner_p2() { return from_labels({0, 1}, 2); }
ProbMatrix corner_p3() { return from_labels({1, 0}, 2); }
ProbMatrix corner_p4() { return from_labels({0, 0}, 2); }

}  // namespace examples

}  // namespace eqloss
