#pragma once

// Batch-prediction losses over row-stochastic matrices: maximum squares (MS),
// batch nuclear-norm maximization (BNM), class-weighted squares maximization
// (CWSM) and normalized squares maximization (NSM), plus their gradients and
// the equity / discriminability metrics.
//
// Every loss is in minimization orientation: MS, BNM, CWSM and NSM are the
// negatives of the quantities being maximized (sum of squares, nuclear norm,
// CWS, NS).

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "eqloss/matrix.hpp"
#include "eqloss/probmat.hpp"
#include "eqloss/svd.hpp"

namespace eqloss {

enum class LossKind { MS, BNM, CWSM, NSM };

std::string_view to_string(LossKind kind);

/// Parses "ms", "bnm", "cwsm", "nsm" (case-insensitive). Throws
/// std::invalid_argument otherwise.
LossKind parse_loss_kind(std::string_view text);

/// NSM's epsilon: either a fixed value or the automatic rule
/// epsilon = 0 if B > C, else 1e-6.
class Epsilon {
 public:
  static Epsilon fixed(double value);
  static Epsilon automatic() { return Epsilon(); }

  bool is_auto() const noexcept { return !value_.has_value(); }
  double resolve(std::size_t rows, std::size_t classes) const;
  /// The raw value; 0 for the automatic rule.
  double value_or_zero() const noexcept { return value_.value_or(0.0); }

  bool operator==(const Epsilon&) const = default;

 private:
  Epsilon() = default;
  std::optional<double> value_;
};

inline constexpr double kAutoEpsilon = 1e-6;
double auto_epsilon(std::size_t rows, std::size_t classes);

/// Loss selector and parameters. Parameters irrelevant to `kind` are kept but
/// unused.
struct LossConfig {
  LossKind kind = LossKind::MS;
  double r = 0.5;
  double alpha = 1.0;
  Epsilon epsilon = Epsilon::automatic();
  double lambda = 1.0;

  /// Throws std::invalid_argument when r is outside [0, 1], alpha, epsilon or
  /// lambda is negative or non-finite, or kind is NSM with r in (0, 1] and
  /// alpha == 0.
  static LossConfig make(LossKind kind, double r = 0.5, double alpha = 1.0,
                         Epsilon epsilon = Epsilon::automatic(), double lambda = 1.0);

  void check() const;
};

struct GradOutput {
  double value = 0.0;
  Matrix grad;
  /// False when the result is not a true gradient: BNM with repeated or
  /// vanishing singular values, or NSM with 0 < r < 1 and a pair of
  /// orthogonal rows (one-sided slope at the kink).
  bool exact = true;
};

// Validated entry points.

double ms(const ProbMatrix& p);
SvdResult svd(const ProbMatrix& p);
double nuclear_norm(const ProbMatrix& p);
double bnm(const ProbMatrix& p);
/// (1/C) sum_c [sum_i P_ic^2] / (sum_i P_ic)^r; classes with zero mass
/// contribute 0.
double cws(const ProbMatrix& p, double r);
double cwsm(const ProbMatrix& p, double r);
/// S / (sum_{i!=j} (P_i . P_j)^r + alpha S) + epsilon S with S = sum P^2 and
/// 0^r = 0. Throws DomainError when the denominator is below 1e-15.
double ns(const ProbMatrix& p, double r, double alpha, double epsilon);
double nsm(const ProbMatrix& p, double r, double alpha, double epsilon);

double loss_value(const ProbMatrix& p, const LossConfig& cfg);
GradOutput gradient(const ProbMatrix& p, const LossConfig& cfg);

/// Mean squared confidence (1/B) sum P^2, in [1/C, 1].
double discriminability(const ProbMatrix& p);
/// 1 - sum_c |n_c / B - 1/C|; equal to 1 iff all soft class sizes are B/C.
double equity_metric(const ProbMatrix& p);

/// The same formulas on arbitrary matrices, without validation. Used for
/// finite-difference checks where perturbed rows leave the simplex.
namespace unchecked {

double sum_squares(const Matrix& p);
double ms(const Matrix& p);
double bnm(const Matrix& p);
double cws(const Matrix& p, double r);
double ns(const Matrix& p, double r, double alpha, double epsilon);
/// `epsilon` is already resolved.
double loss_value(const Matrix& p, const LossConfig& cfg, double epsilon);
GradOutput gradient(const Matrix& p, const LossConfig& cfg, double epsilon);

}  // namespace unchecked

}  // namespace eqloss
