#pragma once

// Brute-force and evidence-based checks of the optimality structure of the
// four losses: one-hot optimal rows and balanced class sizes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eqloss/optimizer.hpp"
#include "eqloss/probmat.hpp"

namespace eqloss {

/// Balanced class sizes for B samples over C classes: m classes of size
/// floor(B/C) and C - m of size ceil(B/C), with
/// m * floor + (C - m) * ceil = B. When C divides B, m = C.
struct BalancedSizes {
  std::size_t floor_count = 0;
  std::size_t floor_size = 0;
  std::size_t ceil_size = 0;
  std::vector<std::size_t> sizes;  // ascending

  bool operator==(const BalancedSizes&) const = default;
};

BalancedSizes balanced_sizes(std::size_t rows, std::size_t classes);

/// Hessian diagonal entry of f(x) = sum_c (b_c + x_c^2) / (a_c + x_c)^r, the
/// CWS objective as a function of one row x with the remaining rows' column
/// mass a_c and squared mass b_c held fixed.
double hessian_diag(double a, double b, double x, double r);

enum class Verdict { Pass, Fail, Descriptive, NotApplicable };

std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view text);

struct TheoremParams {
  std::size_t rows = 0;
  std::size_t classes = 0;
  std::optional<double> r;
  std::optional<double> alpha;
  std::optional<double> epsilon;

  bool operator==(const TheoremParams&) const = default;
};

/// One named sub-check. `measured` is compared against `threshold` in the
/// direction the check describes; `pass` is the outcome.
struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;

  bool operator==(const CheckResult&) const = default;
};

struct TheoremReport {
  int theorem = 0;
  TheoremParams params;
  /// "exhaustive" (full search), "evidence" (Hessian + optimization) or
  /// "descriptive" (no claim checked).
  std::string method;
  /// "size-multiset" or "row-labels".
  std::string argmax_kind;
  std::vector<std::vector<std::size_t>> argmax;  // sorted, ties kept
  double optimum = 0.0;
  std::optional<BalancedSizes> predicted_sizes;
  std::optional<double> predicted_bound;
  Verdict verdict = Verdict::Fail;
  double tolerance = 0.0;
  std::optional<std::uint64_t> seed;
  std::vector<CheckResult> checks;

  bool operator==(const TheoremReport&) const = default;
};

/// Stable JSON with keys
/// {theorem, params, method, argmax_kind, argmax, optimum, predicted, verdict,
///  tolerance, seed, checks}.
std::string to_json(const TheoremReport& report, int indent = 2);
TheoremReport report_from_json(const std::string& text);
std::string reports_to_json(const std::vector<TheoremReport>& reports, int indent = 2);
std::vector<TheoremReport> reports_from_json(const std::string& text);

/// One-line human readable summary.
std::string summary_line(const TheoremReport& report);

inline constexpr double kArgmaxTol = 1e-9;

/// Nuclear norm maximization: maximizes sum_c sqrt(n_c) over compositions and,
/// for B <= 6, checks the dense SVD against that formula on every one-hot
/// matrix.
TheoremReport verify_theorem_1(std::size_t rows, std::size_t classes,
                               std::uint64_t budget = kDefaultEnumerationBudget);

/// CWSM one-hot necessity (0 < r < 1): Hessian positivity over `trials`
/// random draws plus multi-start ascent landing on one-hot rows.
TheoremReport verify_theorem_2(std::size_t rows, std::size_t classes, double r,
                               std::size_t trials, std::uint64_t seed = kDefaultSeed,
                               const AscentConfig& ascent = {});

/// CWSM balanced sizes: maximizes sum_c n_c^(1-r) over compositions. For
/// r = 1 the report is descriptive only.
TheoremReport verify_theorem_3(std::size_t rows, std::size_t classes, double r,
                               std::uint64_t budget = kDefaultEnumerationBudget);

/// NSM at r = 1: composition argmin of sum_c n_c^2 (balanced sizes) plus
/// multi-start ascent landing on one-hot rows. `theorem` (4 or 5) is recorded
/// in the report; both parts are always run.
TheoremReport verify_theorem_4_5(std::size_t rows, std::size_t classes, double alpha,
                                 double epsilon, int theorem = 5,
                                 const AscentConfig& ascent = {},
                                 std::uint64_t budget = kDefaultEnumerationBudget);

/// NSM with B <= C, 0 < r < 1, epsilon > 0: exactly the injective one-hot
/// matrices attain 1/alpha + epsilon B, all other one-hot matrices fall
/// strictly below, and continuous ascent reaches the bound.
TheoremReport verify_theorem_6(std::size_t rows, std::size_t classes, double r, double alpha,
                               double epsilon, const AscentConfig& ascent = {},
                               std::uint64_t budget = kDefaultEnumerationBudget);

/// Sorted size multiset of one-hot-ish rows (argmax labels).
std::vector<std::size_t> size_multiset(const ProbMatrix& p);

}  // namespace eqloss
