#include "eqloss/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "eqloss/errors.hpp"

namespace eqloss {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::MS: return "ms";
    case LossKind::BNM: return "bnm";
    case LossKind::CWSM: return "cwsm";
    case LossKind::NSM: return "nsm";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "ms") return LossKind::MS;
  if (lower == "bnm") return LossKind::BNM;
  if (lower == "cwsm") return LossKind::CWSM;
  if (lower == "nsm") return LossKind::NSM;
  throw std::invalid_argument("unknown loss '" + std::string(text) +
                              "' (expected ms, bnm, cwsm or nsm)");
}

Epsilon Epsilon::fixed(double value) {
  if (!std::isfinite(value) || value < 0.0)
    throw std::invalid_argument("epsilon must be a finite non-negative number");
  Epsilon e;
  e.value_ = value;
  return e;
}

double auto_epsilon(std::size_t rows, std::size_t classes) {
  return rows > classes ? 0.0 : kAutoEpsilon;
}

double Epsilon::resolve(std::size_t rows, std::size_t classes) const {
  return value_ ? *value_ : auto_epsilon(rows, classes);
}

LossConfig LossConfig::make(LossKind kind, double r, double alpha, Epsilon epsilon,
                            double lambda) {
  LossConfig cfg{kind, r, alpha, epsilon, lambda};
  cfg.check();
  return cfg;
}

void LossConfig::check() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (!std::isfinite(r) || r < 0.0 || r > 1.0) fail("r must lie in [0, 1]");
  if (!std::isfinite(alpha) || alpha < 0.0) fail("alpha must be >= 0");
  if (!std::isfinite(lambda) || lambda < 0.0) fail("lambda must be >= 0");
  if (kind == LossKind::NSM && r > 0.0 && alpha == 0.0)
    fail("nsm with r in (0, 1] requires alpha > 0 (the denominator can vanish)");
}

namespace unchecked {

double sum_squares(const Matrix& p) {
  double s = 0.0;
  for (double x : p.data()) s += x * x;
  return s;
}

double ms(const Matrix& p) { return -sum_squares(p) / static_cast<double>(p.rows()); }

double bnm(const Matrix& p) { return -nuclear_norm_of(p) / static_cast<double>(p.rows()); }

namespace {

std::vector<double> column_sums(const Matrix& p) {
  std::vector<double> n(p.cols(), 0.0);
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t c = 0; c < p.cols(); ++c) n[c] += p(i, c);
  return n;
}

std::vector<double> column_squares(const Matrix& p) {
  std::vector<double> s(p.cols(), 0.0);
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t c = 0; c < p.cols(); ++c) s[c] += p(i, c) * p(i, c);
  return s;
}

double row_dot(const Matrix& p, std::size_t i, std::size_t j) {
  const auto a = p.row(i);
  const auto b = p.row(j);
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// q^r with 0^r = 0 for every r in [0, 1].
double pair_power(double q, double r) {
  if (q <= 0.0) return 0.0;
  if (r == 1.0) return q;
  if (r == 0.5) return std::sqrt(q);
  return std::pow(q, r);
}

// Below this overlap q^r (0 < r < 1) is treated as a kink: its slope is the
// slope at the floor, a large one-sided derivative that keeps orthogonal rows
// orthogonal under projected steps.
constexpr double kPairFloor = 1e-12;

// d(q^r)/dq. Exact for q > 0; at q = 0 a capped one-sided value when 0 < r < 1.
double pair_power_slope(double q, double r) {
  if (r == 1.0) return 1.0;
  if (r == 0.0) return 0.0;
  return r * std::pow(std::max(q, kPairFloor), r - 1.0);
}

double pair_term(const Matrix& p, double r) {
  if (r == 1.0) {
    // sum_{i != j} P_i . P_j = sum_c n_c^2 - sum P^2, O(BC).
    double sq = 0.0;
    for (double n : column_sums(p)) sq += n * n;
    return sq - sum_squares(p);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = i + 1; j < p.rows(); ++j) total += pair_power(row_dot(p, i, j), r);
  return 2.0 * total;
}

constexpr double kMinDenominator = 1e-15;

double checked_denominator(double pairs, double alpha, double squares) {
  const double denom = pairs + alpha * squares;
  if (!(denom >= kMinDenominator)) {
    std::ostringstream msg;
    msg << "normalized squares denominator " << denom << " is below " << kMinDenominator
        << " (alpha = " << alpha << ")";
    throw DomainError(msg.str());
  }
  return denom;
}

GradOutput ms_gradient(const Matrix& p) {
  GradOutput out{ms(p), Matrix(p.rows(), p.cols()), true};
  const double scale = -2.0 / static_cast<double>(p.rows());
  for (std::size_t k = 0; k < p.data().size(); ++k) out.grad.data()[k] = scale * p.data()[k];
  return out;
}

constexpr double kSingularGap = 1e-8;
constexpr double kSingularFloor = 1e-10;

GradOutput bnm_gradient(const Matrix& p) {
  const SvdResult s = jacobi_svd(p);
  const double b = static_cast<double>(p.rows());
  GradOutput out;
  out.value = -std::accumulate(s.sigma.begin(), s.sigma.end(), 0.0) / b;
  out.grad = Matrix(p.rows(), p.cols());
  const std::size_t k = s.sigma.size();
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t c = 0; c < p.cols(); ++c) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += s.u(i, t) * s.v(c, t);
      out.grad(i, c) = -acc / b;
    }
  out.exact = true;
  for (std::size_t t = 0; t < k; ++t) {
    if (s.sigma[t] <= kSingularFloor) out.exact = false;
    if (t + 1 < k && s.sigma[t] - s.sigma[t + 1] <= kSingularGap) out.exact = false;
  }
  return out;
}

// Gradient of CWS (not CWSM).
Matrix cws_gradient(const Matrix& p, double r) {
  const auto n = column_sums(p);
  const auto sq = column_squares(p);
  const double inv_c = 1.0 / static_cast<double>(p.cols());
  Matrix g(p.rows(), p.cols());
  for (std::size_t c = 0; c < p.cols(); ++c) {
    if (n[c] <= 0.0 && r > 0.0) continue;  // zero-mass class: term and slope are 0
    const double w = std::pow(n[c], -r);
    const double tail = r * sq[c] * w / n[c];
    for (std::size_t i = 0; i < p.rows(); ++i)
      g(i, c) = inv_c * (2.0 * p(i, c) * w - (r > 0.0 ? tail : 0.0));
  }
  return g;
}

// Gradient of NS (not NSM).
Matrix ns_gradient(const Matrix& p, double r, double alpha, double epsilon, double* value,
                   bool* exact) {
  const double squares = sum_squares(p);
  const double pairs = pair_term(p, r);
  const double denom = checked_denominator(pairs, alpha, squares);
  *value = squares / denom + epsilon * squares;

  // d(pairs)/dP_ic = 2 sum_{j != i} slope(q_ij) P_jc.
  Matrix dpairs(p.rows(), p.cols());
  if (r == 1.0) {
    const auto n = column_sums(p);
    for (std::size_t i = 0; i < p.rows(); ++i)
      for (std::size_t c = 0; c < p.cols(); ++c) dpairs(i, c) = 2.0 * (n[c] - p(i, c));
  } else {
    for (std::size_t i = 0; i < p.rows(); ++i)
      for (std::size_t j = i + 1; j < p.rows(); ++j) {
        const double q = row_dot(p, i, j);
        if (r > 0.0 && q <= 0.0) *exact = false;
        const double slope = pair_power_slope(q, r);
        if (slope == 0.0) continue;
        for (std::size_t c = 0; c < p.cols(); ++c) {
          dpairs(i, c) += 2.0 * slope * p(j, c);
          dpairs(j, c) += 2.0 * slope * p(i, c);
        }
      }
  }

  Matrix g(p.rows(), p.cols());
  const double inv_d2 = 1.0 / (denom * denom);
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t c = 0; c < p.cols(); ++c) {
      const double ds = 2.0 * p(i, c);
      const double dd = dpairs(i, c) + alpha * ds;
      g(i, c) = (ds * denom - squares * dd) * inv_d2 + epsilon * ds;
    }
  return g;
}

void negate(Matrix& m) {
  for (double& x : m.data()) x = -x;
}

}  // namespace

double cws(const Matrix& p, double r) {
  const auto n = column_sums(p);
  const auto sq = column_squares(p);
  double total = 0.0;
  for (std::size_t c = 0; c < p.cols(); ++c) {
    if (n[c] <= 0.0) continue;
    total += sq[c] / (r == 0.0 ? 1.0 : std::pow(n[c], r));
  }
  return total / static_cast<double>(p.cols());
}

double ns(const Matrix& p, double r, double alpha, double epsilon) {
  const double squares = sum_squares(p);
  const double denom = checked_denominator(pair_term(p, r), alpha, squares);
  return squares / denom + epsilon * squares;
}

double loss_value(const Matrix& p, const LossConfig& cfg, double epsilon) {
  switch (cfg.kind) {
    case LossKind::MS: return ms(p);
    case LossKind::BNM: return bnm(p);
    case LossKind::CWSM: return -cws(p, cfg.r);
    case LossKind::NSM: return -ns(p, cfg.r, cfg.alpha, epsilon);
  }
  throw std::logic_error("unhandled loss kind");
}

GradOutput gradient(const Matrix& p, const LossConfig& cfg, double epsilon) {
  switch (cfg.kind) {
    case LossKind::MS: return ms_gradient(p);
    case LossKind::BNM: return bnm_gradient(p);
    case LossKind::CWSM: {
      GradOutput out{-cws(p, cfg.r), cws_gradient(p, cfg.r), true};
      negate(out.grad);
      return out;
    }
    case LossKind::NSM: {
      double value = 0.0;
      GradOutput out;
      out.grad = ns_gradient(p, cfg.r, cfg.alpha, epsilon, &value, &out.exact);
      out.value = -value;
      negate(out.grad);
      return out;
    }
  }
  throw std::logic_error("unhandled loss kind");
}

}  // namespace unchecked

double ms(const ProbMatrix& p) { return unchecked::ms(p.matrix()); }

SvdResult svd(const ProbMatrix& p) { return jacobi_svd(p.matrix()); }

double nuclear_norm(const ProbMatrix& p) { return nuclear_norm_of(p.matrix()); }

double bnm(const ProbMatrix& p) { return unchecked::bnm(p.matrix()); }

double cws(const ProbMatrix& p, double r) { return unchecked::cws(p.matrix(), r); }

double cwsm(const ProbMatrix& p, double r) { return -cws(p, r); }

double ns(const ProbMatrix& p, double r, double alpha, double epsilon) {
  return unchecked::ns(p.matrix(), r, alpha, epsilon);
}

double nsm(const ProbMatrix& p, double r, double alpha, double epsilon) {
  return -ns(p, r, alpha, epsilon);
}

double loss_value(const ProbMatrix& p, const LossConfig& cfg) {
  cfg.check();
  return unchecked::loss_value(p.matrix(), cfg, cfg.epsilon.resolve(p.rows(), p.cols()));
}

GradOutput gradient(const ProbMatrix& p, const LossConfig& cfg) {
  cfg.check();
  return unchecked::gradient(p.matrix(), cfg, cfg.epsilon.resolve(p.rows(), p.cols()));
}

double discriminability(const ProbMatrix& p) {
  return unchecked::sum_squares(p.matrix()) / static_cast<double>(p.rows());
}

double equity_metric(const ProbMatrix& p) {
  const auto sizes = class_sizes(p);
  const double b = static_cast<double>(p.rows());
  const double uniform = 1.0 / static_cast<double>(p.cols());
  double dev = 0.0;
  for (double n : sizes.sizes) dev += std::abs(n / b - uniform);
  return 1.0 - dev;
}

}  // namespace eqloss
