#include "eqloss/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "eqloss/errors.hpp"

namespace eqloss {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double column_dot(const Matrix& m, std::size_t p, std::size_t q) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, p) * m(i, q);
  return s;
}

void rotate_columns(Matrix& m, std::size_t p, std::size_t q, double c, double s) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double x = m(i, p);
    const double y = m(i, q);
    m(i, p) = c * x - s * y;
    m(i, q) = s * x + c * y;
  }
}

// Replaces column j of `u` with a unit vector orthogonal to every column in
// `basis`, chosen among projected standard basis vectors for stability.
void complete_column(Matrix& u, std::size_t j, const std::vector<std::size_t>& basis) {
  const std::size_t m = u.rows();
  std::vector<double> best;
  double best_norm = -1.0;
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> v(m, 0.0);
    v[k] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t b : basis) {
        double d = 0.0;
        for (std::size_t i = 0; i < m; ++i) d += u(i, b) * v[i];
        for (std::size_t i = 0; i < m; ++i) v[i] -= d * u(i, b);
      }
    }
    const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (n > best_norm) {
      best_norm = n;
      best = std::move(v);
    }
  }
  for (std::size_t i = 0; i < m; ++i) u(i, j) = best[i] / best_norm;
}

// Tall case, rows >= cols.
SvdResult jacobi_tall(const Matrix& a) {
  const std::size_t n = a.cols();
  Matrix w = a;
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  const std::size_t cap = 100 * std::max<std::size_t>(1, n);
  const double tol = kEps * static_cast<double>(a.rows());
  // Columns below this squared norm are numerically zero; rotating them only
  // shuffles roundoff and can cycle forever.
  double fro2 = 0.0;
  for (double x : a.data()) fro2 += x * x;
  const double null_floor = kEps * kEps * fro2;
  std::size_t sweep = 0;
  bool rotated = true;
  while (rotated) {
    if (sweep == cap) {
      std::ostringstream msg;
      msg << "Jacobi SVD did not converge after " << sweep << " sweeps";
      throw ConvergenceError(msg.str(), sweep);
    }
    ++sweep;
    rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = column_dot(w, p, p);
        const double beta = column_dot(w, q, q);
        const double gamma = column_dot(w, p, q);
        if (gamma == 0.0 || std::min(alpha, beta) <= null_floor ||
            std::abs(gamma) <= tol * std::sqrt(alpha * beta))
          continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        rotate_columns(w, p, q, c, s);
        rotate_columns(v, p, q, c, s);
      }
    }
  }

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = std::sqrt(column_dot(w, j, j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  SvdResult out;
  out.sweeps = sweep;
  out.sigma.resize(n);
  out.u = Matrix(a.rows(), n);
  out.v = Matrix(n, n);
  const double smax = n ? norms[order[0]] : 0.0;
  const double negligible = smax * kEps * static_cast<double>(std::max(a.rows(), n));
  std::vector<std::size_t> kept;
  std::vector<std::size_t> deficient;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.sigma[j] = norms[src];
    for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v(i, src);
    if (norms[src] > negligible && norms[src] > 0.0) {
      for (std::size_t i = 0; i < a.rows(); ++i) out.u(i, j) = w(i, src) / norms[src];
      kept.push_back(j);
    } else {
      deficient.push_back(j);
    }
  }
  for (std::size_t j : deficient) {
    complete_column(out.u, j, kept);
    kept.push_back(j);
  }
  return out;
}

void fix_signs(SvdResult& r) {
  for (std::size_t j = 0; j < r.sigma.size(); ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < r.u.rows(); ++i) {
      if (std::abs(r.u(i, j)) > best) {
        best = std::abs(r.u(i, j));
        arg = i;
      }
    }
    if (r.u(arg, j) < 0.0) {
      for (std::size_t i = 0; i < r.u.rows(); ++i) r.u(i, j) = -r.u(i, j);
      for (std::size_t i = 0; i < r.v.rows(); ++i) r.v(i, j) = -r.v(i, j);
    }
  }
}

}  // namespace

SvdResult jacobi_svd(const Matrix& a) {
  SvdResult r;
  if (a.rows() >= a.cols()) {
    r = jacobi_tall(a);
  } else {
    SvdResult t = jacobi_tall(a.transposed());
    r.sigma = std::move(t.sigma);
    r.u = std::move(t.v);
    r.v = std::move(t.u);
    r.sweeps = t.sweeps;
  }
  fix_signs(r);
  return r;
}

double nuclear_norm_of(const Matrix& a) {
  const auto r = jacobi_svd(a);
  return std::accumulate(r.sigma.begin(), r.sigma.end(), 0.0);
}

}  // namespace eqloss
