#include "eqloss/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "eqloss/errors.hpp"
#include "json_util.hpp"

namespace eqloss {

void AscentConfig::check() const {
  if (inits == 0) throw std::invalid_argument("inits must be positive");
  if (steps == 0) throw std::invalid_argument("steps must be positive");
  if (!(step_size > 0.0) || !std::isfinite(step_size))
    throw std::invalid_argument("step size must be positive");
  if (!(tol_grad > 0.0)) throw std::invalid_argument("tol_grad must be positive");
}

namespace {

constexpr double kMonotoneSlack = 1e-10;
constexpr int kMaxHalvings = 60;

struct InitOutcome {
  Matrix iterate;
  AscentRun run;
};

InitOutcome ascend_one(const LossConfig& loss, std::size_t rows, std::size_t classes,
                       const AscentConfig& cfg, std::size_t init, double epsilon,
                       const AscentObserver& observer) {
  Rng rng(mix_seed(cfg.seed, init));
  Matrix p(rows, classes);
  for (std::size_t i = 0; i < rows; ++i) rng.flat_dirichlet(p.row(i));

  AscentRun run;
  double value = -unchecked::loss_value(p, loss, epsilon);
  Matrix candidate(rows, classes);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const GradOutput g = unchecked::gradient(p, loss, epsilon);
    if (!g.exact) ++run.inexact_steps;

    double eta = cfg.step_size;
    bool accepted = false;
    double next_value = value;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      for (std::size_t k = 0; k < p.data().size(); ++k)
        candidate.data()[k] = p.data()[k] - eta * g.grad.data()[k];
      project_rows_simplex(candidate);
      next_value = -unchecked::loss_value(candidate, loss, epsilon);
      if (next_value >= value - kMonotoneSlack) {
        accepted = true;
        break;
      }
      ++run.halvings;
      eta *= 0.5;
    }
    if (!accepted) {
      run.converged = true;
      break;
    }

    double moved = 0.0;
    for (std::size_t k = 0; k < p.data().size(); ++k) {
      const double d = candidate.data()[k] - p.data()[k];
      moved += d * d;
    }
    std::swap(p, candidate);
    value = next_value;
    run.steps_taken = step + 1;
    if (observer) observer(init, step, p, value);
    if (std::sqrt(moved) / eta < cfg.tol_grad) {
      run.converged = true;
      break;
    }
  }
  run.final_value = value;
  return {std::move(p), run};
}

}  // namespace

AscentResult maximize(const LossConfig& loss, std::size_t rows, std::size_t classes,
                      const AscentConfig& cfg, const AscentObserver& observer) {
  loss.check();
  cfg.check();
  if (rows < 1 || classes < 2) throw DimensionError("ascent needs B >= 1 and C >= 2");
  const double epsilon = loss.epsilon.resolve(rows, classes);

  std::vector<AscentRun> runs;
  runs.reserve(cfg.inits);
  Matrix best;
  double best_value = 0.0;
  std::size_t best_init = 0;
  for (std::size_t init = 0; init < cfg.inits; ++init) {
    InitOutcome o = ascend_one(loss, rows, classes, cfg, init, epsilon, observer);
    // Strictly greater keeps the lowest index among exact ties.
    if (init == 0 || o.run.final_value > best_value) {
      best = std::move(o.iterate);
      best_value = o.run.final_value;
      best_init = init;
    }
    runs.push_back(o.run);
  }
  return {ProbMatrix::validate(best), best_value, best_init, std::move(runs)};
}

SurfaceGrid surface(const LossConfig& loss, std::size_t grid, double argmax_tol) {
  loss.check();
  if (grid < 2 || grid > 2001) throw std::invalid_argument("grid must lie in [2, 2001]");
  SurfaceGrid s;
  s.loss = loss;
  s.grid = grid;
  s.argmax_tol = argmax_tol;
  s.points.reserve(grid * grid);
  const double epsilon = loss.epsilon.resolve(2, 2);
  const double denom = static_cast<double>(grid - 1);
  Matrix p(2, 2);
  for (std::size_t i = 0; i < grid; ++i) {
    const double p1 = static_cast<double>(i) / denom;
    for (std::size_t j = 0; j < grid; ++j) {
      const double p2 = static_cast<double>(j) / denom;
      p(0, 0) = p1;
      p(0, 1) = 1.0 - p1;
      p(1, 0) = p2;
      p(1, 1) = 1.0 - p2;
      const double v = -unchecked::loss_value(p, loss, epsilon);
      s.points.push_back({p1, p2, v});
    }
  }
  s.max_value = s.points.front().value;
  for (const auto& pt : s.points) s.max_value = std::max(s.max_value, pt.value);
  for (const auto& pt : s.points)
    if (pt.value >= s.max_value - argmax_tol) s.argmax.push_back(pt);
  return s;
}

std::string corner_name(double p1, double p2) {
  if (p1 == 0.0 && p2 == 0.0) return "P1";
  if (p1 == 1.0 && p2 == 0.0) return "P2";
  if (p1 == 0.0 && p2 == 1.0) return "P3";
  if (p1 == 1.0 && p2 == 1.0) return "P4";
  return {};
}

namespace {
void put_double(std::ostream& out, double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  out.write(buf, ptr - buf);
}
}  // namespace

void write_surface_csv(std::ostream& out, const SurfaceGrid& s) {
  out << "# p1,p2,value\n";
  for (const auto& pt : s.points) {
    put_double(out, pt.p1);
    out << ',';
    put_double(out, pt.p2);
    out << ',';
    put_double(out, pt.value);
    out << '\n';
  }
}

std::vector<SurfacePoint> read_surface_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# p1,p2,value", 0) != 0)
    throw std::invalid_argument("surface CSV must start with '# p1,p2,value'");
  std::vector<SurfacePoint> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    double vals[3];
    const char* ptr = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 3; ++k) {
      auto res = std::from_chars(ptr, end, vals[k]);
      const bool sep_ok = k < 2 ? (res.ptr != end && *res.ptr == ',') : res.ptr == end;
      if (res.ec != std::errc() || !sep_ok)
        throw std::invalid_argument("surface CSV line " + std::to_string(line_no) +
                                    " is malformed");
      ptr = res.ptr + (k < 2 ? 1 : 0);
    }
    out.push_back({vals[0], vals[1], vals[2]});
  }
  return out;
}

std::string surface_argmax_json(const SurfaceGrid& s) {
  detail::ojson j;
  j["loss"] = detail::loss_to_json(s.loss);
  j["grid"] = s.grid;
  j["max_value"] = s.max_value;
  j["tolerance"] = s.argmax_tol;
  detail::ojson arr = detail::ojson::array();
  for (const auto& pt : s.argmax) {
    detail::ojson e;
    e["p1"] = pt.p1;
    e["p2"] = pt.p2;
    e["value"] = pt.value;
    e["corner"] = corner_name(pt.p1, pt.p2);
    arr.push_back(std::move(e));
  }
  j["argmax"] = std::move(arr);
  return j.dump(2) + "\n";
}

std::vector<std::pair<double, double>> gradient_profile(const LossConfig& loss,
                                                        std::size_t samples, double lo,
                                                        double hi) {
  loss.check();
  if (samples < 2) throw std::invalid_argument("profile needs at least two samples");
  const double epsilon = loss.epsilon.resolve(2, 2);
  std::vector<std::pair<double, double>> out;
  Matrix p(2, 2);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(samples - 1);
    p(0, 0) = p(1, 0) = t;
    p(0, 1) = p(1, 1) = 1.0 - t;
    const auto g = unchecked::gradient(p, loss, epsilon);
    double norm = 0.0;
    for (double x : g.grad.data()) norm += x * x;
    out.emplace_back(t, std::sqrt(norm));
  }
  return out;
}

}  // namespace eqloss
