#pragma once

// Multi-start projected gradient ascent over products of row simplices, and
// the B = C = 2 loss-surface generator.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "eqloss/losses.hpp"
#include "eqloss/probmat.hpp"
#include "eqloss/random.hpp"

namespace eqloss {

struct AscentConfig {
  std::size_t inits = 64;
  std::size_t steps = 2000;
  double step_size = 0.05;
  double tol_grad = 1e-7;
  std::uint64_t seed = kDefaultSeed;

  /// Throws std::invalid_argument for zero counts or non-positive sizes.
  void check() const;
};

/// Per-start outcome of an ascent run.
struct AscentRun {
  double final_value = 0.0;
  std::size_t steps_taken = 0;
  std::size_t halvings = 0;      // rejected trial steps
  std::size_t inexact_steps = 0; // steps driven by a subgradient
  bool converged = false;        // stopped on the projected-gradient test
};

struct AscentResult {
  ProbMatrix best;
  double best_value;  // negated loss at `best`
  std::size_t best_init;
  std::vector<AscentRun> runs;
};

/// Observer invoked after every accepted step with (init, step, iterate,
/// value). Used by tests to audit feasibility and monotonicity.
using AscentObserver = std::function<void(std::size_t init, std::size_t step,
                                          const Matrix& iterate, double value)>;

/// Maximizes the negated loss over B x C row-stochastic matrices from
/// `cfg.inits` flat-Dirichlet interior starts. Each step moves along the
/// negated loss gradient, re-projects every row onto the simplex and halves the
/// step until the value does not drop by more than 1e-10. The best final
/// iterate wins; ties go to the lowest init index. Deterministic in cfg.seed.
AscentResult maximize(const LossConfig& loss, std::size_t rows, std::size_t classes,
                      const AscentConfig& cfg, const AscentObserver& observer = {});

struct SurfacePoint {
  double p1;
  double p2;
  double value;
};

/// Negated loss over the 2x2 family [[p1, 1-p1], [p2, 1-p2]] on a uniform
/// G x G grid of [0,1]^2. Points are ordered p1-major.
struct SurfaceGrid {
  LossConfig loss;
  std::size_t grid = 0;
  std::vector<SurfacePoint> points;
  double max_value = 0.0;
  std::vector<SurfacePoint> argmax;  // points within argmax_tol of max_value
  double argmax_tol = 0.0;
};

inline constexpr double kSurfaceArgmaxTol = 1e-9;

/// Requires G in [2, 2001].
SurfaceGrid surface(const LossConfig& loss, std::size_t grid,
                    double argmax_tol = kSurfaceArgmaxTol);

/// Name of the extreme point at grid corner (p1, p2) ("P1".."P4"), or empty
/// when the point is not a corner.
std::string corner_name(double p1, double p2);

void write_surface_csv(std::ostream& out, const SurfaceGrid& s);
/// Reads back the "# p1,p2,value" CSV written by write_surface_csv.
std::vector<SurfacePoint> read_surface_csv(std::istream& in);
/// JSON sidecar with loss parameters, grid size, maximum and argmax set.
std::string surface_argmax_json(const SurfaceGrid& s);

/// Euclidean norm of the loss gradient along the diagonal p1 = p2 = t, for
/// inspecting how strongly each loss pushes uncertain predictions.
std::vector<std::pair<double, double>> gradient_profile(const LossConfig& loss,
                                                        std::size_t samples, double lo,
                                                        double hi);

}  // namespace eqloss
