#pragma once

// Desk-scale domain adaptation: a linear softmax classifier trained with
// cross-entropy on a labeled synthetic source domain plus lambda times one of
// the batch losses on an unlabeled, shifted and possibly imbalanced target.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "eqloss/losses.hpp"
#include "eqloss/matrix.hpp"
#include "eqloss/random.hpp"

namespace eqloss {

struct ToyUdaConfig {
  std::size_t classes = 3;
  std::size_t features = 2;
  std::size_t source_per_class = 100;
  std::vector<std::size_t> target_counts = {60, 30, 10};
  /// Added to every target point. Empty means 1.5 * noise along the first axis.
  std::vector<double> shift;
  double spread = 3.0;  // distance of each class center from the origin
  double noise = 1.0;   // isotropic standard deviation
  std::size_t batch_size = 30;
  std::size_t epochs = 200;
  double learning_rate = 0.1;
  double momentum = 0.0;
  LossConfig loss = LossConfig::make(LossKind::MS, 0.5, 1.0, Epsilon::automatic(), 1.0 / 3.0);
  std::uint64_t seed = kDefaultSeed;

  /// Shift with the default filled in.
  std::vector<double> effective_shift() const;
  /// Throws std::invalid_argument on inconsistent settings.
  void check() const;
};

struct Dataset {
  Matrix x;                         // n x d
  std::vector<std::size_t> labels;  // n
};

struct DomainPair {
  Dataset source;
  Dataset target;  // labels used for evaluation only
  Matrix centers;  // C x d source class centers
};

/// Class centers sit on a regular simplex (randomly rotated from the seed)
/// at distance `spread` from the origin; points are centers plus isotropic
/// Gaussian noise; target points are additionally shifted.
DomainPair generate(const ToyUdaConfig& config);

/// Linear softmax model: logits = x W + b.
struct LinearModel {
  Matrix weights;             // d x C
  std::vector<double> bias;   // C

  Matrix predict(const Matrix& x) const;  // row-wise softmax
};

struct EpochMetrics {
  double ce = 0.0;        // source cross-entropy, full source set
  double lt = 0.0;        // target loss on full target predictions
  double acc = 0.0;       // target accuracy
  double equity = 0.0;    // equity_metric on full target predictions
  double disc = 0.0;      // discriminability on full target predictions
};

struct ToyUdaResult {
  std::vector<EpochMetrics> trajectory;  // one per epoch
  LinearModel model;
};

/// Mini-batch gradient descent on mean source cross-entropy plus
/// lambda * L_t(target batch predictions). Throws DivergenceError if the
/// source cross-entropy exceeds 1e3.
ToyUdaResult train(const ToyUdaConfig& config);

/// Objective value and gradient for one step, exposed for gradient checks.
struct StepObjective {
  double value = 0.0;
  LinearModel grad;
};

StepObjective step_objective(const LinearModel& model, const Matrix& source_x,
                             const std::vector<std::size_t>& source_labels,
                             const Matrix& target_x, const LossConfig& loss);

ToyUdaConfig toyuda_config_from_json(const std::string& text);
std::string to_json(const ToyUdaConfig& config);
std::string to_json(const ToyUdaResult& result, const ToyUdaConfig& config);
ToyUdaResult toyuda_result_from_json(const std::string& text);

/// "# epoch,ce,lt,acc,equity,disc" trajectory CSV.
void write_trajectory_csv(std::ostream& out, const ToyUdaResult& result);
std::vector<EpochMetrics> read_trajectory_csv(std::istream& in);

}  // namespace eqloss
