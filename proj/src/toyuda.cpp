#include "eqloss/toyuda.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "eqloss/errors.hpp"
#include "eqloss/probmat.hpp"
#include "json_util.hpp"

namespace eqloss {

std::vector<double> ToyUdaConfig::effective_shift() const {
  if (!shift.empty()) return shift;
  std::vector<double> s(features, 0.0);
  if (!s.empty()) s[0] = 1.5 * noise;
  return s;
}

void ToyUdaConfig::check() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (classes < 2) fail("toyuda needs at least two classes");
  if (features < 2) fail("toyuda needs at least two features");
  if (features + 1 < classes) fail("a regular simplex of C centers needs d >= C - 1");
  if (source_per_class < 1) fail("source count per class must be >= 1");
  if (target_counts.size() != classes) fail("target_counts must have one entry per class");
  for (std::size_t n : target_counts)
    if (n < 1) fail("target counts must be >= 1");
  if (!shift.empty() && shift.size() != features) fail("shift must have length d");
  if (!(noise > 0.0)) fail("noise scale must be positive");
  if (!(spread >= 0.0)) fail("spread must be non-negative");
  const std::size_t total_target =
      std::accumulate(target_counts.begin(), target_counts.end(), std::size_t{0});
  if (batch_size < 1 || batch_size > total_target)
    fail("batch size must lie in [1, total target count]");
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  loss.check();
}

namespace {

// Regular simplex vertices in R^(C-1): centered basis vectors of R^C expressed
// in an orthonormal basis of the sum-zero subspace, scaled to unit norm.
Matrix simplex_vertices(std::size_t classes) {
  const std::size_t k = classes - 1;
  // Orthonormal basis of {x : sum x = 0} via Gram-Schmidt on e_1 - e_C, ...
  std::vector<std::vector<double>> basis;
  for (std::size_t t = 0; t < k; ++t) {
    std::vector<double> v(classes, 0.0);
    v[t] = 1.0;
    v[classes - 1] = -1.0;
    for (const auto& b : basis) {
      const double d = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
      for (std::size_t i = 0; i < classes; ++i) v[i] -= d * b[i];
    }
    const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (double& x : v) x /= n;
    basis.push_back(std::move(v));
  }
  Matrix out(classes, k);
  for (std::size_t c = 0; c < classes; ++c) {
    double norm = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      // <e_c - 1/C, b_t> = b_t[c] since b_t sums to zero.
      out(c, t) = basis[t][c];
      norm += out(c, t) * out(c, t);
    }
    norm = std::sqrt(norm);
    for (std::size_t t = 0; t < k; ++t) out(c, t) /= norm;
  }
  return out;
}

// Random orthogonal d x d matrix (Gram-Schmidt on Gaussian columns).
Matrix random_rotation(std::size_t d, Rng& rng) {
  Matrix q(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> v(d);
    double n = 0.0;
    do {
      for (double& x : v) x = rng.normal();
      for (std::size_t b = 0; b < j; ++b) {
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) dot += v[i] * q(i, b);
        for (std::size_t i = 0; i < d; ++i) v[i] -= dot * q(i, b);
      }
      n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    } while (n < 1e-8);
    for (std::size_t i = 0; i < d; ++i) q(i, j) = v[i] / n;
  }
  return q;
}

Dataset sample_domain(const Matrix& centers, const std::vector<std::size_t>& counts,
                      const std::vector<double>& offset, double noise, Rng& rng) {
  const std::size_t d = centers.cols();
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  Dataset out{Matrix(total, d), std::vector<std::size_t>(total)};
  std::size_t row = 0;
  for (std::size_t c = 0; c < counts.size(); ++c)
    for (std::size_t k = 0; k < counts[c]; ++k, ++row) {
      for (std::size_t t = 0; t < d; ++t)
        out.x(row, t) = centers(c, t) + offset[t] + noise * rng.normal();
      out.labels[row] = c;
    }
  return out;
}

Matrix logits(const LinearModel& m, const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols(), c = m.bias.size();
  Matrix z(n, c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < c; ++k) {
      double acc = m.bias[k];
      for (std::size_t t = 0; t < d; ++t) acc += x(i, t) * m.weights(t, k);
      z(i, k) = acc;
    }
  return z;
}

void softmax_rows(Matrix& z) {
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
}

// Mean of logsumexp(z_i) - z_i[y_i]; unbounded, unlike -log of a clamped
// probability, so divergence stays visible.
double cross_entropy(const Matrix& z, const std::vector<std::size_t>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto row = z.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    total += mx + std::log(sum) - z(i, labels[i]);
  }
  return total / static_cast<double>(z.rows());
}

// Accumulates X^T dZ into grad.weights and column sums of dZ into grad.bias.
void backprop_linear(const Matrix& x, const Matrix& dz, LinearModel& grad) {
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t k = 0; k < dz.cols(); ++k) {
      const double g = dz(i, k);
      if (g == 0.0) continue;
      for (std::size_t t = 0; t < x.cols(); ++t) grad.weights(t, k) += x(i, t) * g;
      grad.bias[k] += g;
    }
}

Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = x.row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

constexpr double kDivergenceCe = 1e3;

EpochMetrics evaluate(const LinearModel& model, const DomainPair& data, const LossConfig& loss) {
  EpochMetrics m;
  m.ce = cross_entropy(logits(model, data.source.x), data.source.labels);
  if (!(m.ce <= kDivergenceCe)) return m;  // the caller reports divergence
  const ProbMatrix pt = ProbMatrix::validate(model.predict(data.target.x));
  m.lt = loss_value(pt, loss);
  const auto pred = row_labels(pt);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.target.labels[i];
  m.acc = static_cast<double>(hits) / static_cast<double>(pred.size());
  m.equity = equity_metric(pt);
  m.disc = discriminability(pt);
  return m;
}

}  // namespace

DomainPair generate(const ToyUdaConfig& config) {
  config.check();
  Rng rng(mix_seed(config.seed, 0));
  const std::size_t d = config.features;
  const Matrix vertices = simplex_vertices(config.classes);
  const Matrix rot = random_rotation(d, rng);
  Matrix centers(config.classes, d);
  for (std::size_t c = 0; c < config.classes; ++c)
    for (std::size_t t = 0; t < d; ++t) {
      double acc = 0.0;
      for (std::size_t s = 0; s < vertices.cols(); ++s) acc += rot(t, s) * vertices(c, s);
      centers(c, t) = config.spread * acc;
    }

  DomainPair out;
  out.centers = centers;
  const std::vector<double> zero(d, 0.0);
  const std::vector<std::size_t> source_counts(config.classes, config.source_per_class);
  out.source = sample_domain(centers, source_counts, zero, config.noise, rng);
  out.target =
      sample_domain(centers, config.target_counts, config.effective_shift(), config.noise, rng);
  return out;
}

Matrix LinearModel::predict(const Matrix& x) const {
  Matrix z = logits(*this, x);
  softmax_rows(z);
  return z;
}

StepObjective step_objective(const LinearModel& model, const Matrix& source_x,
                             const std::vector<std::size_t>& source_labels,
                             const Matrix& target_x, const LossConfig& loss) {
  const std::size_t c = model.bias.size();
  StepObjective out;
  out.grad.weights = Matrix(model.weights.rows(), c);
  out.grad.bias.assign(c, 0.0);

  Matrix ps = logits(model, source_x);
  out.value = cross_entropy(ps, source_labels);
  softmax_rows(ps);
  const double inv_bs = 1.0 / static_cast<double>(source_x.rows());
  for (std::size_t i = 0; i < ps.rows(); ++i) {
    ps(i, source_labels[i]) -= 1.0;
    for (double& v : ps.row(i)) v *= inv_bs;
  }
  backprop_linear(source_x, ps, out.grad);

  if (loss.lambda == 0.0) return out;
  const Matrix pt = model.predict(target_x);
  const double epsilon = loss.epsilon.resolve(pt.rows(), pt.cols());
  const GradOutput g = unchecked::gradient(pt, loss, epsilon);
  out.value += loss.lambda * g.value;
  // Softmax Jacobian: dL/dz_ik = p_ik (g_ik - sum_c g_ic p_ic).
  Matrix dz(pt.rows(), c);
  for (std::size_t i = 0; i < pt.rows(); ++i) {
    double mean = 0.0;
    for (std::size_t k = 0; k < c; ++k) mean += g.grad(i, k) * pt(i, k);
    for (std::size_t k = 0; k < c; ++k)
      dz(i, k) = loss.lambda * pt(i, k) * (g.grad(i, k) - mean);
  }
  backprop_linear(target_x, dz, out.grad);
  return out;
}

ToyUdaResult train(const ToyUdaConfig& config) {
  const DomainPair data = generate(config);
  Rng rng(mix_seed(config.seed, 1));
  const std::size_t c = config.classes;
  const std::size_t ns = data.source.labels.size();
  const std::size_t nt = data.target.labels.size();
  const std::size_t bs = config.batch_size;

  ToyUdaResult result;
  result.model.weights = Matrix(config.features, c);
  result.model.bias.assign(c, 0.0);
  LinearModel velocity{Matrix(config.features, c), std::vector<double>(c, 0.0)};

  std::vector<std::size_t> src_perm(ns), tgt_perm(nt);
  std::iota(src_perm.begin(), src_perm.end(), 0);
  std::iota(tgt_perm.begin(), tgt_perm.end(), 0);
  const std::size_t steps_per_epoch = std::max<std::size_t>(1, nt / bs);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(src_perm.begin(), src_perm.end());
    rng.shuffle(tgt_perm.begin(), tgt_perm.end());
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      std::vector<std::size_t> si(bs), ti(bs);
      for (std::size_t k = 0; k < bs; ++k) {
        si[k] = src_perm[(step * bs + k) % ns];
        ti[k] = tgt_perm[step * bs + k];
      }
      std::vector<std::size_t> labels(bs);
      for (std::size_t k = 0; k < bs; ++k) labels[k] = data.source.labels[si[k]];
      const StepObjective obj =
          step_objective(result.model, gather_rows(data.source.x, si), labels,
                         gather_rows(data.target.x, ti), config.loss);

      auto update = [&](std::span<double> param, std::span<double> vel,
                        std::span<const double> grad) {
        for (std::size_t k = 0; k < param.size(); ++k) {
          vel[k] = config.momentum * vel[k] + grad[k];
          param[k] -= config.learning_rate * vel[k];
        }
      };
      update(result.model.weights.data(), velocity.weights.data(), obj.grad.weights.data());
      update(result.model.bias, velocity.bias, obj.grad.bias);
    }
    const EpochMetrics m = evaluate(result.model, data, config.loss);
    if (!(m.ce <= kDivergenceCe)) {
      std::ostringstream msg;
      msg << "source cross-entropy " << m.ce << " exceeded " << kDivergenceCe << " at epoch "
          << epoch << " (learning rate " << config.learning_rate << " too large?)";
      throw DivergenceError(msg.str());
    }
    result.trajectory.push_back(m);
  }
  return result;
}

namespace {

using detail::ojson;

ojson config_to_ojson(const ToyUdaConfig& c) {
  ojson j;
  j["classes"] = c.classes;
  j["features"] = c.features;
  j["source_per_class"] = c.source_per_class;
  j["target_counts"] = c.target_counts;
  j["shift"] = c.effective_shift();
  j["spread"] = c.spread;
  j["noise"] = c.noise;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["momentum"] = c.momentum;
  j["loss"] = detail::loss_to_json(c.loss);
  j["seed"] = c.seed;
  return j;
}

}  // namespace

ToyUdaConfig toyuda_config_from_json(const std::string& text) {
  return detail::with_json_errors("toy UDA config JSON", [&] {
    const auto j = ojson::parse(text);
    ToyUdaConfig c;
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("classes", c.classes);
    get("features", c.features);
    get("source_per_class", c.source_per_class);
    get("target_counts", c.target_counts);
    get("shift", c.shift);
    get("spread", c.spread);
    get("noise", c.noise);
    get("batch_size", c.batch_size);
    get("epochs", c.epochs);
    get("learning_rate", c.learning_rate);
    get("momentum", c.momentum);
    get("seed", c.seed);
    if (j.contains("loss")) c.loss = detail::loss_from_json(j.at("loss"), c.loss);
    for (const auto& [key, value] : j.items()) {
      static const std::vector<std::string> known = {
          "classes", "features", "source_per_class", "target_counts", "shift",
          "spread",  "noise",    "batch_size",       "epochs",        "learning_rate",
          "momentum", "loss",    "seed"};
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw std::invalid_argument("unknown toyuda config key '" + key + "'");
    }
    c.check();
    return c;
  });
}

std::string to_json(const ToyUdaConfig& config) { return config_to_ojson(config).dump(2) + "\n"; }

std::string to_json(const ToyUdaResult& result, const ToyUdaConfig& config) {
  ojson j;
  j["config"] = config_to_ojson(config);
  ojson traj;
  std::vector<std::size_t> epoch;
  std::vector<double> ce, lt, acc, eq, disc;
  for (std::size_t k = 0; k < result.trajectory.size(); ++k) {
    const auto& m = result.trajectory[k];
    epoch.push_back(k + 1);
    ce.push_back(m.ce);
    lt.push_back(m.lt);
    acc.push_back(m.acc);
    eq.push_back(m.equity);
    disc.push_back(m.disc);
  }
  traj["epoch"] = epoch;
  traj["ce"] = ce;
  traj["lt"] = lt;
  traj["acc"] = acc;
  traj["equity"] = eq;
  traj["disc"] = disc;
  j["trajectory"] = std::move(traj);
  ojson theta;
  theta["weights"] = result.model.weights.to_rows();
  theta["bias"] = result.model.bias;
  j["theta"] = std::move(theta);
  return j.dump(2) + "\n";
}

ToyUdaResult toyuda_result_from_json(const std::string& text) {
  return detail::with_json_errors("toy UDA result JSON", [&] {
    const auto j = ojson::parse(text);
    ToyUdaResult r;
    const auto& t = j.at("trajectory");
    const auto ce = t.at("ce").get<std::vector<double>>();
    const auto lt = t.at("lt").get<std::vector<double>>();
    const auto acc = t.at("acc").get<std::vector<double>>();
    const auto eq = t.at("equity").get<std::vector<double>>();
    const auto disc = t.at("disc").get<std::vector<double>>();
    for (std::size_t k = 0; k < ce.size(); ++k)
      r.trajectory.push_back({ce.at(k), lt.at(k), acc.at(k), eq.at(k), disc.at(k)});
    r.model.weights =
        Matrix::from_rows(j.at("theta").at("weights").get<std::vector<std::vector<double>>>());
    r.model.bias = j.at("theta").at("bias").get<std::vector<double>>();
    return r;
  });
}

void write_trajectory_csv(std::ostream& out, const ToyUdaResult& result) {
  out << "# epoch,ce,lt,acc,equity,disc\n";
  char buf[32];
  auto put = [&](double x) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    out.write(buf, ptr - buf);
  };
  for (std::size_t k = 0; k < result.trajectory.size(); ++k) {
    const auto& m = result.trajectory[k];
    out << (k + 1);
    for (double v : {m.ce, m.lt, m.acc, m.equity, m.disc}) {
      out << ',';
      put(v);
    }
    out << '\n';
  }
}

std::vector<EpochMetrics> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# epoch,ce,lt,acc,equity,disc", 0) != 0)
    throw std::invalid_argument("trajectory CSV must start with '# epoch,ce,lt,acc,equity,disc'");
  std::vector<EpochMetrics> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    double vals[6];
    const char* ptr = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 6; ++k) {
      auto res = std::from_chars(ptr, end, vals[k]);
      const bool sep_ok = k < 5 ? (res.ptr != end && *res.ptr == ',') : res.ptr == end;
      if (res.ec != std::errc() || !sep_ok)
        throw std::invalid_argument("trajectory CSV line " + std::to_string(line_no) +
                                    " is malformed");
      ptr = res.ptr + (k < 5 ? 1 : 0);
    }
    if (vals[0] != static_cast<double>(out.size() + 1))
      throw std::invalid_argument("trajectory CSV line " + std::to_string(line_no) +
                                  " has an out-of-order epoch");
    out.push_back({vals[1], vals[2], vals[3], vals[4], vals[5]});
  }
  return out;
}

}  // namespace eqloss
