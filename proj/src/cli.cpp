#include "eqloss/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "eqloss/errors.hpp"
#include "eqloss/losses.hpp"
#include "eqloss/matrix_io.hpp"
#include "eqloss/optimizer.hpp"
#include "eqloss/oracle.hpp"
#include "eqloss/probmat.hpp"
#include "eqloss/toyuda.hpp"

namespace eqloss {

namespace {

Epsilon parse_epsilon(const std::string& text) {
  if (text == "auto") return Epsilon::automatic();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size())
    throw std::invalid_argument("--epsilon expects a number or 'auto', got '" + text + "'");
  return Epsilon::fixed(v);
}

std::string format_epsilon(const Epsilon& e, std::size_t rows, std::size_t classes) {
  std::ostringstream s;
  s << std::setprecision(6) << e.resolve(rows, classes);
  if (e.is_auto()) s << " (auto)";
  return s.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot write '" + path + "'");
  f << text;
}

ProbMatrix load_matrix(const std::string& path, bool renormalize, std::istream& in) {
  Matrix raw = path == "-" ? read_matrix_csv(in) : read_matrix_csv_file(path);
  if (renormalize) raw = renormalize_rows(std::move(raw));
  return ProbMatrix::validate(raw);
}

void print_matrix(std::ostream& out, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << "  [";
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? ", " : "") << m(i, j);
    out << "]\n";
  }
}

struct LossFlags {
  std::string kind;
  std::optional<double> r;
  double alpha = 1.0;
  std::string epsilon = "auto";
  double lambda = 1.0;

  LossConfig config(double default_r = 0.5) const {
    return LossConfig::make(parse_loss_kind(kind), r.value_or(default_r), alpha,
                            parse_epsilon(epsilon), lambda);
  }
};

void add_param_flags(CLI::App* cmd, LossFlags& f, bool with_alpha_eps = true) {
  cmd->add_option("--r", f.r, "equity exponent r in [0, 1]");
  if (with_alpha_eps) {
    cmd->add_option("--alpha", f.alpha, "NSM denominator offset alpha")->capture_default_str();
    cmd->add_option("--epsilon", f.epsilon, "NSM additive term, a number or 'auto'")
        ->capture_default_str();
  }
}

int cmd_eval(const std::string& input, const LossFlags& flags, bool renormalize,
             std::istream& in, std::ostream& out) {
  const ProbMatrix p = load_matrix(input, renormalize, in);
  const std::size_t b = p.rows(), c = p.cols();
  // Without --r, CWS is reported at r = 0.5 and NS at r = 1.
  const double r_cws = flags.r.value_or(0.5);
  const double r_ns = flags.r.value_or(1.0);
  const Epsilon eps = parse_epsilon(flags.epsilon);
  const auto ns_cfg = LossConfig::make(LossKind::NSM, r_ns, flags.alpha, eps);
  LossConfig::make(LossKind::CWSM, r_cws);
  const double e = eps.resolve(b, c);

  out << std::setprecision(6);
  out << "matrix " << b << "x" << c << "\n";
  out << "nuclear_norm " << nuclear_norm(p) << "\n";
  out << "ms " << ms(p) << "\n";
  out << "bnm " << bnm(p) << "\n";
  out << "cws(r=" << r_cws << ") " << cws(p, r_cws) << "\n";
  out << "cwsm(r=" << r_cws << ") " << cwsm(p, r_cws) << "\n";
  std::ostringstream nsp;
  nsp << std::setprecision(6) << "r=" << r_ns << ",alpha=" << flags.alpha
      << ",epsilon=" << format_epsilon(eps, b, c);
  out << "ns(" << nsp.str() << ") " << ns(p, ns_cfg.r, ns_cfg.alpha, e) << "\n";
  out << "nsm(" << nsp.str() << ") " << nsm(p, ns_cfg.r, ns_cfg.alpha, e) << "\n";
  out << "equity " << equity_metric(p) << "\n";
  out << "discriminability " << discriminability(p) << "\n";
  return kExitOk;
}

int cmd_grad(const std::string& input, const LossFlags& flags, const std::string& out_path,
             std::istream& in, std::ostream& out) {
  const ProbMatrix p = load_matrix(input, false, in);
  const LossConfig cfg = flags.config();
  const GradOutput g = gradient(p, cfg);
  std::ostringstream header;
  header << "gradient of " << to_string(cfg.kind) << " r=" << cfg.r << " alpha=" << cfg.alpha
         << " epsilon=" << cfg.epsilon.resolve(p.rows(), p.cols())
         << " exact=" << (g.exact ? "true" : "false");
  write_matrix_csv_file(out_path, g.grad, header.str());
  out << std::setprecision(6) << "loss " << to_string(cfg.kind) << "\nvalue " << g.value
      << "\nexact " << (g.exact ? "true" : "false") << "\nwrote " << out_path << "\n";
  return kExitOk;
}

TheoremReport not_applicable(int theorem, std::size_t b, std::size_t c, const std::string& why) {
  TheoremReport r;
  r.theorem = theorem;
  r.params = {b, c, std::nullopt, std::nullopt, std::nullopt};
  r.method = "skipped: " + why;
  r.argmax_kind = "none";
  r.verdict = Verdict::NotApplicable;
  return r;
}

struct VerifyFlags {
  std::string theorem;
  std::size_t b = 0, c = 0;
  double r = 0.5;
  double alpha = 1.0;
  std::string epsilon = "auto";
  std::uint64_t seed = kDefaultSeed;
  std::size_t trials = 1000;
  std::string out;
};

TheoremReport run_theorem(int id, const VerifyFlags& f) {
  const double eps = parse_epsilon(f.epsilon).resolve(f.b, f.c);
  AscentConfig ascent;
  ascent.seed = f.seed;
  switch (id) {
    case 1: return verify_theorem_1(f.b, f.c);
    case 2: return verify_theorem_2(f.b, f.c, f.r, f.trials, f.seed, ascent);
    case 3: return verify_theorem_3(f.b, f.c, f.r);
    case 4:
    case 5: return verify_theorem_4_5(f.b, f.c, f.alpha, eps, id, ascent);
    case 6: return verify_theorem_6(f.b, f.c, f.r, f.alpha, eps, ascent);
    default: throw std::invalid_argument("--theorem must be 1-6 or all");
  }
}

int cmd_verify(const VerifyFlags& f, std::ostream& out) {
  std::vector<TheoremReport> reports;
  if (f.theorem == "all") {
    const bool fractional = f.r > 0.0 && f.r < 1.0;
    for (int id = 1; id <= 6; ++id) {
      if ((id == 2 || id == 6) && !fractional) {
        reports.push_back(not_applicable(id, f.b, f.c, "requires 0 < r < 1"));
      } else if (id == 6 && f.b > f.c) {
        reports.push_back(not_applicable(id, f.b, f.c, "requires B <= C"));
      } else {
        reports.push_back(run_theorem(id, f));
      }
    }
    write_text(f.out, reports_to_json(reports));
  } else {
    int id = 0;
    if (f.theorem.size() == 1 && f.theorem[0] >= '1' && f.theorem[0] <= '6') id = f.theorem[0] - '0';
    if (id == 0) throw std::invalid_argument("--theorem must be 1-6 or all, got '" + f.theorem + "'");
    reports.push_back(run_theorem(id, f));
    write_text(f.out, to_json(reports.front()));
  }
  for (const auto& r : reports) out << summary_line(r) << "\n";
  out << "wrote " << f.out << "\n";
  return kExitOk;
}

int cmd_surface(const LossFlags& flags, std::size_t grid, const std::string& out_path,
                std::ostream& out) {
  const SurfaceGrid s = surface(flags.config(), grid);
  {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot write '" + out_path + "'");
    write_surface_csv(f, s);
  }
  const std::string sidecar = out_path + ".argmax.json";
  write_text(sidecar, surface_argmax_json(s));
  out << std::setprecision(6) << "grid " << grid << "x" << grid << " (" << s.points.size()
      << " points)\nmax " << s.max_value << "\nargmax";
  for (const auto& pt : s.argmax) {
    const auto name = corner_name(pt.p1, pt.p2);
    out << " " << (name.empty() ? "(" + std::to_string(pt.p1) + "," + std::to_string(pt.p2) + ")"
                                : name);
  }
  out << "\nwrote " << out_path << " and " << sidecar << "\n";
  return kExitOk;
}

int cmd_optimize(const LossFlags& flags, std::size_t b, std::size_t c, const AscentConfig& cfg,
                 const std::string& out_path, std::ostream& out) {
  const LossConfig loss = flags.config();
  const AscentResult res = maximize(loss, b, c, cfg);
  std::size_t converged = 0, halvings = 0, inexact = 0;
  for (const auto& run : res.runs) {
    converged += run.converged;
    halvings += run.halvings;
    inexact += run.inexact_steps;
  }
  out << std::setprecision(6);
  out << "loss " << to_string(loss.kind) << " B=" << b << " C=" << c << "\n";
  out << "best value " << res.best_value << " (init " << res.best_init << " of " << res.runs.size()
      << ")\n";
  out << "best matrix\n";
  print_matrix(out, res.best.matrix());
  out << "sizes";
  for (double n : class_sizes(res.best).sizes) out << " " << n;
  out << "\nconverged " << converged << "/" << res.runs.size() << ", step halvings " << halvings
      << ", subgradient steps " << inexact << "\n";
  if (!out_path.empty()) {
    write_matrix_csv_file(out_path, res.best.matrix());
    out << "wrote " << out_path << "\n";
  }
  return kExitOk;
}

int cmd_toyuda(const LossFlags& flags, const std::string& config_path,
               std::optional<std::uint64_t> seed, const std::string& prefix, std::ostream& out) {
  ToyUdaConfig cfg;
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) throw std::invalid_argument("cannot open config '" + config_path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    cfg = toyuda_config_from_json(buf.str());
  }
  LossConfig loss = cfg.loss;
  loss.kind = parse_loss_kind(flags.kind);
  loss.lambda = flags.lambda;
  if (flags.r) loss.r = *flags.r;
  loss.alpha = flags.alpha;
  loss.epsilon = parse_epsilon(flags.epsilon);
  loss.check();
  cfg.loss = loss;
  if (seed) cfg.seed = *seed;
  cfg.check();

  const ToyUdaResult res = train(cfg);
  write_text(prefix + ".json", to_json(res, cfg));
  {
    std::ofstream f(prefix + ".csv", std::ios::binary);
    if (!f) throw std::invalid_argument("cannot write '" + prefix + ".csv'");
    write_trajectory_csv(f, res);
  }
  const auto& last = res.trajectory.back();
  out << std::setprecision(6) << "loss " << to_string(loss.kind) << " lambda " << loss.lambda
      << " epochs " << res.trajectory.size() << "\nfinal ce " << last.ce << "\nfinal lt "
      << last.lt << "\nfinal acc " << last.acc << "\nfinal equity " << last.equity
      << "\nfinal disc " << last.disc << "\nwrote " << prefix << ".json and " << prefix
      << ".csv\n";
  return kExitOk;
}

int cmd_examples(const std::string& dir, std::ostream& out) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::vector<std::pair<std::string, ProbMatrix>> items = {
      {"table_p1", examples::table_p1()},   {"table_p2", examples::table_p2()},
      {"table_p3", examples::table_p3()},   {"corner_p1", examples::corner_p1()},
      {"corner_p2", examples::corner_p2()}, {"corner_p3", examples::corner_p3()},
      {"corner_p4", examples::corner_p4()}};
  for (const auto& [name, p] : items) {
    const std::string path = (fs::path(dir) / (name + ".csv")).string();
    write_matrix_csv_file(path, p.matrix(), name);
    out << "wrote " << path << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Batch-prediction loss toolkit: evaluation, gradients, optimality checks, "
               "loss surfaces and toy domain adaptation"};
  app.require_subcommand(1, 1);

  std::string input;
  std::string out_path;
  bool renormalize = false;
  LossFlags loss_flags;
  VerifyFlags verify_flags;
  std::size_t grid = 201;
  std::size_t b = 0, c = 0;
  AscentConfig ascent;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string prefix = "toyuda";
  std::string out_dir;

  auto* eval = app.add_subcommand("eval", "print all losses and metrics of a matrix");
  eval->add_option("--input", input, "matrix CSV, '-' for stdin")->required();
  add_param_flags(eval, loss_flags);
  eval->add_flag("--renormalize", renormalize, "divide each row by its sum before validation");

  auto* grad = app.add_subcommand("grad", "write the loss gradient of a matrix");
  grad->add_option("--input", input, "matrix CSV, '-' for stdin")->required();
  grad->add_option("--loss", loss_flags.kind, "ms|bnm|cwsm|nsm")->required();
  add_param_flags(grad, loss_flags);
  grad->add_option("--out", out_path, "gradient CSV path")->required();

  auto* verify = app.add_subcommand("verify", "check optimality structure by enumeration");
  verify->add_option("--theorem", verify_flags.theorem, "1-6 or all")->required();
  verify->add_option("--b", verify_flags.b, "rows B")->required()->check(CLI::PositiveNumber);
  verify->add_option("--c", verify_flags.c, "classes C")->required()->check(CLI::Range(2, 1 << 20));
  verify->add_option("--r", verify_flags.r)->capture_default_str();
  verify->add_option("--alpha", verify_flags.alpha)->capture_default_str();
  verify->add_option("--epsilon", verify_flags.epsilon)->capture_default_str();
  verify->add_option("--seed", verify_flags.seed)->capture_default_str();
  verify->add_option("--trials", verify_flags.trials, "Hessian draws")->capture_default_str();
  verify->add_option("--out", verify_flags.out, "report JSON path")->required();

  auto* surf = app.add_subcommand("surface", "2x2 negated-loss surface as CSV");
  surf->add_option("--loss", loss_flags.kind, "ms|bnm|cwsm|nsm")->required();
  add_param_flags(surf, loss_flags);
  surf->add_option("--grid", grid, "points per axis")->capture_default_str();
  surf->add_option("--out", out_path, "surface CSV path")->required();

  auto* opt = app.add_subcommand("optimize", "multi-start projected gradient ascent");
  opt->add_option("--loss", loss_flags.kind, "ms|bnm|cwsm|nsm")->required();
  opt->add_option("--b", b, "rows B")->required()->check(CLI::PositiveNumber);
  opt->add_option("--c", c, "classes C")->required()->check(CLI::Range(2, 1 << 20));
  add_param_flags(opt, loss_flags);
  opt->add_option("--inits", ascent.inits)->capture_default_str();
  opt->add_option("--steps", ascent.steps)->capture_default_str();
  opt->add_option("--lr", ascent.step_size)->capture_default_str();
  opt->add_option("--seed", ascent.seed)->capture_default_str();
  opt->add_option("--out", out_path, "optional CSV path for the best matrix");

  auto* toy = app.add_subcommand("toyuda", "train the toy domain adaptation model");
  toy->add_option("--loss", loss_flags.kind, "ms|bnm|cwsm|nsm")->required();
  toy->add_option("--lambda", loss_flags.lambda, "target loss weight")->required();
  add_param_flags(toy, loss_flags);
  toy->add_option("--config", config_path, "JSON config");
  toy->add_option("--seed", seed);
  toy->add_option("--out-prefix", prefix, "writes PREFIX.json and PREFIX.csv")
      ->capture_default_str();

  auto* ex = app.add_subcommand("examples", "write the canonical example matrices");
  ex->add_option("--out-dir", out_dir)->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (eval->parsed()) return cmd_eval(input, loss_flags, renormalize, in, out);
    if (grad->parsed()) return cmd_grad(input, loss_flags, out_path, in, out);
    if (verify->parsed()) return cmd_verify(verify_flags, out);
    if (surf->parsed()) return cmd_surface(loss_flags, grid, out_path, out);
    if (opt->parsed()) return cmd_optimize(loss_flags, b, c, ascent, out_path, out);
    if (toy->parsed()) return cmd_toyuda(loss_flags, config_path, seed, prefix, out);
    if (ex->parsed()) return cmd_examples(out_dir, out);
  } catch (const BudgetError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace eqloss
