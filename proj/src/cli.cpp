#include "fts/cli.hpp"

#include "fts/discrete.hpp"
#include "fts/ltv_baseline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

namespace fts {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json oracle_json(const OracleReport& r, const OracleConfig& oc) {
  json doc = {{"passed", r.passed},
              {"n_samples", r.n_samples},
              {"violations", r.violations},
              {"dt", oc.dt}};
  if (r.counterexample) {
    const auto& c = *r.counterexample;
    doc["counterexample"] = {{"sample_index", c.sample_index},
                             {"x0", std::vector<double>(c.x0.data(), c.x0.data() + c.x0.size())},
                             {"exit_time", c.exit_time},
                             {"diverged", c.diverged}};
  } else {
    doc["counterexample"] = nullptr;
  }
  return doc;
}

json verdict_json(const TerminationDetail& d, const TestVerdict& v) {
  return {{"terminated", d.terminated},
          {"collocation_interior_violations", d.interior_violations},
          {"collocation_boundary_violations", d.boundary_violations},
          {"test_passed", v.passed},
          {"test_interior_violations", v.interior_violations},
          {"test_boundary_violations", v.boundary_violations},
          {"test_points", {{"interior", v.n_interior}, {"boundary", v.n_boundary},
                           {"initial", v.n_initial}}},
          {"certified", d.terminated && v.passed}};
}

void guard_outputs(const std::vector<std::string>& paths, bool force) {
  if (force) return;
  for (const auto& p : paths) {
    if (fs::exists(p)) {
      throw InputError("output '" + p + "' already exists (pass --force to overwrite)");
    }
  }
}

std::vector<double> parse_times(const std::string& spec) {
  std::vector<double> times;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double t = 0.0;
    try {
      t = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InputError("bad time value '" + item + "'");
    times.push_back(t);
  }
  if (times.empty()) throw InputError("no times given");
  return times;
}

const EllipsoidFamily& ellipsoid_of(const DomainSpec& dom) {
  const auto* fam = dynamic_cast<const EllipsoidFamily*>(dom.trajectory.get());
  if (!fam) throw InputError("this command needs an ellipsoidal trajectory domain");
  return *fam;
}

LyapunovNet load_matching(const std::string& path, const RunConfig& cfg, std::ostream& err) {
  LyapunovNet net = load_checkpoint(path);
  if (net.state_dim() != cfg.domain.dim()) {
    throw InputError("checkpoint state dimension " + std::to_string(net.state_dim()) +
                     " does not match the config dimension " + std::to_string(cfg.domain.dim()));
  }
  if (!net.config_digest.empty() && net.config_digest != cfg.digest) {
    err << "warning: checkpoint was trained with config digest " << net.config_digest
        << ", current config digest is " << cfg.digest << "\n";
  }
  return net;
}

int oracle_command(const RunConfig& cfg, int threads, const std::string& output, bool force,
                   std::ostream& out) {
  OracleReport rep = mc_fts_check(cfg.system, cfg.domain, cfg.oracle.samples, cfg.oracle.dt,
                                  derive_seed(cfg.base_seed, 7), threads);
  std::string text = oracle_json(rep, cfg.oracle).dump(2) + "\n";
  if (!output.empty()) {
    guard_outputs({output}, force);
    write_text_atomic(output, text);
  }
  out << text;
  return rep.passed ? kExitCertified : kExitNotCertified;
}

int export_surface(const std::string& checkpoint, const RunConfig& cfg, const std::string& times,
                   std::size_t grid, const std::string& dir, bool force, std::ostream& out,
                   std::ostream& err) {
  if (grid < 2) throw InputError("grid density must be at least 2");
  LyapunovNet net = load_matching(checkpoint, cfg, err);
  std::vector<double> ts = parse_times(times);
  for (double t : ts) {
    if (t < cfg.domain.t0 || t > cfg.domain.t_end()) {
      throw InputError("time " + format_double(t) + " lies outside the horizon");
    }
  }
  std::vector<std::string> paths;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    paths.push_back((fs::path(dir) / ("surface_" + std::to_string(i) + ".csv")).string());
  }
  guard_outputs(paths, force);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    write_text_atomic(paths[i], surface_csv(net, cfg.system, cfg.domain, ts[i], grid));
    out << paths[i] << " t=" << format_double(ts[i]) << "\n";
  }
  return kExitCertified;
}

struct DlmiOptions {
  double dt = 0.01;
  std::size_t fit_points = 2000;
  double beta = 0.0;  // <= 0: midpoint of the admissible interval
  double eps = 1e-3;
  std::string output;
};

int dlmi_command(const std::string& checkpoint, const RunConfig& cfg, const DlmiOptions& o,
                 bool force, std::ostream& out, std::ostream& err) {
  if (!cfg.system.is_linear()) throw InputError("dlmi-check needs a linear system");
  const EllipsoidFamily& fam = ellipsoid_of(cfg.domain);
  LyapunovNet net = load_matching(checkpoint, cfg, err);
  const DomainSpec& dom = cfg.domain;
  std::vector<double> grid = uniform_grid(dom.t0, dom.t_end(), o.dt);
  MatrixFn gamma = [&fam](double t) { return fam.gamma(t); };
  const Mat& r = dom.initial.r_matrix;

  QuadraticFit fit = quadratic_fit_on_domain(net, dom, dom.t0, o.fit_points,
                                             derive_seed(cfg.base_seed, 11));
  Mat p = fit.form.p(dom.t0);
  DlmiReport raw = check_dlmi(fit.form, cfg.system.linear_part, gamma, r, grid);

  json doc;
  json rows = json::array();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < p.cols(); ++j) row.push_back(p(i, j));
    rows.push_back(row);
  }
  doc["fit"] = {{"p", rows}, {"rms_residual", fit.rms_residual}};
  Vec ev = sym_eigenvalues(p);
  doc["fit"]["eigenvalues"] = std::vector<double>(ev.data(), ev.data() + ev.size());
  doc["unscaled"] = json::parse(dlmi_report_json(raw));

  double beta = o.beta;
  try {
    ScaleInterval si = scale_interval(fit.form, gamma, r, grid);
    doc["scale_interval"] = {{"lower", si.lower}, {"upper", si.upper}, {"nonempty", si.nonempty()}};
    if (beta <= 0.0) beta = si.nonempty() ? si.midpoint() : 1.0;
  } catch (const InputError& e) {
    doc["scale_interval"] = {{"error", e.what()}};
    if (beta <= 0.0) beta = 1.0;
  }
  DlmiReport scaled = check_dlmi(scale_lyapunov(fit.form, beta), cfg.system.linear_part, gamma,
                                 r, grid);
  const bool scaled_pass = scaled.passed;
  doc["beta"] = beta;
  doc["scaled"] = json::parse(dlmi_report_json(scaled));

  TransitionQ q = state_transition_q(cfg.system.linear_part, r, grid);
  DlmiReport qrep = check_dlmi(certificate_from_q(q, o.eps), cfg.system.linear_part, gamma, r,
                               grid);
  doc["transition_certificate"] = {{"eps", o.eps},
                                   {"max_condition", q.max_condition},
                                   {"warnings", q.warnings},
                                   {"report", json::parse(dlmi_report_json(qrep))}};
  for (const auto& w : q.warnings) err << "warning: " << w << "\n";
  doc["passed"] = scaled_pass;

  std::string text = doc.dump(2) + "\n";
  if (!o.output.empty()) {
    guard_outputs({o.output}, force);
    write_text_atomic(o.output, text);
  }
  out << text;
  return scaled_pass ? kExitCertified : kExitNotCertified;
}

struct DiscreteOptions {
  int dim = 2;
  double factor = 0.5;
  int horizon = 10;
  double r_initial = 1.0;
  double r0 = 3.0;
  double ratio = 0.98;
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  std::string v = "norm2";
  std::string checkpoint;
};

int discrete_command(const DiscreteOptions& o, std::ostream& out) {
  DiscreteDomainSeq seq = make_geometric_balls(o.dim, o.r_initial, o.r0, o.ratio, o.horizon);
  DiscreteMap map = make_scaling_map(o.dim, o.factor);
  DiscreteV v;
  if (o.v == "norm2") {
    v = [](int, const Vec& x) { return x.squaredNorm(); };
  } else if (o.v == "constant") {
    v = [](int, const Vec&) { return 1.0; };
  } else if (o.v == "checkpoint") {
    if (o.checkpoint.empty()) throw InputError("--v checkpoint needs --checkpoint PATH");
    LyapunovNet net = load_checkpoint(o.checkpoint);
    if (net.state_dim() != o.dim) throw InputError("checkpoint dimension does not match --dim");
    v = discrete_v_from_net(net);
  } else {
    throw InputError("unknown --v '" + o.v + "' (norm2, constant, checkpoint)");
  }
  DtVerdict verdict = check_dt_conditions(v, map, seq, o.samples, o.seed);
  out << dt_verdict_json(verdict);
  return verdict.passed ? kExitCertified : kExitNotCertified;
}

}  // namespace

RunOutputs run_outputs(const std::string& dir) {
  fs::path d(dir);
  return {(d / "checkpoint.json").string(), (d / "report.json").string(),
          (d / "loss_curve.csv").string()};
}

int cmd_train(RunConfig cfg, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.threads < 1) throw InputError("--threads must be >= 1");
  if (!opts.output_dir.empty()) cfg.output_dir = opts.output_dir;
  if (opts.augment_retry >= 0) cfg.train.augment_retry = opts.augment_retry;
  cfg.train.threads = opts.threads;
  RunOutputs paths = run_outputs(cfg.output_dir);
  guard_outputs({paths.checkpoint, paths.report, paths.loss_curve}, opts.force);

  EpochCallback log;
  if (!opts.quiet) {
    log = [&err](const EpochRecord& r) {
      err << "epoch " << r.epoch << " loss " << format_double(r.loss) << " interior_viol "
          << r.interior_violations << " boundary_viol " << r.boundary_violations << "\n";
    };
  }
  TrainResult res = train(cfg.system, cfg.domain, cfg.train, log);
  res.net.rng_seed = cfg.train.seeds.net;
  res.net.config_digest = cfg.digest;
  save_checkpoint(res.net, paths.checkpoint);
  json report = json::parse(report_json(res.report));
  report["config_digest"] = cfg.digest;
  report["base_seed"] = cfg.base_seed;
  write_text_atomic(paths.report, report.dump(2) + "\n");
  write_text_atomic(paths.loss_curve, loss_curve_csv(res.report.loss_curve));

  const bool certified = res.report.certified();
  out << (certified ? "certified" : "not certified") << ": status=" << res.report.status
      << " epochs=" << res.report.epochs_run << " test_passed=" << res.report.test.passed
      << " test_violations="
      << res.report.test.interior_violations + res.report.test.boundary_violations
      << " output=" << cfg.output_dir << "\n";
  return certified ? kExitCertified : kExitNotCertified;
}

int cmd_verify(const std::string& checkpoint_path, const RunConfig& cfg, int threads,
               std::ostream& out, std::ostream& err) {
  LyapunovNet net = load_matching(checkpoint_path, cfg, err);
  CollocationSet colloc = build_collocation(cfg.domain, cfg.train.sizes, cfg.train.seeds.sampler);
  TerminationDetail d = check_termination(net, cfg.system, colloc, cfg.domain.t0, threads);
  TestVerdict v = verify_on_test_set(net, cfg.system, cfg.domain, cfg.train.test,
                                     cfg.train.seeds.test, threads);
  out << verdict_json(d, v).dump(2) << "\n";
  return d.terminated && v.passed ? kExitCertified : kExitNotCertified;
}

int cmd_reproduce(const std::string& id, const RunOptions& opts, bool run_oracle,
                  std::ostream& out, std::ostream& err) {
  const std::string text = example_config_text(id);
  RunConfig cfg = parse_run_config(text, "<" + id + ">");
  apply_seed_env(cfg);
  if (!opts.output_dir.empty()) cfg.output_dir = opts.output_dir;
  const std::string config_copy = (fs::path(cfg.output_dir) / "config.toml").string();
  const std::string oracle_path = (fs::path(cfg.output_dir) / "oracle.json").string();
  guard_outputs({config_copy, oracle_path}, opts.force);

  int code = cmd_train(cfg, opts, out, err);
  write_text_atomic(config_copy, text);
  if (!run_oracle) return code;

  OracleReport rep = mc_fts_check(cfg.system, cfg.domain, cfg.oracle.samples, cfg.oracle.dt,
                                  derive_seed(cfg.base_seed, 7), opts.threads);
  write_text_atomic(oracle_path, oracle_json(rep, cfg.oracle).dump(2) + "\n");
  out << "oracle: " << rep.violations << " violations over " << rep.n_samples
      << " trajectories\n";
  if (code == kExitCertified && !rep.passed) {
    err << "error: certified network but the trajectory oracle found a counterexample\n";
    return kExitNotCertified;
  }
  return code;
}

std::string surface_csv(const LyapunovNet& net, const VectorField& sys, const DomainSpec& dom,
                        double t, std::size_t grid) {
  if (grid < 2) throw InputError("grid density must be at least 2");
  if (t < dom.t0 || t > dom.t_end()) throw InputError("time outside the horizon");
  const int n = dom.dim();
  auto [lo, hi] = dom.trajectory->bounding_box(t);
  std::vector<Vec> pts;
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  Vec x(n);
  while (true) {
    for (int i = 0; i < n; ++i) {
      x(i) = lo(i) + (hi(i) - lo(i)) * static_cast<double>(idx[static_cast<std::size_t>(i)]) /
                         static_cast<double>(grid - 1);
    }
    if (dom.trajectory->in_closure(t, x)) pts.push_back(x);
    int k = 0;
    while (k < n && ++idx[static_cast<std::size_t>(k)] == grid) idx[static_cast<std::size_t>(k++)] = 0;
    if (k == n) break;
  }
  std::ostringstream s;
  for (int i = 0; i < n; ++i) s << 'x' << (i + 1) << ',';
  s << "V,Vdot\n";
  for (std::size_t j = 0; j < pts.size(); ++j) {
    for (int i = 0; i < n; ++i) s << format_double(pts[j](i)) << ',';
    // Pointwise on purpose: rows reproduce forward() and orbital_derivative() bit for bit.
    s << format_double(forward(net, t, pts[j])) << ','
      << format_double(orbital_derivative(net, sys, t, pts[j])) << '\n';
  }
  return s.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-time stability certificates with neural Lyapunov functions"};
  app.require_subcommand(1);

  RunOptions opts;
  auto add_run_opts = [&opts](CLI::App* sub) {
    sub->add_option("--threads", opts.threads, "Worker threads for batch evaluation")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--force", opts.force, "Overwrite existing outputs");
    sub->add_option("--output-dir", opts.output_dir, "Override the configured output directory");
    sub->add_option("--augment-retry", opts.augment_retry,
                    "Rounds of folding failing test points back into training");
    sub->add_flag("--quiet", opts.quiet, "No per-epoch log");
  };

  std::string config_path;
  std::string checkpoint_path;

  auto* train = app.add_subcommand("train", "Train and certify from a config file");
  train->add_option("config", config_path, "TOML run config")->required();
  add_run_opts(train);

  auto* verify = app.add_subcommand("verify", "Re-check a checkpoint against its config");
  verify->add_option("checkpoint", checkpoint_path)->required();
  verify->add_option("config", config_path)->required();
  verify->add_option("--threads", opts.threads)->check(CLI::PositiveNumber);

  std::string example;
  bool skip_oracle = false;
  bool print_config = false;
  auto* reproduce = app.add_subcommand("reproduce", "Run a built-in example");
  reproduce->add_option("example", example, "ex1, ex2, ex3 or negative")->required();
  reproduce->add_flag("--skip-oracle", skip_oracle, "Skip the trajectory oracle");
  reproduce->add_flag("--print-config", print_config, "Print the example config and exit");
  add_run_opts(reproduce);

  std::size_t oracle_samples = 0;
  double oracle_dt = 0.0;
  std::string oracle_out;
  auto* oracle = app.add_subcommand("oracle", "Monte-Carlo trajectory check of a config");
  oracle->add_option("config", config_path)->required();
  oracle->add_option("--samples", oracle_samples, "Trajectories (default from config)");
  oracle->add_option("--dt", oracle_dt, "RK4 step (default from config)");
  oracle->add_option("--output", oracle_out, "Also write the report here");
  oracle->add_option("--threads", opts.threads)->check(CLI::PositiveNumber);
  oracle->add_flag("--force", opts.force);

  std::string times = "0";
  std::size_t grid = 50;
  auto* surface = app.add_subcommand("export-surface", "Write V and Vdot on grids as CSV");
  surface->add_option("checkpoint", checkpoint_path)->required();
  surface->add_option("config", config_path)->required();
  surface->add_option("--times", times, "Comma-separated time slices");
  surface->add_option("--grid", grid, "Points per state axis");
  surface->add_option("--output-dir", opts.output_dir);
  surface->add_flag("--force", opts.force);

  DlmiOptions dlmi;
  auto* dlmi_cmd = app.add_subcommand("dlmi-check", "Quadratic fit and matrix-inequality check");
  dlmi_cmd->add_option("checkpoint", checkpoint_path)->required();
  dlmi_cmd->add_option("config", config_path)->required();
  dlmi_cmd->add_option("--dt", dlmi.dt, "Time grid step");
  dlmi_cmd->add_option("--fit-points", dlmi.fit_points, "Points for the quadratic fit");
  dlmi_cmd->add_option("--beta", dlmi.beta, "Scale factor (default: interval midpoint)");
  dlmi_cmd->add_option("--eps", dlmi.eps, "Shrink factor for the transition certificate");
  dlmi_cmd->add_option("--output", dlmi.output, "Also write the report here");
  dlmi_cmd->add_flag("--force", opts.force);

  DiscreteOptions disc;
  auto* disc_cmd = app.add_subcommand("discrete-check", "Sampled discrete-time conditions");
  disc_cmd->add_option("--dim", disc.dim)->check(CLI::PositiveNumber);
  disc_cmd->add_option("--factor", disc.factor, "Map x -> factor * x");
  disc_cmd->add_option("--horizon", disc.horizon)->check(CLI::PositiveNumber);
  disc_cmd->add_option("--r-initial", disc.r_initial, "Initial-set radius");
  disc_cmd->add_option("--r0", disc.r0, "Radius of Omega_0");
  disc_cmd->add_option("--ratio", disc.ratio, "r_k = r0 * ratio^k");
  disc_cmd->add_option("--samples", disc.samples, "Samples per step");
  disc_cmd->add_option("--seed", disc.seed);
  disc_cmd->add_option("--v", disc.v, "norm2, constant or checkpoint");
  disc_cmd->add_option("--checkpoint", disc.checkpoint);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitCertified : kExitError;
  }

  try {
    auto load = [&]() {
      RunConfig cfg = load_run_config(config_path);
      apply_seed_env(cfg);
      return cfg;
    };
    if (*train) return cmd_train(load(), opts, out, err);
    if (*verify) return cmd_verify(checkpoint_path, load(), opts.threads, out, err);
    if (*reproduce) {
      if (print_config) {
        out << example_config_text(example);
        return kExitCertified;
      }
      return cmd_reproduce(example, opts, !skip_oracle, out, err);
    }
    if (*oracle) {
      RunConfig cfg = load();
      if (oracle_samples > 0) cfg.oracle.samples = oracle_samples;
      if (oracle_dt > 0.0) cfg.oracle.dt = oracle_dt;
      return oracle_command(cfg, opts.threads, oracle_out, opts.force, out);
    }
    if (*surface) {
      RunConfig cfg = load();
      std::string dir = opts.output_dir.empty() ? cfg.output_dir : opts.output_dir;
      return export_surface(checkpoint_path, cfg, times, grid, dir, opts.force, out, err);
    }
    if (*dlmi_cmd) return dlmi_command(checkpoint_path, load(), dlmi, opts.force, out, err);
    if (*disc_cmd) return discrete_command(disc, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace fts
