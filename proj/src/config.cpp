#include "fts/config.hpp"

#include "fts/toml_lite.hpp"

#include <cerrno>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

namespace fts {

namespace {

using nlohmann::json;

class Section {
 public:
  Section(const TomlDocument& doc, std::string name, const std::string& source, bool required)
      : doc_(doc), name_(std::move(name)), source_(source) {
    auto it = doc.root.find(name_);
    if (it == doc.root.end()) {
      if (required) throw ParseError(source_ + ":1: missing section [" + name_ + "]");
      node_ = json::object();
    } else if (!it->is_object()) {
      fail_at(name_, "[" + name_ + "] must be a table");
    } else {
      node_ = *it;
    }
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = lookup(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_number()) fail_at(path(key), "'" + path(key) + "' must be a number");
    return v->get<double>();
  }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
    double v = number(key, fallback);
    if (!(v > 0.0)) fail_at(path(key), "'" + path(key) + "' must be positive");
    return v;
  }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback,
                       std::int64_t min_value) {
    const json* v = lookup(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_number_integer()) fail_at(path(key), "'" + path(key) + "' must be an integer");
    auto i = v->get<std::int64_t>();
    if (i < min_value) {
      fail_at(path(key), "'" + path(key) + "' must be >= " + std::to_string(min_value));
    }
    return i;
  }

  std::size_t count(const std::string& key, std::optional<std::size_t> fallback,
                    std::size_t min_value = 1) {
    std::optional<std::int64_t> fb;
    if (fallback) fb = static_cast<std::int64_t>(*fallback);
    return static_cast<std::size_t>(integer(key, fb, static_cast<std::int64_t>(min_value)));
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = lookup(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_string()) fail_at(path(key), "'" + path(key) + "' must be a string");
    return v->get<std::string>();
  }

  Vec vector(const std::string& key) {
    const json* v = lookup(key, false);
    if (!v->is_array() || v->empty()) {
      fail_at(path(key), "'" + path(key) + "' must be a non-empty array of numbers");
    }
    Vec out(static_cast<Eigen::Index>(v->size()));
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) fail_at(path(key), "'" + path(key) + "' must hold numbers");
      out(static_cast<Eigen::Index>(i)) = (*v)[i].get<double>();
    }
    return out;
  }

  std::vector<int> int_list(const std::string& key, std::optional<std::vector<int>> fallback) {
    const json* v = lookup(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_array() || v->empty()) {
      fail_at(path(key), "'" + path(key) + "' must be a non-empty array of integers");
    }
    std::vector<int> out;
    for (const auto& e : *v) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 1) {
        fail_at(path(key), "'" + path(key) + "' must hold positive integers");
      }
      out.push_back(static_cast<int>(e.get<std::int64_t>()));
    }
    return out;
  }

  /// Square matrix given as rows; a bare number is accepted for 1x1.
  Mat matrix(const std::string& key) {
    const json* v = lookup(key, false);
    if (v->is_number()) return Mat::Constant(1, 1, v->get<double>());
    if (!v->is_array() || v->empty()) fail_at(path(key), "'" + path(key) + "' must be a matrix");
    const auto n = static_cast<Eigen::Index>(v->size());
    Mat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const json& row = (*v)[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
        fail_at(path(key), "'" + path(key) + "' must be a square array of rows");
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!row[static_cast<std::size_t>(j)].is_number()) {
          fail_at(path(key), "'" + path(key) + "' must hold numbers");
        }
        m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
      }
    }
    return m;
  }

  /// Rejects any key of this section not read so far.
  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!used_.count(it.key())) fail_at(path(it.key()), "unknown key '" + path(it.key()) + "'");
    }
  }

  [[noreturn]] void fail_at(const std::string& p, const std::string& msg) const {
    int line = doc_.line_of(p);
    if (line == 0) line = doc_.line_of(name_);
    throw ParseError(source_ + ":" + std::to_string(line == 0 ? 1 : line) + ": " + msg);
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

 private:
  const json* lookup(const std::string& key, bool optional) {
    used_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) {
      if (optional) return nullptr;
      fail_at(name_, "missing key '" + path(key) + "'");
    }
    return &*it;
  }

  const TomlDocument& doc_;
  std::string name_;
  const std::string& source_;
  json node_;
  std::set<std::string> used_;
};

json mat_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void parse_system(Section& sec, RunConfig& cfg) {
  const std::string kind = sec.text("kind");
  json& out = cfg.resolved["system"];
  out["kind"] = kind;
  if (kind == "linear") {
    Mat a = sec.matrix("a");
    cfg.system = make_linear_field(a, "linear");
    out["a"] = mat_json(a);
  } else if (kind == "ex1_lti") {
    double rate = sec.number("rate", 0.1);
    cfg.system = make_ex1_lti(rate);
    out["rate"] = rate;
  } else if (kind == "ex2_lakshmikantham") {
    double k = sec.positive("k", 0.1);
    cfg.system = make_ex2_lakshmikantham(k);
    out["k"] = k;
  } else if (kind == "ex3_pendulum") {
    double g = sec.positive("g", 9.81);
    double m = sec.positive("m", 0.15);
    double l = sec.positive("l", 0.15);
    double b = sec.number("b", 0.1);
    cfg.system = make_ex3_pendulum(g, m, l, b);
    out.update({{"g", g}, {"m", m}, {"l", l}, {"b", b}});
  } else if (kind == "neg_scalar_exp") {
    double rate = sec.number("rate", 1.0);
    cfg.system = make_neg_scalar_exp(rate);
    out["rate"] = rate;
  } else {
    sec.fail_at(sec.path("kind"), "unknown system kind '" + kind +
                                      "' (linear, ex1_lti, ex2_lakshmikantham, ex3_pendulum, "
                                      "neg_scalar_exp)");
  }
  sec.finish();
}

void parse_domains(Section& sec, RunConfig& cfg) {
  json& out = cfg.resolved["domains"];
  DomainSpec& dom = cfg.domain;
  dom.t0 = sec.number("t0", 0.0);
  dom.horizon = sec.positive("horizon");
  dom.initial.r_matrix = sec.matrix("initial_r");
  const int n = dom.dim();
  out.update({{"t0", dom.t0}, {"horizon", dom.horizon}, {"initial_r", mat_json(dom.initial.r_matrix)}});

  const std::string kind = sec.text("trajectory", "constant");
  out["trajectory"] = kind;
  if (kind == "constant") {
    Mat g = sec.matrix("gamma");
    if (g.rows() != n) sec.fail_at(sec.path("gamma"), "'domains.gamma' must match initial_r in size");
    dom.trajectory = make_constant_family(g);
    out["gamma"] = mat_json(g);
  } else if (kind == "ex2_scalar_mu") {
    double scale = sec.positive("scale");
    double k = sec.positive("k", 0.1);
    double r0 = sec.positive("r0", 1.0);
    dom.trajectory = make_ex2_scalar_mu_family(n, scale, k, r0, dom.t0);
    out.update({{"scale", scale}, {"k", k}, {"r0", r0}});
  } else if (kind == "ex3_rotating_diag") {
    Vec d = sec.vector("diag0");
    Vec c = sec.vector("rates");
    double omega = sec.number("omega");
    if (n != 2 || d.size() != 2 || c.size() != 2) {
      sec.fail_at(sec.path("trajectory"), "ex3_rotating_diag needs a planar state");
    }
    dom.trajectory = make_ex3_rotating_diag_family(d, c, omega);
    out.update({{"diag0", vec_json(d)}, {"rates", vec_json(c)}, {"omega", omega}});
  } else {
    sec.fail_at(sec.path("trajectory"), "unknown trajectory kind '" + kind +
                                            "' (constant, ex2_scalar_mu, ex3_rotating_diag)");
  }
  sec.finish();
}

void parse_training(Section& sec, RunConfig& cfg) {
  TrainConfig& tc = cfg.train;
  json& out = cfg.resolved["training"];
  tc.loss.alpha1 = sec.positive("alpha1", 1.0);
  tc.loss.alpha2 = sec.positive("alpha2", 1.0);
  tc.loss.delta1 = sec.number("delta1", 1.0);
  tc.loss.delta2 = sec.positive("delta2", 0.1);
  if (tc.loss.delta1 < 0.0) sec.fail_at(sec.path("delta1"), "'training.delta1' must be >= 0");
  tc.sizes.nc = sec.count("nc", 5000);
  tc.sizes.n_b = sec.count("n_b", 500);
  tc.sizes.n_t = sec.count("n_t", 11, 2);
  tc.sizes.n0 = sec.count("n0", 200);
  tc.n_minibatches = sec.count("minibatches", 100);
  tc.minibatch_size = sec.count("minibatch_size", 0, 0);
  tc.adam.lr0 = sec.positive("lr", 1e-3);
  tc.adam.lr_decay = sec.number("lr_decay", 1e-5);
  if (tc.adam.lr_decay < 0.0) sec.fail_at(sec.path("lr_decay"), "'training.lr_decay' must be >= 0");
  tc.adam.beta1 = sec.number("beta1", 0.9);
  tc.adam.beta2 = sec.number("beta2", 0.999);
  tc.adam.epsilon = sec.positive("epsilon", 1e-8);
  tc.max_epochs = sec.count("max_epochs", 500);
  tc.augment_retry = static_cast<int>(sec.integer("augment_retry", 0, 0));
  cfg.base_seed = static_cast<std::uint64_t>(sec.integer("seed", 1, 0));
  out.update({{"alpha1", tc.loss.alpha1}, {"alpha2", tc.loss.alpha2},
              {"delta1", tc.loss.delta1}, {"delta2", tc.loss.delta2},
              {"nc", tc.sizes.nc}, {"n_b", tc.sizes.n_b}, {"n_t", tc.sizes.n_t},
              {"n0", tc.sizes.n0}, {"minibatches", tc.n_minibatches},
              {"minibatch_size", tc.minibatch_size}, {"lr", tc.adam.lr0},
              {"lr_decay", tc.adam.lr_decay}, {"beta1", tc.adam.beta1},
              {"beta2", tc.adam.beta2}, {"epsilon", tc.adam.epsilon},
              {"max_epochs", tc.max_epochs}, {"augment_retry", tc.augment_retry}});
  sec.finish();
}

void parse_test(Section& sec, RunConfig& cfg) {
  TestConfig& t = cfg.train.test;
  t.grid = sec.count("grid", 50, 2);
  t.time_slices = sec.count("time_slices", 21, 2);
  t.n_b = sec.count("n_b", 1000);
  t.initial_ring = sec.count("initial_ring", 720);
  cfg.resolved["test"] = {{"grid", t.grid}, {"time_slices", t.time_slices}, {"n_b", t.n_b},
                          {"initial_ring", t.initial_ring}};
  sec.finish();
}

void parse_oracle(Section& sec, RunConfig& cfg) {
  cfg.oracle.samples = sec.count("samples", 10000);
  cfg.oracle.dt = sec.positive("dt", 1e-3);
  cfg.resolved["oracle"] = {{"samples", cfg.oracle.samples}, {"dt", cfg.oracle.dt}};
  sec.finish();
}

// One row per built-in example: loss weights and collocation sizes, network
// and optimizer settings, plus the system and domain blocks.
struct ExampleRow {
  const char* id;
  double alpha1, alpha2, delta1, delta2;
  std::size_t nc, n_b, n_t, n0;
  int hidden_layers, neurons;
  std::size_t minibatches;
  double lr, decay;
  std::size_t max_epochs;
  int augment_retry;
  const char* system;
  const char* domains;
};

std::string pi_sq_frac(double num) {
  return format_double(num / (std::numbers::pi * std::numbers::pi));
}

const std::vector<ExampleRow>& example_table() {
  static const std::string ex3_domains =
      "t0 = 0.0\nhorizon = 2.0\ninitial_r = [[" + pi_sq_frac(4.0) + ", 0.0], [0.0, " +
      pi_sq_frac(4.0) + "]]\ntrajectory = \"ex3_rotating_diag\"\ndiag0 = [" + pi_sq_frac(2.0) +
      ", " + pi_sq_frac(0.1) + "]\nrates = [0.5, 2.0]\nomega = " +
      format_double(0.2 * std::numbers::pi) + "\n";
  static const std::vector<ExampleRow> rows = {
      {"ex1", 1, 1, 1, 0.1, 5000, 500, 11, 200, 1, 128, 100, 0.01, 1e-5, 50, 3,
       "kind = \"ex1_lti\"\nrate = 0.1\n",
       "t0 = 0.0\nhorizon = 1.0\ninitial_r = [[0.3, 0.0], [0.0, 0.3]]\n"
       "trajectory = \"constant\"\ngamma = [[0.25, 0.0], [0.0, 0.25]]\n"},
      {"ex2", 5, 1, 1, 3, 55000, 200, 11, 700, 3, 32, 200, 0.003, 1e-5, 100, 3,
       "kind = \"ex2_lakshmikantham\"\nk = 0.1\n",
       "t0 = 0.0\nhorizon = 1.0\ninitial_r = [[1.0, 0.0], [0.0, 1.0]]\n"
       "trajectory = \"ex2_scalar_mu\"\nscale = 0.8\nk = 0.1\nr0 = 1.0\n"},
      {"ex3", 5, 1, 0.1, 1, 60000, 100, 15, 700, 3, 32, 500, 0.003, 1e-5, 150, 3,
       "kind = \"ex3_pendulum\"\ng = 9.81\nm = 0.15\nl = 0.15\nb = 0.1\n", ex3_domains.c_str()},
      // dx/dt = x leaves |x| < 1.2 at t = ln 1.2 from x0 = 1: no certificate exists.
      {"negative", 1, 1, 1, 0.1, 2000, 100, 11, 50, 1, 32, 20, 0.01, 1e-5, 200, 0,
       "kind = \"neg_scalar_exp\"\nrate = 1.0\n",
       "t0 = 0.0\nhorizon = 1.0\ninitial_r = [[1.0]]\n"
       "trajectory = \"constant\"\ngamma = [[0.6944444444444444]]\n"},
  };
  return rows;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  TomlDocument doc = parse_toml(text, source);
  static const std::set<std::string> known = {"name",     "system", "domains", "network",
                                              "training", "test",   "oracle",  "output"};
  for (auto it = doc.root.begin(); it != doc.root.end(); ++it) {
    if (!known.count(it.key())) {
      int line = doc.line_of(it.key());
      throw ParseError(source + ":" + std::to_string(line == 0 ? 1 : line) +
                       ": unknown section or key '" + it.key() + "'");
    }
  }

  RunConfig cfg;
  if (doc.root.contains("name")) {
    if (!doc.root["name"].is_string()) {
      throw ParseError(source + ":" + std::to_string(doc.line_of("name")) +
                       ": 'name' must be a string");
    }
    cfg.name = doc.root["name"].get<std::string>();
  }
  cfg.resolved["name"] = cfg.name;

  Section system(doc, "system", source, true);
  parse_system(system, cfg);
  Section domains(doc, "domains", source, true);
  parse_domains(domains, cfg);
  if (cfg.system.dim != cfg.domain.dim()) {
    domains.fail_at("domains.initial_r", "domain dimension " + std::to_string(cfg.domain.dim()) +
                                             " does not match the system dimension " +
                                             std::to_string(cfg.system.dim));
  }
  if (WellPosedness wp = wellposed_check(cfg.domain); !wp.ok) {
    domains.fail_at("domains.initial_r", "initial set is not strictly inside Omega_t0 (margin " +
                                             format_double(wp.margin) + ")");
  }

  Section network(doc, "network", source, false);
  cfg.train.hidden = network.int_list("hidden", std::vector<int>{128});
  cfg.resolved["network"] = {{"hidden", cfg.train.hidden}, {"activation", "softplus"}};
  network.finish();

  Section training(doc, "training", source, false);
  parse_training(training, cfg);
  Section test(doc, "test", source, false);
  parse_test(test, cfg);
  Section oracle(doc, "oracle", source, false);
  parse_oracle(oracle, cfg);

  Section output(doc, "output", source, false);
  cfg.output_dir = output.text("dir", "fts_out");
  if (cfg.output_dir.empty()) output.fail_at("output.dir", "'output.dir' must not be empty");
  output.finish();

  set_base_seed(cfg, cfg.base_seed);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text(path), path);
}

void set_base_seed(RunConfig& cfg, std::uint64_t base) {
  cfg.base_seed = base;
  cfg.train.seeds = Seeds::from_base(base);
  cfg.resolved["training"]["seed"] = base;
  cfg.digest = fnv1a_hex(cfg.resolved.dump());
}

bool apply_seed_env(RunConfig& cfg) {
  const char* env = std::getenv("FTS_SEED");
  if (!env || !*env) return false;
  char* end = nullptr;
  errno = 0;
  unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || env[0] == '-') {
    throw InputError(std::string("FTS_SEED must be a non-negative integer, got '") + env + "'");
  }
  set_base_seed(cfg, static_cast<std::uint64_t>(v));
  return true;
}

std::vector<std::string> example_ids() {
  std::vector<std::string> ids;
  for (const auto& r : example_table()) ids.emplace_back(r.id);
  return ids;
}

std::string example_config_text(const std::string& id) {
  for (const auto& r : example_table()) {
    if (id != r.id) continue;
    std::ostringstream s;
    s << "name = \"" << r.id << "\"\n\n[system]\n" << r.system << "\n[domains]\n" << r.domains;
    s << "\n[network]\nhidden = [";
    for (int i = 0; i < r.hidden_layers; ++i) s << (i ? ", " : "") << r.neurons;
    s << "]\n\n[training]\n"
      << "alpha1 = " << format_double(r.alpha1) << "\nalpha2 = " << format_double(r.alpha2)
      << "\ndelta1 = " << format_double(r.delta1) << "\ndelta2 = " << format_double(r.delta2)
      << "\nnc = " << r.nc << "\nn_b = " << r.n_b << "\nn_t = " << r.n_t << "\nn0 = " << r.n0
      << "\nminibatches = " << r.minibatches << "\nlr = " << format_double(r.lr)
      << "\nlr_decay = " << format_double(r.decay) << "\nmax_epochs = " << r.max_epochs
      << "\naugment_retry = " << r.augment_retry << "\nseed = 1\n"
      << "\n[test]\ngrid = 50\ntime_slices = 21\nn_b = 1000\ninitial_ring = 720\n"
      << "\n[oracle]\nsamples = 10000\ndt = 0.001\n"
      << "\n[output]\ndir = \"runs/" << r.id << "\"\n";
    return s.str();
  }
  std::string known;
  for (const auto& i : example_ids()) known += (known.empty() ? "" : ", ") + i;
  throw InputError("unknown example '" + id + "' (known: " + known + ")");
}

}  // namespace fts
