#include "fts/config.hpp"
#include "fts/toml_lite.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>

using namespace fts;

namespace {

const char* kMinimal = R"(name = "tiny"

[system]
kind = "linear"
a = [[-0.5, 0.0],
     [0.0, -0.5]]   # stable

[domains]
t0 = 0.0
horizon = 1.0
initial_r = [[1.0, 0.0], [0.0, 1.0]]
trajectory = "constant"
gamma = [[0.5, 0.0], [0.0, 0.5]]
)";

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text, "cfg.toml");
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

struct EnvGuard {
  explicit EnvGuard(const char* v) { setenv("FTS_SEED", v, 1); }
  ~EnvGuard() { unsetenv("FTS_SEED"); }
};

}  // namespace

TEST_SUITE("config") {

TEST_CASE("toml scalars, tables and arrays") {
  TomlDocument d = parse_toml(R"(top = 1
[a]
s = "x\ty"
lit = 'C:\path'
f = -2.5e-3
i = +7
b = true
inf = inf
nested = [[1, 2], [3, 4]]
inline = { p = 1, q = "w" }
[a.sub]
k = 3
dotted.key = 4
)");
  CHECK(d.root["top"] == 1);
  CHECK(d.root["a"]["s"] == "x\ty");
  CHECK(d.root["a"]["lit"] == "C:\\path");
  CHECK(d.root["a"]["f"].get<double>() == -2.5e-3);
  CHECK(d.root["a"]["i"] == 7);
  CHECK(d.root["a"]["b"] == true);
  CHECK(std::isinf(d.root["a"]["inf"].get<double>()));
  CHECK(d.root["a"]["nested"][1][0] == 3);
  CHECK(d.root["a"]["inline"]["q"] == "w");
  CHECK(d.root["a"]["sub"]["k"] == 3);
  CHECK(d.root["a"]["sub"]["dotted"]["key"] == 4);
  CHECK(d.line_of("a.sub.k") == 12);
  CHECK(d.line_of("a.sub") == 11);
}

TEST_CASE("toml errors carry source and line") {
  auto msg = [](const std::string& text) {
    try {
      parse_toml(text, "f.toml");
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(msg("a = 1\na = 2\n").rfind("f.toml:2:", 0) == 0);
  CHECK(msg("[t]\nx = 1\n[t]\n").rfind("f.toml:3:", 0) == 0);
  CHECK(msg("x = \"open\n").rfind("f.toml:1:", 0) == 0);
  CHECK(msg("x = [1, 2\n").find("f.toml:") == 0);
  CHECK_FALSE(msg("= 3\n").empty());
}

TEST_CASE("minimal config resolves with defaults") {
  RunConfig cfg = parse_run_config(kMinimal, "cfg.toml");
  CHECK(cfg.name == "tiny");
  CHECK(cfg.system.dim == 2);
  CHECK(cfg.system.is_linear());
  CHECK(cfg.domain.horizon == 1.0);
  CHECK(cfg.output_dir == "fts_out");
  CHECK(cfg.train.hidden == std::vector<int>{128});
  CHECK(cfg.train.augment_retry == 0);
  CHECK(cfg.digest.size() == 16);
}

TEST_CASE("unknown keys and sections name their line") {
  std::string e1 = error_of(std::string(kMinimal) + "\n[training]\nlearning_rate = 0.1\n");
  CHECK(e1.find("cfg.toml:16:") == 0);
  CHECK(e1.find("learning_rate") != std::string::npos);

  std::string e2 = error_of(std::string(kMinimal) + "\n[plots]\nx = 1\n");
  CHECK(e2.find("plots") != std::string::npos);
  CHECK(e2.find("cfg.toml:") == 0);
}

TEST_CASE("missing and mistyped values") {
  std::string no_system = "[domains]\nt0 = 0.0\n";
  CHECK(error_of(no_system).find("system") != std::string::npos);

  std::string bad_type = std::string(kMinimal) + "\n[training]\nnc = \"many\"\n";
  std::string e = error_of(bad_type);
  CHECK(e.find("cfg.toml:16:") == 0);
  CHECK(e.find("nc") != std::string::npos);

  std::string neg = std::string(kMinimal) + "\n[training]\nlr = -1.0\n";
  CHECK(error_of(neg).find("lr") != std::string::npos);

  std::string kind = std::string(kMinimal);
  kind.replace(kind.find("\"linear\""), 8, "\"vanderpol\"");
  CHECK(error_of(kind).find("vanderpol") != std::string::npos);
}

TEST_CASE("dimension mismatch between system and domains") {
  std::string text =
      "[system]\nkind = \"neg_scalar_exp\"\n[domains]\nhorizon = 1.0\ninitial_r = [[1.0, 0.0], [0.0, 1.0]]\n"
      "trajectory = \"constant\"\ngamma = [[0.5, 0.0], [0.0, 0.5]]\n";
  CHECK(error_of(text).find("dimension") != std::string::npos);
}

TEST_CASE("ill-posed domains are rejected at parse time") {
  std::string text = std::string(kMinimal);
  text.replace(text.find("gamma = [[0.5"), 13, "gamma = [[1.5");
  CHECK(error_of(text).find("margin") != std::string::npos);
}

TEST_CASE("every built-in example parses and mirrors its table row") {
  for (const std::string& id : example_ids()) {
    CAPTURE(id);
    RunConfig cfg = parse_run_config(example_config_text(id), id);
    CHECK(cfg.name == id);
    CHECK(cfg.output_dir == "runs/" + id);
  }
  RunConfig e1 = parse_run_config(example_config_text("ex1"));
  CHECK(e1.train.sizes.nc == 5000);
  CHECK(e1.train.sizes.n_b == 500);
  CHECK(e1.train.sizes.n_t == 11);
  CHECK(e1.train.sizes.n0 == 200);
  CHECK(e1.train.hidden == std::vector<int>{128});
  CHECK(e1.train.n_minibatches == 100);
  CHECK(e1.train.adam.lr0 == 0.01);
  CHECK(e1.train.adam.lr_decay == 1e-5);
  CHECK(e1.system.label == "ex1_lti");

  RunConfig e2 = parse_run_config(example_config_text("ex2"));
  CHECK(e2.train.sizes.nc == 55000);
  CHECK(e2.train.loss.alpha1 == 5.0);
  CHECK(e2.train.loss.delta2 == 3.0);
  CHECK(e2.train.hidden == std::vector<int>{32, 32, 32});
  CHECK(e2.train.adam.lr0 == 0.003);

  RunConfig e3 = parse_run_config(example_config_text("ex3"));
  CHECK(e3.domain.horizon == 2.0);
  CHECK(e3.train.sizes.nc == 60000);
  CHECK(e3.train.sizes.n_t == 15);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  CHECK(e3.domain.initial.r_matrix(0, 0) == doctest::Approx(4.0 / pi2).epsilon(1e-15));

  RunConfig neg = parse_run_config(example_config_text("negative"));
  CHECK(neg.system.dim == 1);
  CHECK(neg.train.max_epochs == 200);
  CHECK(neg.domain.trajectory->level(0.0, Vec::Constant(1, 1.2)) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(example_config_text("ex9"), InputError);
}

TEST_CASE("minibatch_size overrides the batch count") {
  RunConfig cfg = parse_run_config(std::string(kMinimal) + "\n[training]\nminibatch_size = 64\n");
  CHECK(cfg.train.minibatch_size == 64);
}

TEST_CASE("FTS_SEED overrides every seed") {
  RunConfig base = parse_run_config(kMinimal);
  {
    EnvGuard g("12345");
    RunConfig cfg = parse_run_config(kMinimal);
    CHECK(apply_seed_env(cfg));
    CHECK(cfg.base_seed == 12345);
    Seeds s = Seeds::from_base(12345);
    CHECK(cfg.train.seeds.net == s.net);
    CHECK(cfg.train.seeds.sampler == s.sampler);
    CHECK(cfg.train.seeds.shuffle == s.shuffle);
    CHECK(cfg.train.seeds.test == s.test);
    CHECK(cfg.digest != base.digest);
  }
  {
    EnvGuard g("not-a-number");
    RunConfig cfg = parse_run_config(kMinimal);
    CHECK_THROWS_AS(apply_seed_env(cfg), InputError);
  }
  RunConfig cfg = parse_run_config(kMinimal);
  CHECK_FALSE(apply_seed_env(cfg));
  CHECK(cfg.digest == base.digest);
}

TEST_CASE("digest tracks the resolved settings") {
  RunConfig a = parse_run_config(kMinimal);
  RunConfig b = parse_run_config(std::string(kMinimal) + "\n# trailing comment\n");
  RunConfig c = parse_run_config(std::string(kMinimal) + "\n[training]\nnc = 10\n");
  CHECK(a.digest == b.digest);
  CHECK(a.digest != c.digest);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

}  // TEST_SUITE
