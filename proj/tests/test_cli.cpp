#include "fts/cli.hpp"
#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fts;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("fts_cli_" + name);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fts_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::string small_config(const std::string& out_dir) {
  return R"(name = "small"
[system]
kind = "ex1_lti"
rate = 0.1
[domains]
t0 = 0.0
horizon = 1.0
initial_r = [[0.3, 0.0], [0.0, 0.3]]
trajectory = "constant"
gamma = [[0.25, 0.0], [0.0, 0.25]]
[network]
hidden = [16]
[training]
nc = 1000
n_b = 60
n_t = 6
n0 = 80
minibatches = 10
lr = 0.01
max_epochs = 40
seed = 5
[test]
grid = 25
time_slices = 6
n_b = 200
initial_ring = 180
[oracle]
samples = 200
dt = 0.01
[output]
dir = ")" + out_dir + "\"\n";
}

std::vector<std::string> csv_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and usage errors") {
  CHECK(cli({"--help"}).code == kExitCertified);
  CHECK(cli({}).code == kExitError);
  CHECK(cli({"no-such-command"}).code == kExitError);
  CHECK(cli({"train"}).code == kExitError);
}

TEST_CASE("malformed config exits 1 with a line-anchored message") {
  TempDir d("malformed");
  write(d / "bad.toml", "[system]\nkind = \"ex1_lti\"\nbogus = 3\n");
  Run r = cli({"train", d / "bad.toml"});
  CHECK(r.code == kExitError);
  CHECK(r.err.find("bad.toml:3:") != std::string::npos);
  write(d / "worse.toml", "[system\n");
  CHECK(cli({"train", d / "worse.toml"}).code == kExitError);
  CHECK(cli({"train", d / "missing.toml"}).code == kExitError);
}

TEST_CASE("train, verify round trip and --force") {
  TempDir d("train");
  const std::string out_dir = d / "run";
  write(d / "cfg.toml", small_config(out_dir));
  Run tr = cli({"train", d / "cfg.toml", "--quiet"});
  REQUIRE((tr.code == kExitCertified || tr.code == kExitNotCertified));
  RunOutputs paths = run_outputs(out_dir);
  CHECK(fs::exists(paths.checkpoint));
  CHECK(fs::exists(paths.report));
  CHECK(fs::exists(paths.loss_curve));
  auto rep = nlohmann::json::parse(read_text(paths.report));
  CHECK(rep.at("certified").get<bool>() == (tr.code == kExitCertified));
  CHECK(rep.at("base_seed") == 5);

  // Certification survives a reload of the checkpoint.
  Run ver = cli({"verify", paths.checkpoint, d / "cfg.toml"});
  CHECK(ver.code == tr.code);

  // Existing outputs are protected unless --force is given.
  CHECK(cli({"train", d / "cfg.toml", "--quiet"}).code == kExitError);
  std::string before = read_text(paths.checkpoint);
  Run again = cli({"train", d / "cfg.toml", "--quiet", "--force"});
  CHECK(again.code == tr.code);
  CHECK(read_text(paths.checkpoint) == before);  // same seeds, same bits
  for (const auto& e : fs::directory_iterator(out_dir)) {
    CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
  }
}

TEST_CASE("verify exit codes") {
  TempDir d("verify");
  write(d / "cfg.toml", small_config(d / "run"));
  LyapunovNet random = init_net({3, 16, 1}, 9);
  save_checkpoint(random, d / "random.json");
  CHECK(cli({"verify", d / "random.json", d / "cfg.toml"}).code == kExitNotCertified);

  std::string text = read_text(d / "random.json");
  write(d / "trunc.json", text.substr(0, text.size() / 3));
  CHECK(cli({"verify", d / "trunc.json", d / "cfg.toml"}).code == kExitError);

  save_checkpoint(init_net({2, 16, 1}, 9), d / "scalar.json");
  Run mism = cli({"verify", d / "scalar.json", d / "cfg.toml"});
  CHECK(mism.code == kExitError);
  CHECK(mism.err.find("dimension") != std::string::npos);

  LyapunovNet good = fts::testing::radial_net(16, 20.0, 0.5);
  save_checkpoint(good, d / "good.json");
  CHECK(cli({"verify", d / "good.json", d / "cfg.toml"}).code == kExitCertified);
}

TEST_CASE("export-surface") {
  TempDir d("surface");
  write(d / "cfg.toml", small_config(d / "run"));
  LyapunovNet net = fts::testing::random_net({3, 8, 8, 1}, 3, 0.5);
  save_checkpoint(net, d / "net.json");
  Run r = cli({"export-surface", d / "net.json", d / "cfg.toml", "--times", "0,0.5,1", "--grid",
               "50", "--output-dir", d / "surf"});
  REQUIRE(r.code == kExitCertified);
  VectorField f = make_ex1_lti();
  for (int i = 0; i < 3; ++i) {
    auto lines = csv_lines(d / ("surf/surface_" + std::to_string(i) + ".csv"));
    REQUIRE(lines.size() >= 2);
    CHECK(lines.front() == "x1,x2,V,Vdot");
    CHECK(lines.size() - 1 <= 2500);
    CHECK(lines.size() - 1 > 1500);
    double t = 0.5 * i;
    for (std::size_t row = 1; row < lines.size(); row += (lines.size() / 10)) {
      std::stringstream ss(lines[row]);
      std::string c;
      std::vector<double> v;
      while (std::getline(ss, c, ',')) v.push_back(std::stod(c));
      REQUIRE(v.size() == 4);
      Vec x = fts::testing::vec2(v[0], v[1]);
      CHECK(v[2] == forward(net, t, x));
      CHECK(v[3] == orbital_derivative(net, f, t, x));
    }
  }
  CHECK(cli({"export-surface", d / "net.json", d / "cfg.toml", "--times", "1.5", "--output-dir",
             d / "surf2"})
            .code == kExitError);
  CHECK(cli({"export-surface", d / "net.json", d / "cfg.toml", "--times", "0.5", "--grid", "1",
             "--output-dir", d / "surf3"})
            .code == kExitError);
  CHECK(cli({"export-surface", d / "net.json", d / "cfg.toml", "--times", "0,0.5,1", "--grid",
             "50", "--output-dir", d / "surf"})
            .code == kExitError);  // exists, no --force
}

TEST_CASE("oracle subcommand") {
  TempDir d("oracle");
  write(d / "cfg.toml", small_config(d / "run"));
  Run r = cli({"oracle", d / "cfg.toml", "--output", d / "o.json"});
  CHECK(r.code == kExitCertified);
  auto j = nlohmann::json::parse(read_text(d / "o.json"));
  CHECK(j.at("violations") == 0);
  CHECK(j.at("n_samples") == 200);
}

TEST_CASE("reproduce --print-config prints the embedded example") {
  Run r = cli({"reproduce", "ex2", "--print-config"});
  CHECK(r.code == kExitCertified);
  CHECK(r.out == example_config_text("ex2"));
  CHECK(cli({"reproduce", "ex7", "--print-config"}).code == kExitError);
}

TEST_CASE("discrete-check") {
  CHECK(cli({"discrete-check", "--factor", "0.5", "--ratio", "1", "--samples", "300"}).code ==
        kExitCertified);
  CHECK(cli({"discrete-check", "--factor", "2", "--r0", "1.2", "--ratio", "1", "--samples", "300"})
            .code == kExitNotCertified);
  CHECK(cli({"discrete-check", "--v", "constant", "--ratio", "1", "--samples", "100"}).code ==
        kExitNotCertified);
  CHECK(cli({"discrete-check", "--v", "checkpoint"}).code == kExitError);
}

TEST_CASE("dlmi-check on a hand-built certificate") {
  TempDir d("dlmi");
  write(d / "cfg.toml", small_config(d / "run"));
  LyapunovNet good = fts::testing::radial_net(16, 20.0, 0.5);
  save_checkpoint(good, d / "good.json");
  Run r = cli({"dlmi-check", d / "good.json", d / "cfg.toml", "--fit-points", "500"});
  REQUIRE(r.code != kExitError);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j.contains("fit"));
  CHECK(j.contains("scaled"));
  CHECK(j.at("transition_certificate").at("report").at("initial_condition") == true);

  // Nonlinear systems are outside the scope of the check.
  std::string pend = small_config(d / "run2");
  const std::string lti = "kind = \"ex1_lti\"\nrate = 0.1";
  pend.replace(pend.find(lti), lti.size(), "kind = \"ex3_pendulum\"");
  write(d / "pend.toml", pend);
  CHECK(cli({"dlmi-check", d / "good.json", d / "pend.toml"}).code == kExitError);
}

}  // TEST_SUITE
