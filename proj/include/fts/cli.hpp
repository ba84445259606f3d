#ifndef FTS_CLI_HPP
#define FTS_CLI_HPP

#include "fts/config.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace fts {

/// Exit status contract shared by every subcommand.
enum ExitCode : int { kExitCertified = 0, kExitError = 1, kExitNotCertified = 2 };

struct RunOptions {
  int threads = 1;
  bool force = false;
  int augment_retry = -1;  // < 0 keeps the config value
  std::string output_dir;  // empty keeps the config value
  bool quiet = false;
};

/// The paths written by a training run.
struct RunOutputs {
  std::string checkpoint;
  std::string report;
  std::string loss_curve;
};

RunOutputs run_outputs(const std::string& dir);

int cmd_train(RunConfig cfg, const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_verify(const std::string& checkpoint_path, const RunConfig& cfg, int threads,
               std::ostream& out, std::ostream& err);
int cmd_reproduce(const std::string& id, const RunOptions& opts, bool run_oracle,
                  std::ostream& out, std::ostream& err);

/// Rows of the closure of Omega_t on a grid^n lattice, columns x1..xn, V, Vdot.
std::string surface_csv(const LyapunovNet& net, const VectorField& sys, const DomainSpec& dom,
                        double t, std::size_t grid);

/// Entry point for the fts_cli binary. Never throws; returns an ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fts

#endif  // FTS_CLI_HPP
