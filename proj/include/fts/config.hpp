#ifndef FTS_CONFIG_HPP
#define FTS_CONFIG_HPP

#include "fts/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace fts {

struct OracleConfig {
  std::size_t samples = 10000;
  double dt = 1e-3;
};

/// A fully resolved run: system, domains, training and output settings.
struct RunConfig {
  std::string name;
  VectorField system;
  DomainSpec domain;
  TrainConfig train;
  OracleConfig oracle;
  std::string output_dir = "fts_out";
  std::uint64_t base_seed = 1;
  nlohmann::json resolved;  // canonical settings, hashed into `digest`
  std::string digest;
};

/// Parses and schema-checks config text. Unknown sections or keys, missing
/// required keys and wrong types throw ParseError naming the line.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::string& path);

/// Replaces every seed with streams derived from `base`.
void set_base_seed(RunConfig& cfg, std::uint64_t base);
/// Applies FTS_SEED from the environment, if set. Returns true when applied.
bool apply_seed_env(RunConfig& cfg);

/// Built-in example ids: ex1, ex2, ex3, negative.
std::vector<std::string> example_ids();
/// TOML text for a built-in example, generated from the parameter table.
std::string example_config_text(const std::string& id);

/// 64-bit FNV-1a of `text`, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace fts

#endif  // FTS_CONFIG_HPP
