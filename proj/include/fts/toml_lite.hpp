#ifndef FTS_TOML_LITE_HPP
#define FTS_TOML_LITE_HPP

#include "fts/common.hpp"

#include <json.hpp>

#include <map>
#include <string>

namespace fts {

/// Parsed TOML document. `lines` maps dotted key paths ("training.lr") and
/// table headers ("training") to the 1-based line where they appear.
struct TomlDocument {
  nlohmann::json root = nlohmann::json::object();
  std::map<std::string, int> lines;

  int line_of(const std::string& path) const;
};

/// Parses the subset of TOML used by run configs: [tables] and [a.b] headers,
/// bare/quoted/dotted keys, basic and literal strings, integers, floats,
/// booleans, (multi-line, nested) arrays and inline tables, # comments.
/// Errors throw ParseError prefixed with "<source>:<line>: ".
TomlDocument parse_toml(const std::string& text, const std::string& source = "<config>");

}  // namespace fts

#endif  // FTS_TOML_LITE_HPP
