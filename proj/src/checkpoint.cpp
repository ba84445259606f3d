#include "fts/network.hpp"

#include <json.hpp>

#include <sstream>

namespace fts {

using nlohmann::json;

std::string checkpoint_to_string(const LyapunovNet& net) {
  std::ostringstream out;
  out << "{\n  \"format_version\": " << kCheckpointFormatVersion << ",\n";
  out << "  \"layer_dims\": [";
  for (std::size_t i = 0; i < net.layer_dims().size(); ++i) {
    out << (i ? ", " : "") << net.layer_dims()[i];
  }
  out << "],\n  \"activation\": \"softplus\",\n  \"weights\": [\n";
  for (int l = 0; l < net.n_layers(); ++l) {
    auto w = net.weight(l);
    out << "    [";
    bool first = true;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        out << (first ? "" : ", ") << format_double(w(i, j));
        first = false;
      }
    }
    out << "]" << (l + 1 < net.n_layers() ? "," : "") << "\n";
  }
  out << "  ],\n  \"biases\": [\n";
  for (int l = 0; l < net.n_layers(); ++l) {
    auto b = net.bias(l);
    out << "    [";
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      out << (i ? ", " : "") << format_double(b(i));
    }
    out << "]" << (l + 1 < net.n_layers() ? "," : "") << "\n";
  }
  out << "  ],\n  \"rng_seed\": " << net.rng_seed << ",\n";
  out << "  \"config_digest\": " << json(net.config_digest).dump() << "\n}\n";
  return out.str();
}

namespace {

const json& field(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end()) throw ParseError(std::string("checkpoint: missing field '") + name + "'");
  return *it;
}

std::vector<double> numbers(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw ParseError("checkpoint: '" + where + "' is not an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) throw ParseError("checkpoint: non-numeric entry in '" + where + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

LyapunovNet checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("checkpoint: top level is not an object");

  const json& version = field(doc, "format_version");
  if (!version.is_number_integer()) throw ParseError("checkpoint: 'format_version' is not an integer");
  if (version.get<int>() != kCheckpointFormatVersion) {
    throw CheckpointVersionError("checkpoint: unsupported format_version " +
                                 std::to_string(version.get<int>()) + " (expected " +
                                 std::to_string(kCheckpointFormatVersion) + ")");
  }
  const json& act = field(doc, "activation");
  if (!act.is_string() || act.get<std::string>() != "softplus") {
    throw ParseError("checkpoint: 'activation' must be \"softplus\"");
  }

  std::vector<int> dims;
  const json& jd = field(doc, "layer_dims");
  if (!jd.is_array()) throw ParseError("checkpoint: 'layer_dims' is not an array");
  for (const auto& d : jd) {
    if (!d.is_number_integer()) throw ParseError("checkpoint: 'layer_dims' entry is not an integer");
    dims.push_back(d.get<int>());
  }
  LyapunovNet net;
  try {
    net = LyapunovNet(dims);
  } catch (const InputError& e) {
    throw ParseError(std::string("checkpoint: 'layer_dims' invalid: ") + e.what());
  }

  const json& weights = field(doc, "weights");
  const json& biases = field(doc, "biases");
  if (!weights.is_array() || weights.size() != static_cast<std::size_t>(net.n_layers())) {
    throw ParseError("checkpoint: 'weights' must hold one array per layer");
  }
  if (!biases.is_array() || biases.size() != static_cast<std::size_t>(net.n_layers())) {
    throw ParseError("checkpoint: 'biases' must hold one array per layer");
  }
  for (int l = 0; l < net.n_layers(); ++l) {
    std::string wname = "weights[" + std::to_string(l) + "]";
    std::vector<double> w = numbers(weights[l], wname);
    auto wm = net.weight(l);
    if (w.size() != static_cast<std::size_t>(wm.size())) {
      throw ParseError("checkpoint: '" + wname + "' has " + std::to_string(w.size()) +
                       " entries, expected " + std::to_string(wm.size()));
    }
    for (Eigen::Index i = 0; i < wm.rows(); ++i) {
      for (Eigen::Index j = 0; j < wm.cols(); ++j) wm(i, j) = w[i * wm.cols() + j];
    }
    std::string bname = "biases[" + std::to_string(l) + "]";
    std::vector<double> b = numbers(biases[l], bname);
    auto bv = net.bias(l);
    if (b.size() != static_cast<std::size_t>(bv.size())) {
      throw ParseError("checkpoint: '" + bname + "' has wrong length");
    }
    for (Eigen::Index i = 0; i < bv.size(); ++i) bv(i) = b[i];
  }
  if (!net.params().allFinite()) throw ParseError("checkpoint: non-finite parameter");

  const json& seed = field(doc, "rng_seed");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    throw ParseError("checkpoint: 'rng_seed' is not an integer");
  }
  net.rng_seed = seed.get<std::uint64_t>();
  const json& digest = field(doc, "config_digest");
  if (!digest.is_string()) throw ParseError("checkpoint: 'config_digest' is not a string");
  net.config_digest = digest.get<std::string>();
  return net;
}

void save_checkpoint(const LyapunovNet& net, const std::string& path) {
  write_text_atomic(path, checkpoint_to_string(net));
}

LyapunovNet load_checkpoint(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::runtime_error& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  return checkpoint_from_string(text);
}

}  // namespace fts
