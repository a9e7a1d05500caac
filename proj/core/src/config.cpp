// SPDX-License-Identifier: Apache-2.0
#include "graphlog/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "graphlog/errors.hpp"

namespace graphlog {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string join_u32(const std::vector<uint32_t>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<uint32_t> parse_u32_list(const std::string& s, const std::string& key) {
  std::vector<uint32_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(static_cast<uint32_t>(std::stoul(item)));
    } catch (const std::exception&) {
      throw UsageError("config: bad integer '" + item + "' in " + key);
    }
  }
  if (out.empty()) throw UsageError("config: empty list for " + key);
  return out;
}

double parse_double(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config: bad number '" + s + "' for " + key);
  }
}

uint64_t parse_u64(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config: bad integer '" + s + "' for " + key);
  }
}

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "on") return true;
  if (s == "false" || s == "0" || s == "off") return false;
  throw UsageError("config: bad boolean '" + s + "' for " + key);
}

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void set_key(RunConfig& cfg, const std::string& section, const std::string& key,
             const std::string& value) {
  TrainConfig& t = cfg.train;
  const std::string q = section + "." + key;
  if (section == "train") {
    if (key == "preset") {
      apply_preset(t, value);
      t.preset = value;
    } else if (key == "seed") {
      t.seed = parse_u64(value, q);
    } else if (key == "dtype") {
      if (value == "f64") t.dtype = DType::f64;
      else if (value == "f32") t.dtype = DType::f32;
      else throw UsageError("config: dtype must be f64 or f32, got '" + value + "'");
    } else if (key == "strict_numerics") {
      t.strict_numerics = parse_bool(value, q);
    } else if (key == "mask_rate") {
      t.mask_rate = parse_double(value, q);
    } else if (key == "mask_mode") {
      if (value == "node") t.mask_mode = MaskMode::node;
      else if (value == "edge") t.mask_mode = MaskMode::edge;
      else throw UsageError("config: mask_mode must be node or edge, got '" + value + "'");
    } else if (key == "batch_size") {
      t.batch_size = static_cast<uint32_t>(parse_u64(value, q));
    } else if (key == "epochs_local") {
      t.epochs_local = static_cast<uint32_t>(parse_u64(value, q));
    } else if (key == "epochs_joint") {
      t.epochs_joint = static_cast<uint32_t>(parse_u64(value, q));
    } else if (key == "lr") {
      t.lr = parse_double(value, q);
    } else if (key == "k_neg") {
      t.k_neg = static_cast<uint32_t>(parse_u64(value, q));
    } else if (key == "nodes_per_graph") {
      t.nodes_per_graph = static_cast<uint32_t>(parse_u64(value, q));
    } else if (key == "temperature") {
      t.temperature = parse_double(value, q);
    } else if (key == "nce_sum_negatives") {
      t.nce_sum_negatives = parse_bool(value, q);
    } else if (key == "e_step_on_masked") {
      t.e_step_on_masked = parse_bool(value, q);
    } else if (key == "loss_graph") {
      t.loss_graph = parse_bool(value, q);
    } else if (key == "loss_sub") {
      t.loss_sub = parse_bool(value, q);
    } else if (key == "loss_global") {
      t.loss_global = parse_bool(value, q);
    } else {
      throw UsageError("config: unknown key '" + q + "'");
    }
  } else if (section == "gnn") {
    if (key == "layers") t.gnn.layers = static_cast<uint32_t>(parse_u64(value, q));
    else if (key == "hidden_dim") t.gnn.hidden_dim = static_cast<uint32_t>(parse_u64(value, q));
    else throw UsageError("config: unknown key '" + q + "'");
  } else if (section == "forest") {
    if (key == "depth") t.forest_depth = static_cast<uint32_t>(parse_u64(value, q));
    else if (key == "k_per_layer") t.k_per_layer = parse_u32_list(value, q);
    else throw UsageError("config: unknown key '" + q + "'");
  } else if (section == "finetune") {
    if (key == "batch_size") t.finetune.batch_size = static_cast<uint32_t>(parse_u64(value, q));
    else if (key == "epochs") t.finetune.epochs = static_cast<uint32_t>(parse_u64(value, q));
    else if (key == "lr") t.finetune.lr = parse_double(value, q);
    else if (key == "scheduler") t.finetune.scheduler = parse_bool(value, q);
    else throw UsageError("config: unknown key '" + q + "'");
  } else if (section == "synthetic") {
    SyntheticSpec& y = cfg.synthetic;
    if (key == "levels") y.levels = static_cast<uint32_t>(parse_u64(value, q));
    else if (key == "branching") y.branching = parse_u32_list(value, q);
    else if (key == "graphs_per_leaf") y.graphs_per_leaf = static_cast<uint32_t>(parse_u64(value, q));
    else if (key == "motif_nodes_min") y.motif_nodes_min = static_cast<uint32_t>(parse_u64(value, q));
    else if (key == "motif_nodes_max") y.motif_nodes_max = static_cast<uint32_t>(parse_u64(value, q));
    else if (key == "edge_noise") y.edge_noise = parse_double(value, q);
    else if (key == "attr_noise") y.attr_noise = parse_double(value, q);
    else if (key == "seed") y.seed = parse_u64(value, q);
    else throw UsageError("config: unknown key '" + q + "'");
  } else {
    throw UsageError("config: unknown section '[" + section + "]'");
  }
}

}  // namespace

void TrainConfig::validate() const {
  auto positive = [](uint64_t v, const char* name) {
    if (v == 0) throw UsageError(std::string("config: ") + name + " must be positive");
  };
  positive(batch_size, "train.batch_size");
  positive(k_neg, "train.k_neg");
  positive(nodes_per_graph, "train.nodes_per_graph");
  positive(forest_depth, "forest.depth");
  positive(gnn.layers, "gnn.layers");
  positive(gnn.hidden_dim, "gnn.hidden_dim");
  positive(finetune.batch_size, "finetune.batch_size");
  if (mask_rate < 0.0 || mask_rate > 1.0) {
    throw UsageError("config: train.mask_rate must lie in [0, 1]");
  }
  if (temperature <= 0.0) throw UsageError("config: train.temperature must be positive");
  if (lr <= 0.0 || finetune.lr <= 0.0) throw UsageError("config: learning rates must be positive");
  if (k_per_layer.size() != forest_depth) {
    throw UsageError("config: forest.k_per_layer has " + std::to_string(k_per_layer.size()) +
                     " entries but forest.depth is " + std::to_string(forest_depth));
  }
  for (uint32_t k : k_per_layer) positive(k, "forest.k_per_layer entries");
}

uint32_t SyntheticSpec::num_leaf_classes() const {
  uint32_t n = 1;
  for (uint32_t b : branching) n *= b;
  return n;
}

void SyntheticSpec::validate() const {
  if (levels == 0) throw UsageError("config: synthetic.levels must be positive");
  if (branching.size() != levels) {
    throw UsageError("config: synthetic.branching has " + std::to_string(branching.size()) +
                     " entries but synthetic.levels is " + std::to_string(levels));
  }
  for (uint32_t b : branching) {
    if (b == 0) throw UsageError("config: synthetic.branching entries must be positive");
  }
  if (motif_nodes_min < 2) throw UsageError("config: synthetic.motif_nodes_min must be >= 2");
  if (motif_nodes_max < motif_nodes_min) {
    throw UsageError("config: synthetic.motif_nodes_max < motif_nodes_min");
  }
  if (graphs_per_leaf == 0) throw UsageError("config: synthetic.graphs_per_leaf must be positive");
  if (edge_noise < 0.0 || edge_noise > 1.0 || attr_noise < 0.0 || attr_noise > 1.0) {
    throw UsageError("config: synthetic noise rates must lie in [0, 1]");
  }
}

void apply_preset(TrainConfig& cfg, const std::string& preset) {
  if (preset == "desk") {
    cfg = TrainConfig{};
  } else if (preset == "paper") {
    cfg = TrainConfig{};
    cfg.preset = "paper";
    cfg.batch_size = 512;
    cfg.forest_depth = 3;
    cfg.k_per_layer = {50, 50, 50};
    cfg.gnn.layers = 5;
    cfg.gnn.hidden_dim = 300;
  } else {
    throw UsageError("config: unknown preset '" + preset + "' (expected desk or paper)");
  }
}

std::string RunConfig::to_ini() const {
  const TrainConfig& t = train;
  std::ostringstream os;
  os << "[train]\n";
  os << "preset = " << t.preset << "\n";
  os << "seed = " << t.seed << "\n";
  os << "dtype = " << (t.dtype == DType::f64 ? "f64" : "f32") << "\n";
  os << "strict_numerics = " << (t.strict_numerics ? "true" : "false") << "\n";
  os << "mask_rate = " << fmt_double(t.mask_rate) << "\n";
  os << "mask_mode = " << (t.mask_mode == MaskMode::node ? "node" : "edge") << "\n";
  os << "batch_size = " << t.batch_size << "\n";
  os << "epochs_local = " << t.epochs_local << "\n";
  os << "epochs_joint = " << t.epochs_joint << "\n";
  os << "lr = " << fmt_double(t.lr) << "\n";
  os << "k_neg = " << t.k_neg << "\n";
  os << "nodes_per_graph = " << t.nodes_per_graph << "\n";
  os << "temperature = " << fmt_double(t.temperature) << "\n";
  os << "nce_sum_negatives = " << (t.nce_sum_negatives ? "true" : "false") << "\n";
  os << "e_step_on_masked = " << (t.e_step_on_masked ? "true" : "false") << "\n";
  os << "loss_graph = " << (t.loss_graph ? "true" : "false") << "\n";
  os << "loss_sub = " << (t.loss_sub ? "true" : "false") << "\n";
  os << "loss_global = " << (t.loss_global ? "true" : "false") << "\n";
  os << "\n[gnn]\n";
  os << "layers = " << t.gnn.layers << "\n";
  os << "hidden_dim = " << t.gnn.hidden_dim << "\n";
  os << "\n[forest]\n";
  os << "depth = " << t.forest_depth << "\n";
  os << "k_per_layer = " << join_u32(t.k_per_layer) << "\n";
  os << "\n[finetune]\n";
  os << "batch_size = " << t.finetune.batch_size << "\n";
  os << "epochs = " << t.finetune.epochs << "\n";
  os << "lr = " << fmt_double(t.finetune.lr) << "\n";
  os << "scheduler = " << (t.finetune.scheduler ? "true" : "false") << "\n";
  os << "\n[synthetic]\n";
  os << "levels = " << synthetic.levels << "\n";
  os << "branching = " << join_u32(synthetic.branching) << "\n";
  os << "graphs_per_leaf = " << synthetic.graphs_per_leaf << "\n";
  os << "motif_nodes_min = " << synthetic.motif_nodes_min << "\n";
  os << "motif_nodes_max = " << synthetic.motif_nodes_max << "\n";
  os << "edge_noise = " << fmt_double(synthetic.edge_noise) << "\n";
  os << "attr_noise = " << fmt_double(synthetic.attr_noise) << "\n";
  os << "seed = " << synthetic.seed << "\n";
  return os.str();
}

uint64_t RunConfig::hash() const { return fnv1a64(to_ini()); }

std::string RunConfig::hash_hex() const {
  static const char* digits = "0123456789abcdef";
  uint64_t h = hash();
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

RunConfig parse_config(const std::string& ini_text) {
  RunConfig cfg;
  struct Entry {
    std::string section, key, value;
  };
  std::vector<Entry> entries;
  std::istringstream is(ini_text);
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // strip comments
    const size_t hash_pos = line.find_first_of("#;");
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw UsageError("config line " + std::to_string(lineno) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      throw UsageError("config line " + std::to_string(lineno) + ": key outside any section");
    }
    entries.push_back(Entry{section, key, value});
  }
  // The preset expands first so that every other key still overrides it,
  // regardless of where it appears in the file.
  for (const auto& e : entries) {
    if (e.section == "train" && e.key == "preset") set_key(cfg, e.section, e.key, e.value);
  }
  for (const auto& e : entries) {
    if (e.section == "train" && e.key == "preset") continue;
    set_key(cfg, e.section, e.key, e.value);
  }
  cfg.train.validate();
  cfg.synthetic.validate();
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw UsageError("override '" + assignment + "': expected section.key=value");
  }
  const std::string path = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  const size_t dot = path.find('.');
  if (dot == std::string::npos) {
    throw UsageError("override '" + assignment + "': expected section.key=value");
  }
  // Validation happens once the caller has applied every override, so a
  // depth change and its matching k_per_layer can arrive as two assignments.
  set_key(cfg, path.substr(0, dot), path.substr(dot + 1), value);
}

}  // namespace graphlog
