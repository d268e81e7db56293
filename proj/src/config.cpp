#include "cmr/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cmr {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str());
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::string KeyValueConfig::require_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw std::runtime_error("config: missing required key '" + key + "'");
  return it->second;
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return std::stol(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' is not an integer: " + it->second);
  }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' is not a number: " + it->second);
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config: key '" + key + "' is not a boolean: " + v);
}

std::string KeyValueConfig::fingerprint() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& cfg) {
  TrainConfig tc;
  tc.preset = cfg.get_string("preset", "toy");
  if (tc.preset == "toy") {
    tc.model.dim = 64;
    tc.learning_rate = 1e-3;
    tc.batch_size = 32;
    tc.epochs = 200;
    tc.clip_norm = 2.0;
  } else if (tc.preset == "paper") {
    // Recorded for fidelity; running it without a pretrained encoder is not
    // expected to be meaningful.
    tc.model.dim = 1024;
    tc.learning_rate = 5e-5;
    tc.batch_size = 16;
    tc.epochs = 5;
    tc.clip_norm = 2.0;
  } else {
    throw std::runtime_error("config: unknown preset '" + tc.preset + "' (expected toy or paper)");
  }

  tc.model.dim = static_cast<int>(cfg.get_int("dim", tc.model.dim));
  tc.model.gcn_layers = static_cast<int>(cfg.get_int("gcn_layers", tc.model.gcn_layers));
  tc.model.heads = static_cast<int>(cfg.get_int("heads", tc.model.heads));
  tc.model.max_seq_len = static_cast<int>(cfg.get_int("max_seq_len", tc.model.max_seq_len));
  tc.model.lambda = cfg.get_double("lambda", tc.model.lambda);
  tc.model.span_loss_weight = cfg.get_double("span_loss_weight", tc.model.span_loss_weight);
  const std::string span_mode = cfg.get_string("span_score_mode", "max");
  if (span_mode == "max") tc.model.span_mode = SpanScoreMode::Max;
  else if (span_mode == "min") tc.model.span_mode = SpanScoreMode::Min;
  else throw std::runtime_error("config: span_score_mode must be max or min");
  tc.model.disable_explicit_graph = cfg.get_bool("disable_explicit_graph", false);
  tc.model.disable_implicit_graph = cfg.get_bool("disable_implicit_graph", false);
  tc.model.disable_rule_marker = cfg.get_bool("disable_rule_marker", false);

  tc.learning_rate = cfg.get_double("learning_rate", tc.learning_rate);
  tc.batch_size = static_cast<int>(cfg.get_int("batch_size", tc.batch_size));
  tc.epochs = static_cast<int>(cfg.get_int("epochs", tc.epochs));
  tc.clip_norm = cfg.get_double("clip_norm", tc.clip_norm);
  tc.early_stop_dev_micro = cfg.get_double("early_stop_dev_micro", tc.early_stop_dev_micro);
  tc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", -1));
  if (!cfg.has("seed")) throw std::runtime_error("config: 'seed' is mandatory");

  if (tc.model.dim <= 0 || tc.model.gcn_layers <= 0 || tc.model.heads <= 0 || tc.batch_size <= 0 ||
      tc.epochs <= 0 || !(tc.learning_rate > 0.0) || !(tc.clip_norm > 0.0) ||
      tc.model.max_seq_len < 8 || tc.model.lambda < 0.0 || tc.model.span_loss_weight < 0.0) {
    throw std::runtime_error("config: numeric training fields must be positive");
  }
  return tc;
}

GeneratorConfig generator_config_from(const KeyValueConfig& cfg) {
  GeneratorConfig gc;
  gc.n_examples = static_cast<int>(cfg.get_int("n_examples", gc.n_examples));
  gc.edu_min = static_cast<int>(cfg.get_int("edu_min", gc.edu_min));
  gc.edu_max = static_cast<int>(cfg.get_int("edu_max", gc.edu_max));
  gc.p_yes = cfg.get_double("p_yes", gc.p_yes);
  gc.p_no = cfg.get_double("p_no", gc.p_no);
  gc.p_inquire = cfg.get_double("p_inquire", gc.p_inquire);
  gc.p_irrelevant = cfg.get_double("p_irrelevant", gc.p_irrelevant);
  gc.p_alternation = cfg.get_double("p_alternation", gc.p_alternation);
  gc.p_second_blocker = cfg.get_double("p_second_blocker", gc.p_second_blocker);
  gc.p_scenario_fact = cfg.get_double("p_scenario_fact", gc.p_scenario_fact);
  gc.p_extra_link = cfg.get_double("p_extra_link", gc.p_extra_link);
  if (cfg.has("relation_weights")) {
    gc.relation_weights.clear();
    std::istringstream in(cfg.require_string("relation_weights"));
    std::string item;
    while (std::getline(in, item, ',')) {
      const std::size_t colon = item.find(':');
      if (colon == std::string::npos) {
        throw std::runtime_error("config: relation_weights entries must look like name:weight");
      }
      gc.relation_weights[relation_type_from_string(item.substr(0, colon))] =
          std::stod(item.substr(colon + 1));
    }
  }
  return gc;
}

}  // namespace cmr
