#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "cmr/model.hpp"
#include "cmr/synthetic.hpp"

namespace cmr {

// Flat key-value configuration: one `key = value` per line, `#` comments.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Canonical sorted "key=value" dump used as the checkpoint fingerprint.
  std::string fingerprint() const;

 private:
  std::map<std::string, std::string> entries_;
};

struct TrainConfig {
  ModelConfig model;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 50;
  double clip_norm = 2.0;
  std::uint64_t seed = 0;
  double early_stop_dev_micro = -1.0;  // disabled when negative
  std::string preset = "toy";

  // Applies `preset` (toy or paper) and then any explicit overrides.
  static TrainConfig from_config(const KeyValueConfig& cfg);
};

GeneratorConfig generator_config_from(const KeyValueConfig& cfg);

}  // namespace cmr
