#pragma once

#include <string>

#include "cmr/model.hpp"

namespace cmr {

// Versioned binary blob: dims, vocabulary, every named parameter tensor, and
// the canonical config fingerprint of the producing run. Byte-deterministic
// for identical parameters.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::string& config_fingerprint);

struct Checkpoint {
  ModelParams params;
  std::string config_fingerprint;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace cmr
