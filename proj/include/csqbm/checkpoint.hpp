#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "csqbm/model.hpp"

namespace csqbm {

inline constexpr int kCheckpointVersion = 1;

struct OptimizerState {
  std::string kind = "sgd";
  std::uint64_t steps = 0;

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

struct Checkpoint {
  CsqbmModel model;
  std::string rng_label;
  OptimizerState optimizer;
};

/// Serializes to a versioned JSON document. Weights are written in shortest
/// round-trip form, so save/load reproduces every double bit for bit.
std::string checkpoint_to_string(const Checkpoint& ckpt);
/// Throws ConfigError on a malformed or unsupported document.
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Stable 64-bit FNV-1a digest of the serialized checkpoint, as 16 hex digits.
std::string checkpoint_hash(const Checkpoint& ckpt);

}  // namespace csqbm
