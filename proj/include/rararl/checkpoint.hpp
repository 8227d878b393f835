#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "rararl/trainer.hpp"

namespace rararl {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Versioned on-disk snapshot of a training run. All 64-bit reals are stored
// as hex-float strings so a load(save(x)) round trip is bitwise exact.
struct Checkpoint {
  int format_version = 1;
  std::string variant;
  std::string config_digest;
  long step = 0;
  double lambda_p = 0.0;
  double lambda_a = 0.0;
  AgentBundle protagonist;
  std::optional<AgentBundle> adversary;
};

std::string hex_double(double v);
double parse_hex_double(const std::string& s);

std::string checkpoint_to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const Checkpoint& ck, const std::string& path);

// Throws CheckpointError on unreadable files, version mismatch, shape
// mismatch, or non-finite parameters. A digest mismatch against
// `expect_digest` only warns on stderr: evaluating under a tweaked config is
// legitimate, silently mixing incompatible networks is not.
Checkpoint load_checkpoint(const std::string& path,
                           const std::string& expect_digest = "");

}  // namespace rararl
