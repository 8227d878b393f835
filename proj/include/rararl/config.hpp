#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "rararl/eval.hpp"
#include "rararl/trainer.hpp"

namespace rararl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  TrainConfig train;
  TrackConfig track;
  EvalConfig eval;
  std::uint64_t seed = 0;
  bool seed_set = false;  // whether the file provided run.seed
  std::string out_dir = "out";
};

// Flat key = value lines under [section] headers; '#' starts a comment.
// Unknown sections or keys and malformed values are collected and reported
// together, one line-numbered diagnostic each.
RunConfig parse_config_text(const std::string& text, const std::string& source_name);

RunConfig load_config_file(const std::string& path);

// Sorted key=value dump of everything that affects a run; input to the digest.
std::string canonical_config(const RunConfig& cfg);

std::uint64_t fnv1a64(const std::string& s);
std::string config_digest(const RunConfig& cfg);

}  // namespace rararl
