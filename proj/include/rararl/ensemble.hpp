#pragma once

#include <span>
#include <vector>

#include "rararl/nn.hpp"
#include "rararl/rng.hpp"

namespace rararl {

enum class AgentRole { Protagonist, Adversary };

inline const char* role_name(AgentRole r) {
  return r == AgentRole::Protagonist ? "protagonist" : "adversary";
}

struct RiskConfig {
  double lambda_p = 0.0;
  double lambda_a = 0.0;
  bool zero_sum = false;
};

void validate(const RiskConfig& cfg);

// Shared trunk with ReLU at the trunk/head interface; each head is one dense
// layer producing per-action values.
struct EnsembleQNetwork {
  DenseNet trunk;
  std::vector<DenseNet> heads;

  int head_count() const { return static_cast<int>(heads.size()); }
  int num_actions() const { return heads.front().output_dim(); }
  int obs_dim() const { return trunk.input_dim(); }
  int feature_dim() const { return trunk.output_dim(); }
  std::size_t parameter_count() const;
};

// Init draws run trunk first, then heads in index order, all from one stream.
// With k == 1 the draw sequence matches a single DenseNet of the composed
// shape, so a one-head ensemble and a plain net start bit-identical.
EnsembleQNetwork make_ensemble(int obs_dim, const std::vector<int>& trunk_hidden,
                               int k, int num_actions, RngStream& rng);

struct EnsembleAdam {
  AdamState trunk;
  std::vector<AdamState> heads;
};

EnsembleAdam make_ensemble_adam(const EnsembleQNetwork& net, double beta1 = 0.9,
                                double beta2 = 0.999, double epsilon = 1e-8);

void sync_target(const EnsembleQNetwork& online, EnsembleQNetwork& target);

// k x num_actions, row-major by head
struct QMatrix {
  int k = 0;
  int num_actions = 0;
  std::vector<double> values;

  double at(int head, int action) const { return values[static_cast<std::size_t>(head) * num_actions + action]; }
  std::span<const double> row(int head) const {
    return std::span<const double>(values).subspan(static_cast<std::size_t>(head) * num_actions, num_actions);
  }
};

struct EnsembleCache {
  ForwardCache trunk;
  std::vector<double> feature;  // ReLU of trunk output
  std::vector<ForwardCache> heads;
};

QMatrix ensemble_forward(const EnsembleQNetwork& net, std::span<const double> obs,
                         EnsembleCache* cache = nullptr);

inline QMatrix q_all_heads(const EnsembleQNetwork& net, std::span<const double> obs) {
  return ensemble_forward(net, obs);
}

// Per-action mean over heads.
std::vector<double> mean_q(const QMatrix& q);

// Per-action population variance over heads (divide by k).
std::vector<double> variance_q(const QMatrix& q);

// Protagonist: q - lambda_p * var. Adversary: q + lambda_a * var.
std::vector<double> modified_q(AgentRole role, std::span<const double> q,
                               std::span<const double> var, const RiskConfig& cfg);

// Ties break toward the lowest index.
int argmax_lowest(std::span<const double> values);

struct ActionChoice {
  int action = 0;
  double selected_variance = 0.0;  // NaN when the action was an exploration draw
  bool explored = false;
};

// Epsilon-greedy over the risk-modified values of one sampled head. Consumes
// one uniform draw always, plus one integer draw when exploring.
ActionChoice select_action(const EnsembleQNetwork& net, std::span<const double> obs,
                           AgentRole role, int head_index, const RiskConfig& cfg,
                           double epsilon, RngStream& rng);

// Greedy over the risk-modified ensemble mean; consumes no randomness.
int select_action_test(const EnsembleQNetwork& net, std::span<const double> obs,
                       AgentRole role, const RiskConfig& cfg);

struct BootstrapMask {
  std::vector<int> counts;  // per head; 0 excludes the head from the update
};

// Chooses heads_per_update distinct heads (all of them when it equals k,
// consuming no draws), then gives each chosen head weight 1 + Poisson(rate).
// rate == 0 consumes no Poisson draws.
BootstrapMask sample_mask(int k, double rate, int heads_per_update, RngStream& rng);

// Plain bootstrap variant: every head weighted Poisson(rate), zeros allowed.
BootstrapMask sample_mask_poisson(int k, double rate, RngStream& rng);

}  // namespace rararl
