#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "rararl/batch_kernels.hpp"
#include "rararl/metrics.hpp"
#include "rararl/schedule.hpp"
#include "rararl/speedway.hpp"

namespace rararl {

enum class Variant {
  Dqn,
  Bsdqn,
  Bsdqnrand,
  Bsdqnrandriskaverse,
  Bsdqnadv,
  Bsdqnadvriskaverse,
};

Variant parse_variant(const std::string& name);
const char* variant_name(Variant v);

enum class PerturberKind { None, Random, Adversary };

struct TrainConfig {
  Variant variant = Variant::Bsdqn;
  std::uint64_t seed = 0;
  long total_steps = 100000;
  int train_freq = 4;
  long target_update_freq = 1000;
  int batch_size = 32;
  double gamma = 0.99;
  double lr = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double grad_clip = 10.0;
  std::size_t buffer_capacity = 10000;
  double eps_start = 1.0;
  double eps_end = 0.02;
  long eps_decay_from = 1000;
  long eps_decay_to = 50000;
  ScheduleXi schedule;

  // Unset fields take the variant's defaults; explicit values that contradict
  // the variant are config conflicts.
  std::optional<int> k;
  std::optional<double> lambda_p;
  std::optional<double> lambda_a;

  double mask_rate = 0.03;
  int heads_per_update = 5;
  bool plain_poisson_mask = false;  // literal Poisson(rate) per head, zeros allowed
  std::vector<int> trunk_hidden = {64, 64};
  long checkpoint_interval = 10000;
  bool parallel_update = true;

  void validate() const;
};

struct VariantSpec {
  int k = 10;
  RiskConfig risk;
  PerturberKind perturber = PerturberKind::None;
  bool adversary_trained = false;
  bool use_schedule = false;
  double mask_rate = 0.03;
  int heads_per_update = 5;
};

// Resolves the variant's ensemble size, risk weights and perturber, checking
// explicit overrides for conflicts.
VariantSpec make_variant(const TrainConfig& cfg);

struct AgentBundle {
  EnsembleQNetwork online;
  EnsembleQNetwork target;
  EnsembleAdam opt;
};

struct TrainOutput {
  AgentBundle protagonist;
  std::optional<AgentBundle> adversary;
  MetricsLog metrics;
  long steps = 0;
  long episodes = 0;
};

struct AgentView {
  const EnsembleQNetwork* online = nullptr;
  const EnsembleQNetwork* target = nullptr;
  const EnsembleAdam* opt = nullptr;
};

struct TrainView {
  long step = 0;
  AgentView protagonist;
  const AgentView* adversary = nullptr;  // null when the variant has none
};

struct TrainHooks {
  // fires right after the protagonist's optimizer step
  std::function<void(long t, const EnsembleQNetwork& online)> after_protagonist_update;
  // fires at checkpoint_interval boundaries and once more at the end
  std::function<void(const TrainView&)> on_checkpoint;
};

TrainOutput train(const TrainConfig& cfg, const TrackConfig& track,
                  const TrainHooks* hooks = nullptr);

}  // namespace rararl
