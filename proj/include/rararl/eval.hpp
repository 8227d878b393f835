#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rararl/ensemble.hpp"
#include "rararl/schedule.hpp"
#include "rararl/speedway.hpp"

namespace rararl {

enum class Regime { None, RandomPerturb, AdversarialPerturb };

Regime parse_regime(const std::string& name);
const char* regime_name(Regime r);

// Deterministic per-episode policy; the factory receives the episode's seed
// so stochastic policies stay reproducible under parallel evaluation.
using Policy = std::function<int(const Observation&)>;
using PolicyFactory = std::function<Policy(std::uint64_t episode_seed)>;

PolicyFactory net_policy(const EnsembleQNetwork& net, AgentRole role, const RiskConfig& risk);
PolicyFactory random_policy();

struct EvalConfig {
  Regime regime = Regime::None;
  int episodes = 10;
  int m = 10;  // protagonist steps per cycle
  int n = 1;   // perturber steps per cycle
  std::uint64_t seed = 0;
  bool parallel = true;
};

struct EvalEpisode {
  int index = 0;
  long steps = 0;
  double progress_total = 0.0;
  double progress_pure = 0.0;
  double catastrophe_reward = 0.0;
  int catastrophes = 0;
};

struct EvalReport {
  Regime regime = Regime::None;
  std::vector<EvalEpisode> episodes;
  double mean_steps = 0.0;
  double mean_progress_total = 0.0;
  double std_progress_total = 0.0;
  double mean_progress_pure = 0.0;
  double std_progress_pure = 0.0;
  double mean_catastrophe_reward = 0.0;
  double std_catastrophe_reward = 0.0;
  double mean_catastrophes = 0.0;

  std::string to_csv() const;  // one row per episode plus a mean row
};

// Runs episodes under the given perturbation regime. The perturber acts on
// the last n steps of every (m + n)-cycle; regime None never perturbs.
// An adversary factory is required exactly when the regime is adversarial.
EvalReport evaluate_policy(const PolicyFactory& protagonist, const PolicyFactory* adversary,
                           const EvalConfig& cfg, const TrackConfig& track);

EvalReport evaluate(const EnsembleQNetwork& protagonist, const RiskConfig& prot_risk,
                    const EnsembleQNetwork* adversary, const RiskConfig& adv_risk,
                    const EvalConfig& cfg, const TrackConfig& track);

// rows = models, columns = regimes; cells hold each model's best (largest)
// mean catastrophe reward across its checkpoints.
std::string compare_table_csv(const std::vector<std::string>& model_names,
                              const std::vector<Regime>& regimes,
                              const std::vector<std::vector<double>>& cells);

}  // namespace rararl
