#include "rararl/eval.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "rararl/metrics.hpp"

namespace rararl {

Regime parse_regime(const std::string& name) {
  if (name == "none") return Regime::None;
  if (name == "random") return Regime::RandomPerturb;
  if (name == "adversarial") return Regime::AdversarialPerturb;
  throw std::invalid_argument("unknown regime: " + name);
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::None: return "none";
    case Regime::RandomPerturb: return "random";
    case Regime::AdversarialPerturb: return "adversarial";
  }
  throw std::invalid_argument("unknown regime enum value");
}

PolicyFactory net_policy(const EnsembleQNetwork& net, AgentRole role, const RiskConfig& risk) {
  return [&net, role, risk](std::uint64_t) -> Policy {
    return [&net, role, risk](const Observation& obs) {
      return select_action_test(net, obs, role, risk);
    };
  };
}

PolicyFactory random_policy() {
  return [](std::uint64_t episode_seed) -> Policy {
    auto rng = std::make_shared<RngStream>(derive_seed(episode_seed, Stream::Action));
    return [rng](const Observation&) { return static_cast<int>(rng->uniform_below(kNumActions)); };
  };
}

namespace {

EvalEpisode run_episode(int index, std::uint64_t episode_seed, const PolicyFactory& protagonist,
                        const PolicyFactory* adversary, const EvalConfig& cfg,
                        const TrackConfig& track) {
  SpeedwayEnv env(track, derive_seed(episode_seed, Stream::EnvJitter));
  RngStream pert_rng(derive_seed(episode_seed, Stream::PerturberAction));
  Policy prot = protagonist(episode_seed);
  Policy adv;
  if (cfg.regime == Regime::AdversarialPerturb) adv = (*adversary)(episode_seed);

  EvalEpisode ep;
  ep.index = index;
  Observation obs = env.observation();
  const int cycle = cfg.m + cfg.n;
  for (long i = 0;; ++i) {
    const bool perturber_turn = cfg.regime != Regime::None && (i % cycle) >= cfg.m;
    int action;
    if (!perturber_turn) {
      action = prot(obs);
    } else if (cfg.regime == Regime::RandomPerturb) {
      action = static_cast<int>(pert_rng.uniform_below(kNumActions));
    } else {
      action = adv(obs);
    }
    const SpeedwayEnv::StepResult res = env.step(action);
    ep.steps += 1;
    ep.progress_total += res.reward.progress_total;
    ep.progress_pure += res.reward.progress_pure;
    ep.catastrophe_reward += res.reward.catastrophe;
    ep.catastrophes += res.reward.C;
    if (res.done) break;
    obs = res.obs;
  }
  return ep;
}

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  for (double x : xs) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / static_cast<double>(xs.size()));
}

}  // namespace

EvalReport evaluate_policy(const PolicyFactory& protagonist, const PolicyFactory* adversary,
                           const EvalConfig& cfg, const TrackConfig& track) {
  if (cfg.episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  if (cfg.m < 1 || cfg.n < 1) throw std::invalid_argument("evaluate: m and n must be >= 1");
  const bool need_adv = cfg.regime == Regime::AdversarialPerturb;
  if (need_adv && adversary == nullptr) {
    throw std::invalid_argument("adversarial regime needs an adversary policy");
  }
  if (!need_adv && adversary != nullptr) {
    throw std::invalid_argument("adversary policy given but the regime never uses it");
  }
  track.validate();

  EvalReport rep;
  rep.regime = cfg.regime;
  rep.episodes.resize(cfg.episodes);
  if (cfg.parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int e = 0; e < cfg.episodes; ++e) {
      rep.episodes[e] = run_episode(e, derive_seed(cfg.seed, static_cast<std::uint64_t>(e)),
                                    protagonist, adversary, cfg, track);
    }
  } else {
    for (int e = 0; e < cfg.episodes; ++e) {
      rep.episodes[e] = run_episode(e, derive_seed(cfg.seed, static_cast<std::uint64_t>(e)),
                                    protagonist, adversary, cfg, track);
    }
  }

  std::vector<double> steps, pt, pp, cr, cc;
  for (const EvalEpisode& ep : rep.episodes) {
    steps.push_back(static_cast<double>(ep.steps));
    pt.push_back(ep.progress_total);
    pp.push_back(ep.progress_pure);
    cr.push_back(ep.catastrophe_reward);
    cc.push_back(static_cast<double>(ep.catastrophes));
  }
  double dummy;
  mean_std(steps, rep.mean_steps, dummy);
  mean_std(pt, rep.mean_progress_total, rep.std_progress_total);
  mean_std(pp, rep.mean_progress_pure, rep.std_progress_pure);
  mean_std(cr, rep.mean_catastrophe_reward, rep.std_catastrophe_reward);
  mean_std(cc, rep.mean_catastrophes, dummy);
  return rep;
}

EvalReport evaluate(const EnsembleQNetwork& protagonist, const RiskConfig& prot_risk,
                    const EnsembleQNetwork* adversary, const RiskConfig& adv_risk,
                    const EvalConfig& cfg, const TrackConfig& track) {
  const PolicyFactory prot = net_policy(protagonist, AgentRole::Protagonist, prot_risk);
  if (cfg.regime == Regime::AdversarialPerturb) {
    if (adversary == nullptr) {
      throw std::invalid_argument("adversarial regime needs an adversary network");
    }
    const PolicyFactory adv = net_policy(*adversary, AgentRole::Adversary, adv_risk);
    return evaluate_policy(prot, &adv, cfg, track);
  }
  return evaluate_policy(prot, nullptr, cfg, track);
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "episode,steps,progress_total,progress_pure,catastrophe_reward,catastrophes\n";
  for (const EvalEpisode& ep : episodes) {
    os << ep.index << ',' << ep.steps << ',' << format_double(ep.progress_total) << ','
       << format_double(ep.progress_pure) << ',' << format_double(ep.catastrophe_reward) << ','
       << ep.catastrophes << '\n';
  }
  os << "mean," << format_double(mean_steps) << ',' << format_double(mean_progress_total) << ','
     << format_double(mean_progress_pure) << ',' << format_double(mean_catastrophe_reward) << ','
     << format_double(mean_catastrophes) << '\n';
  return os.str();
}

std::string compare_table_csv(const std::vector<std::string>& model_names,
                              const std::vector<Regime>& regimes,
                              const std::vector<std::vector<double>>& cells) {
  if (cells.size() != model_names.size()) {
    throw std::invalid_argument("compare table: one cell row per model required");
  }
  std::ostringstream os;
  os << "model";
  for (Regime r : regimes) os << ',' << regime_name(r);
  os << '\n';
  for (std::size_t i = 0; i < model_names.size(); ++i) {
    if (cells[i].size() != regimes.size()) {
      throw std::invalid_argument("compare table: one cell per regime required");
    }
    os << model_names[i];
    for (double c : cells[i]) os << ',' << format_double(c);
    os << '\n';
  }
  return os.str();
}

}  // namespace rararl
