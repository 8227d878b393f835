#include "rararl/trainer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rararl {

Variant parse_variant(const std::string& name) {
  if (name == "dqn") return Variant::Dqn;
  if (name == "bsdqn") return Variant::Bsdqn;
  if (name == "bsdqnrand") return Variant::Bsdqnrand;
  if (name == "bsdqnrandriskaverse") return Variant::Bsdqnrandriskaverse;
  if (name == "bsdqnadv") return Variant::Bsdqnadv;
  if (name == "bsdqnadvriskaverse") return Variant::Bsdqnadvriskaverse;
  throw std::invalid_argument("unknown variant: " + name);
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Dqn: return "dqn";
    case Variant::Bsdqn: return "bsdqn";
    case Variant::Bsdqnrand: return "bsdqnrand";
    case Variant::Bsdqnrandriskaverse: return "bsdqnrandriskaverse";
    case Variant::Bsdqnadv: return "bsdqnadv";
    case Variant::Bsdqnadvriskaverse: return "bsdqnadvriskaverse";
  }
  throw std::invalid_argument("unknown variant enum value");
}

void TrainConfig::validate() const {
  if (total_steps < 0) throw std::invalid_argument("total_steps must be >= 0");
  if (train_freq < 1) throw std::invalid_argument("train_freq must be >= 1");
  if (target_update_freq < 1) throw std::invalid_argument("target_update_freq must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in [0, 1]");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(grad_clip > 0.0)) throw std::invalid_argument("grad_clip must be positive");
  if (buffer_capacity < static_cast<std::size_t>(batch_size)) {
    throw std::invalid_argument("buffer_capacity must be >= batch_size");
  }
  if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0)) {
    throw std::invalid_argument("epsilon bounds must be in [0, 1]");
  }
  if (eps_decay_to <= eps_decay_from) {
    throw std::invalid_argument("epsilon decay window must be increasing");
  }
  schedule.validate();
  if (k && *k < 1) throw std::invalid_argument("k must be >= 1");
  if (lambda_p && !(*lambda_p >= 0.0)) throw std::invalid_argument("lambda_p must be >= 0");
  if (lambda_a && !(*lambda_a >= 0.0)) throw std::invalid_argument("lambda_a must be >= 0");
  if (!(mask_rate >= 0.0)) throw std::invalid_argument("mask_rate must be >= 0");
  if (heads_per_update < 1) throw std::invalid_argument("heads_per_update must be >= 1");
  if (trunk_hidden.empty()) throw std::invalid_argument("trunk_hidden must not be empty");
  for (int d : trunk_hidden) {
    if (d < 1) throw std::invalid_argument("trunk layer sizes must be >= 1");
  }
}

VariantSpec make_variant(const TrainConfig& cfg) {
  cfg.validate();
  VariantSpec vs;
  const bool risk_averse = cfg.variant == Variant::Bsdqnrandriskaverse ||
                           cfg.variant == Variant::Bsdqnadvriskaverse;
  switch (cfg.variant) {
    case Variant::Dqn:
      vs.k = 1;
      vs.perturber = PerturberKind::None;
      break;
    case Variant::Bsdqn:
      vs.k = 10;
      vs.perturber = PerturberKind::None;
      break;
    case Variant::Bsdqnrand:
    case Variant::Bsdqnrandriskaverse:
      vs.k = 10;
      vs.perturber = PerturberKind::Random;
      break;
    case Variant::Bsdqnadv:
    case Variant::Bsdqnadvriskaverse:
      vs.k = 10;
      vs.perturber = PerturberKind::Adversary;
      vs.adversary_trained = true;
      break;
  }
  vs.use_schedule = vs.perturber != PerturberKind::None;

  if (cfg.k) {
    if (cfg.variant == Variant::Dqn && *cfg.k != 1) {
      throw std::invalid_argument("config conflict: variant dqn runs a single head, k=" +
                                  std::to_string(*cfg.k) + " was given");
    }
    vs.k = *cfg.k;
  }

  if (!risk_averse) {
    if ((cfg.lambda_p && *cfg.lambda_p != 0.0) || (cfg.lambda_a && *cfg.lambda_a != 0.0)) {
      throw std::invalid_argument(std::string("config conflict: variant ") +
                                  variant_name(cfg.variant) + " has no risk weighting");
    }
    vs.risk.lambda_p = 0.0;
    vs.risk.lambda_a = 0.0;
  } else {
    vs.risk.lambda_p = cfg.lambda_p.value_or(0.1);
    if (cfg.variant == Variant::Bsdqnadvriskaverse) {
      vs.risk.zero_sum = true;
      vs.risk.lambda_a = cfg.lambda_a.value_or(vs.risk.lambda_p);
      if (cfg.lambda_a && *cfg.lambda_a != vs.risk.lambda_p) {
        throw std::invalid_argument(
            "config conflict: zero-sum risk-averse training needs lambda_a == lambda_p");
      }
    } else {
      vs.risk.lambda_a = 0.0;
    }
  }
  validate(vs.risk);

  if (cfg.variant == Variant::Dqn) {
    vs.mask_rate = 0.0;
    vs.heads_per_update = 1;
  } else {
    vs.mask_rate = cfg.mask_rate;
    vs.heads_per_update = std::min(cfg.heads_per_update, vs.k);
  }
  return vs;
}

namespace {

struct Agent {
  AgentBundle nets;
  ReplayBuffer buffer;
  int head = 0;
  std::vector<Transition> window;
  bool window_open = false;

  Agent(EnsembleQNetwork net, const TrainConfig& cfg, std::size_t capacity)
      : nets{net, net, make_ensemble_adam(net, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon)},
        buffer(capacity) {}
};

double run_update(Agent& ag, const TrainConfig& cfg, const VariantSpec& vs,
                  RngStream& batch_rng, RngStream& mask_rng,
                  std::vector<NStepTransition>& scratch, std::vector<BootstrapMask>& masks) {
  const std::size_t n = ag.buffer.size();
  scratch.clear();
  masks.clear();
  for (int b = 0; b < cfg.batch_size; ++b) {
    scratch.push_back(ag.buffer.at(batch_rng.uniform_below(n)));
  }
  for (int b = 0; b < cfg.batch_size; ++b) {
    masks.push_back(cfg.plain_poisson_mask
                        ? sample_mask_poisson(vs.k, vs.mask_rate, mask_rng)
                        : sample_mask(vs.k, vs.mask_rate, vs.heads_per_update, mask_rng));
  }
  TdUpdateOptions opt;
  opt.gamma = cfg.gamma;
  opt.lr = cfg.lr;
  opt.grad_clip = cfg.grad_clip;
  opt.parallel = cfg.parallel_update;
  return td_update(ag.nets.online, ag.nets.target, scratch, masks, ag.nets.opt, opt);
}

}  // namespace

TrainOutput train(const TrainConfig& cfg, const TrackConfig& track,
                  const TrainHooks* hooks) {
  const VariantSpec vs = make_variant(cfg);
  track.validate();

  RngStream init_rng(derive_seed(cfg.seed, Stream::Init));
  RngStream action_rng(derive_seed(cfg.seed, Stream::Action));
  RngStream perturber_rng(derive_seed(cfg.seed, Stream::PerturberAction));
  RngStream mask_rng(derive_seed(cfg.seed, Stream::Mask));
  RngStream head_rng(derive_seed(cfg.seed, Stream::HeadChoice));
  RngStream batch_rng(derive_seed(cfg.seed, Stream::Batch));

  Agent protagonist(make_ensemble(kObsDim, cfg.trunk_hidden, vs.k, kNumActions, init_rng), cfg,
                    cfg.buffer_capacity);
  std::optional<Agent> adversary;
  if (vs.adversary_trained) {
    // The adversary acts n times per m protagonist steps, so at equal capacity
    // its ring would span m/n times more wall-clock history and it would keep
    // optimizing against long-gone opponent behavior. Scale it to the same
    // step horizon as the protagonist's buffer.
    const std::size_t adv_capacity =
        std::max(static_cast<std::size_t>(cfg.batch_size),
                 cfg.buffer_capacity * static_cast<std::size_t>(cfg.schedule.n) /
                     static_cast<std::size_t>(cfg.schedule.m));
    adversary.emplace(make_ensemble(kObsDim, cfg.trunk_hidden, vs.k, kNumActions, init_rng), cfg,
                      adv_capacity);
  }

  if (vs.k > 1) protagonist.head = static_cast<int>(head_rng.uniform_below(vs.k));
  if (adversary && vs.k > 1) adversary->head = static_cast<int>(head_rng.uniform_below(vs.k));

  SpeedwayEnv env(track, derive_seed(cfg.seed, Stream::EnvJitter));
  Observation obs = env.observation();

  MetricsLog metrics;
  long episode = 0;
  int episode_catastrophes = 0;
  std::vector<NStepTransition> batch_scratch;
  std::vector<BootstrapMask> mask_scratch;

  auto close_window = [&](Agent& ag) {
    ag.buffer.push(build_window(ag.window, ag.window.front().role, cfg.gamma));
    ag.window.clear();
    ag.window_open = false;
  };

  auto emit_checkpoint = [&](long step_count) {
    if (!hooks || !hooks->on_checkpoint) return;
    TrainView view;
    view.step = step_count;
    view.protagonist = {&protagonist.nets.online, &protagonist.nets.target, &protagonist.nets.opt};
    AgentView adv_view;
    if (adversary) {
      adv_view = {&adversary->nets.online, &adversary->nets.target, &adversary->nets.opt};
      view.adversary = &adv_view;
    }
    hooks->on_checkpoint(view);
  };

  for (long t = 0; t < cfg.total_steps; ++t) {
    const AgentRole g = vs.use_schedule ? active_agent(t, cfg.schedule) : AgentRole::Protagonist;
    const double eps = epsilon_at(t, cfg.eps_start, cfg.eps_end, cfg.eps_decay_from, cfg.eps_decay_to);

    ActionChoice choice;
    if (g == AgentRole::Protagonist) {
      choice = select_action(protagonist.nets.online, obs, AgentRole::Protagonist,
                             protagonist.head, vs.risk, eps, action_rng);
    } else if (vs.perturber == PerturberKind::Random) {
      choice.action = static_cast<int>(perturber_rng.uniform_below(kNumActions));
      choice.selected_variance = std::numeric_limits<double>::quiet_NaN();
      choice.explored = true;
    } else {
      choice = select_action(adversary->nets.online, obs, AgentRole::Adversary,
                             adversary->head, vs.risk, eps, perturber_rng);
    }

    const SpeedwayEnv::StepResult res = env.step(choice.action);
    episode_catastrophes += res.reward.C;

    Transition tr;
    tr.obs = obs;
    tr.action = choice.action;
    tr.reward = res.reward.total;
    tr.next_obs = res.obs;
    tr.done = res.done;
    tr.role = g;
    tr.t = t;

    if (g == AgentRole::Protagonist) {
      protagonist.window.push_back(tr);
      protagonist.window_open = true;
      if (adversary && adversary->window_open) adversary->window.push_back(tr);
    } else {
      if (protagonist.window_open) protagonist.window.push_back(tr);
      if (adversary) {
        adversary->window.push_back(tr);
        adversary->window_open = true;
      }
    }

    if (res.done) {
      if (protagonist.window_open) close_window(protagonist);
      if (adversary && adversary->window_open) close_window(*adversary);
    } else {
      const AgentRole next =
          vs.use_schedule ? active_agent(t + 1, cfg.schedule) : AgentRole::Protagonist;
      if (protagonist.window_open && next == AgentRole::Protagonist) close_window(protagonist);
      if (adversary && adversary->window_open && next == AgentRole::Adversary) {
        close_window(*adversary);
      }
    }

    bool has_loss_p = false, has_loss_a = false;
    double loss_p = 0.0, loss_a = 0.0;
    if (t % cfg.train_freq == 0) {
      if (protagonist.buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
        loss_p = run_update(protagonist, cfg, vs, batch_rng, mask_rng, batch_scratch, mask_scratch);
        has_loss_p = true;
        if (hooks && hooks->after_protagonist_update) {
          hooks->after_protagonist_update(t, protagonist.nets.online);
        }
      }
      if (adversary && adversary->buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
        loss_a = run_update(*adversary, cfg, vs, batch_rng, mask_rng, batch_scratch, mask_scratch);
        has_loss_a = true;
      }
    }

    if (t > 0 && t % cfg.target_update_freq == 0) {
      sync_target(protagonist.nets.online, protagonist.nets.target);
      if (adversary) sync_target(adversary->nets.online, adversary->nets.target);
    }

    MetricsRow row;
    row.t = t;
    row.episode = episode;
    row.role = g;
    row.eps = eps;
    row.reward_total = res.reward.total;
    row.reward_progress_total = res.reward.progress_total;
    row.reward_progress_pure = res.reward.progress_pure;
    row.catastrophes_this_episode = episode_catastrophes;
    row.has_loss_p = has_loss_p;
    row.loss_p = loss_p;
    row.has_loss_a = has_loss_a;
    row.loss_a = loss_a;
    row.has_variance = !choice.explored;
    row.variance_selected = choice.explored ? 0.0 : choice.selected_variance;
    metrics.add(row);

    if (cfg.checkpoint_interval > 0 && (t + 1) % cfg.checkpoint_interval == 0) {
      emit_checkpoint(t + 1);
    }

    if (res.done) {
      episode += 1;
      episode_catastrophes = 0;
      if (vs.k > 1) protagonist.head = static_cast<int>(head_rng.uniform_below(vs.k));
      if (adversary && vs.k > 1) adversary->head = static_cast<int>(head_rng.uniform_below(vs.k));
      obs = env.reset();
    } else {
      obs = res.obs;
    }
  }

  if (cfg.total_steps > 0 &&
      (cfg.checkpoint_interval <= 0 || cfg.total_steps % cfg.checkpoint_interval != 0)) {
    emit_checkpoint(cfg.total_steps);
  }

  TrainOutput out;
  out.protagonist = std::move(protagonist.nets);
  if (adversary) out.adversary = std::move(adversary->nets);
  out.metrics = std::move(metrics);
  out.steps = cfg.total_steps;
  out.episodes = episode;
  return out;
}

}  // namespace rararl
