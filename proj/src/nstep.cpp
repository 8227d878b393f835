#include "rararl/nstep.hpp"

#include <stdexcept>

namespace rararl {

NStepTransition build_window(std::span<const Transition> window, AgentRole role,
                             double gamma) {
  if (window.empty()) throw std::invalid_argument("build_window: empty window");
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("build_window: gamma outside [0, 1]");
  }
  if (window[0].role != role) {
    throw std::invalid_argument("build_window: window must start with the acting role");
  }
  for (std::size_t i = 1; i < window.size(); ++i) {
    if (window[i].role == role) {
      throw std::invalid_argument("build_window: foreign steps only after the owner's step");
    }
    if (window[i - 1].done) {
      throw std::invalid_argument("build_window: transitions after a terminal step");
    }
  }

  const double sign = role == AgentRole::Protagonist ? 1.0 : -1.0;
  NStepTransition out;
  out.obs = window[0].obs;
  out.action = window[0].action;
  out.role = role;
  double disc = 1.0;
  double cum = 0.0;
  for (const Transition& tr : window) {
    cum += sign * tr.reward * disc;
    disc *= gamma;
    out.horizon += 1;
    if (tr.done) {
      out.done_within_window = true;
      break;
    }
  }
  out.cumulative_reward = cum;
  if (!out.done_within_window) out.bootstrap_obs = window.back().next_obs;
  return out;
}

double nstep_bootstrap(const EnsembleQNetwork& target_net, const Observation& obs,
                       const BootstrapMask* mask) {
  if (mask && static_cast<int>(mask->counts.size()) != target_net.head_count()) {
    throw std::invalid_argument("nstep_bootstrap: mask size does not match head count");
  }
  const QMatrix q = q_all_heads(target_net, obs);
  double sum = 0.0;
  int active = 0;
  for (int i = 0; i < q.k; ++i) {
    if (mask && mask->counts[i] == 0) continue;
    double best = q.at(i, 0);
    for (int a = 1; a < q.num_actions; ++a) {
      if (q.at(i, a) > best) best = q.at(i, a);
    }
    sum += best;
    active += 1;
  }
  if (active == 0) return nstep_bootstrap(target_net, obs, nullptr);
  return sum / static_cast<double>(active);
}

double nstep_target(const NStepTransition& nst, const EnsembleQNetwork& target_net,
                    double gamma, const BootstrapMask* mask) {
  if (nst.done_within_window) return nst.cumulative_reward;
  double disc = 1.0;
  for (int i = 0; i < nst.horizon; ++i) disc *= gamma;
  return nst.cumulative_reward + disc * nstep_bootstrap(target_net, nst.bootstrap_obs, mask);
}

TargetedNStep build_nstep_target(std::span<const Transition> window, AgentRole role,
                                 double gamma, const EnsembleQNetwork& target_net,
                                 const BootstrapMask* mask) {
  TargetedNStep out;
  out.nst = build_window(window, role, gamma);
  out.target = nstep_target(out.nst, target_net, gamma, mask);
  return out;
}

}  // namespace rararl
