#pragma once

#include <span>

#include "rararl/ensemble.hpp"
#include "rararl/speedway.hpp"

namespace rararl {

// One environment step as recorded by the trainer. reward is the raw
// (protagonist-sign) environment reward; role is whoever acted.
struct Transition {
  Observation obs{};
  int action = 0;
  double reward = 0.0;
  Observation next_obs{};
  bool done = false;
  AgentRole role = AgentRole::Protagonist;
  long t = 0;
};

// A closed decision window for one agent: its own transition plus every
// intervening foreign step up to its next decision state (or the terminal).
// cumulative_reward is already discounted and carries the owner's sign,
// so for the adversary every term is negated.
struct NStepTransition {
  Observation obs{};
  int action = 0;
  double cumulative_reward = 0.0;
  int horizon = 0;  // steps consumed; bootstrap discount is gamma^horizon
  Observation bootstrap_obs{};
  bool done_within_window = false;
  AgentRole role = AgentRole::Protagonist;
};

// window[0] must belong to `role`; the rest must belong to the other role.
// A terminal transition must be the last entry.
NStepTransition build_window(std::span<const Transition> window, AgentRole role,
                             double gamma);

// Mean over mask-active heads of each head's max action value; falls back to
// the mean over all heads when mask is null or selects nothing.
double nstep_bootstrap(const EnsembleQNetwork& target_net, const Observation& obs,
                       const BootstrapMask* mask);

double nstep_target(const NStepTransition& nst, const EnsembleQNetwork& target_net,
                    double gamma, const BootstrapMask* mask);

struct TargetedNStep {
  NStepTransition nst;
  double target = 0.0;
};

TargetedNStep build_nstep_target(std::span<const Transition> window, AgentRole role,
                                 double gamma, const EnsembleQNetwork& target_net,
                                 const BootstrapMask* mask);

}  // namespace rararl
