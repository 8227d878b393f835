#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rararl/ensemble.hpp"
#include "rararl/speedway.hpp"

namespace rararl {

// State value under a greedy readout: max over actions of the mean head value.
using ValueFn = std::function<double(const Observation&)>;

ValueFn greedy_value_fn(const EnsembleQNetwork& net);

struct CreditStep {
  int index = 0;
  AgentRole role = AgentRole::Protagonist;
  double value = 0.0;         // V*(s_i)
  double signed_value = 0.0;  // +V* for protagonist steps, -V* for adversary steps
  bool has_td = false;        // absent on the final state
  double td = 0.0;            // signed_value[i+1] - signed_value[i]
};

struct CreditTrace {
  std::vector<CreditStep> steps;
  double td_protagonist = 0.0;  // sum of (1 + I) / 2 * td
  double td_adversary = 0.0;    // sum of (1 - I) / 2 * td
  double delta_signed_value = 0.0;

  std::string to_csv() const;
};

// Splits the value drift of one trajectory between the two agents. I(i) is
// +1 on protagonist steps and -1 on adversary steps, so each TD increment is
// credited entirely to whoever acted. The two shares always telescope back
// to signed_value(last) - signed_value(first).
CreditTrace credit_decompose(std::span<const std::pair<Observation, AgentRole>> trajectory,
                             const ValueFn& value);

}  // namespace rararl
