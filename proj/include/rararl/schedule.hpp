#pragma once

#include <stdexcept>

#include "rararl/ensemble.hpp"

namespace rararl {

// Alternating control: protagonist-only warmup of xi steps, then repeating
// cycles of m protagonist steps followed by n perturber steps.
struct ScheduleXi {
  long xi = 55000;
  int m = 10;
  int n = 1;

  void validate() const {
    if (xi < 0) throw std::invalid_argument("schedule: xi must be >= 0");
    if (m < 1) throw std::invalid_argument("schedule: m must be >= 1");
    if (n < 0) throw std::invalid_argument("schedule: n must be >= 0");
  }
};

inline AgentRole active_agent(long t, const ScheduleXi& s) {
  if (t < 0) throw std::invalid_argument("active_agent: t must be >= 0");
  if (t < s.xi || s.n == 0) return AgentRole::Protagonist;
  const long phase = (t - s.xi) % (s.m + s.n);
  return phase < s.m ? AgentRole::Protagonist : AgentRole::Adversary;
}

// Linear decay from eps_start at t0 to eps_end at t1, clamped outside.
inline double epsilon_at(long t, double eps_start, double eps_end, long t0, long t1) {
  if (t1 <= t0) throw std::invalid_argument("epsilon_at: decay window must have t1 > t0");
  if (t <= t0) return eps_start;
  if (t >= t1) return eps_end;
  const double frac = static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
  return eps_start + frac * (eps_end - eps_start);
}

}  // namespace rararl
