#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "rararl/rng.hpp"

namespace rararl {

inline constexpr int kFrameFeatures = 9;
inline constexpr int kFrameStack = 4;
inline constexpr int kObsDim = kFrameFeatures * kFrameStack;
inline constexpr int kNumActions = 9;

// Track centerline parametrized by arc length. "oval" is two straights joined
// by two half-circle arcs; "circle" is constant curvature; "straight" never
// curves and never wraps in curvature.
struct TrackConfig {
  std::string shape = "oval";
  double straight_length = 60.0;
  double arc_radius = 20.0;
  double width = 8.0;

  double beta = 0.025;
  double r_cat = -2.5;

  double dt = 0.1;
  double accel = 0.4;   // speed change per accelerate/decelerate step
  double steer = 0.08;  // heading change per steer step, radians
  double v_max = 8.0;

  double stuck_speed_fraction = 0.05;  // of v_max
  int stuck_patience = 20;
  int stuck_warmup_steps = 10;
  double damage_margin = 0.5;
  int max_episode_steps = 400;
  double reset_jitter = 5.0;  // uniform start offset along the track
  std::array<double, 3> lookahead = {5.0, 15.0, 30.0};

  double track_length() const;
  double curvature_at(double s) const;
  double stuck_speed_threshold() const { return stuck_speed_fraction * v_max; }
  void validate() const;
};

// Pose relative to the centerline: s_pos along the track, p lateral offset
// (positive = left), heading_err relative to the track direction.
struct TrackState {
  double s_pos = 0.0;
  double p = 0.0;
  double heading_err = 0.0;
  double v = 0.0;
  int stuck_counter = 0;
  bool stuck = false;
  bool damaged = false;
  int step_count = 0;
  bool done = false;
};

struct RewardBreakdown {
  double total = 0.0;
  double progress_total = 0.0;  // velocity shaping including the lane penalty
  double progress_pure = 0.0;   // velocity shaping without the lane penalty
  double catastrophe = 0.0;     // r_cat * C
  int C = 0;
};

struct Flags {
  bool stuck = false;
  bool damaged = false;
};

// Actions combine steering (index % 3: left, none, right) with throttle
// (index / 3: accelerate, none, decelerate). Index 4 is do-nothing.
struct ActionDecode {
  int steer_dir = 0;     // +1 left, -1 right
  int throttle_dir = 0;  // +1 accelerate, -1 decelerate
};

ActionDecode decode_action(int action);

double wrap_angle(double a);  // to (-pi, pi]

Flags detect_flags(const TrackState& st, const TrackConfig& cfg);

// Reward of the state reached after a step. Catastrophes gate the shaping
// term to zero and contribute r_cat once, no matter how many flags fired.
RewardBreakdown reward(const TrackState& st, const TrackConfig& cfg);

using Frame = std::array<double, kFrameFeatures>;
using Observation = std::array<double, kObsDim>;

Frame make_frame(const TrackState& st, const TrackConfig& cfg);

class SpeedwayEnv {
 public:
  SpeedwayEnv(const TrackConfig& cfg, std::uint64_t seed);

  Observation reset();

  struct StepResult {
    Observation obs;
    RewardBreakdown reward;
    bool done = false;
  };

  // Throws when called on a finished episode.
  StepResult step(int action);

  const TrackState& state() const { return state_; }
  const TrackConfig& config() const { return cfg_; }
  Observation observation() const;

 private:
  TrackConfig cfg_;
  TrackState state_;
  std::array<Frame, kFrameStack> frames_;
  RngStream rng_;
  bool started_ = false;
};

}  // namespace rararl
