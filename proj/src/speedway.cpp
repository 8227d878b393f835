#include "rararl/speedway.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rararl {

namespace {
constexpr double kPi = std::numbers::pi;
}

double TrackConfig::track_length() const {
  if (shape == "oval") return 2.0 * straight_length + 2.0 * kPi * arc_radius;
  if (shape == "circle") return 2.0 * kPi * arc_radius;
  if (shape == "straight") return straight_length;
  throw std::invalid_argument("unknown track shape: " + shape);
}

double TrackConfig::curvature_at(double s) const {
  if (shape == "circle") return 1.0 / arc_radius;
  if (shape == "straight") return 0.0;
  if (shape != "oval") throw std::invalid_argument("unknown track shape: " + shape);
  const double len = track_length();
  double u = std::fmod(s, len);
  if (u < 0.0) u += len;
  const double arc = kPi * arc_radius;
  if (u < straight_length) return 0.0;
  if (u < straight_length + arc) return 1.0 / arc_radius;
  if (u < 2.0 * straight_length + arc) return 0.0;
  return 1.0 / arc_radius;
}

void TrackConfig::validate() const {
  if (shape != "oval" && shape != "circle" && shape != "straight") {
    throw std::invalid_argument("unknown track shape: " + shape);
  }
  if (!(width > 0.0)) throw std::invalid_argument("track width must be positive");
  if (!(arc_radius > 0.0)) throw std::invalid_argument("arc radius must be positive");
  if (!(straight_length >= 0.0)) throw std::invalid_argument("straight length must be >= 0");
  if (!(track_length() > 0.0)) throw std::invalid_argument("track length must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(r_cat < 0.0)) throw std::invalid_argument("r_cat must be negative");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(accel >= 0.0)) throw std::invalid_argument("accel must be >= 0");
  if (!(steer >= 0.0)) throw std::invalid_argument("steer must be >= 0");
  if (!(v_max > 0.0)) throw std::invalid_argument("v_max must be positive");
  if (!(stuck_speed_fraction >= 0.0 && stuck_speed_fraction < 1.0)) {
    throw std::invalid_argument("stuck speed fraction must be in [0, 1)");
  }
  if (stuck_patience < 1) throw std::invalid_argument("stuck patience must be >= 1");
  if (stuck_warmup_steps < 0) throw std::invalid_argument("stuck warmup must be >= 0");
  if (!(damage_margin >= 0.0)) throw std::invalid_argument("damage margin must be >= 0");
  if (max_episode_steps < 1) throw std::invalid_argument("max episode steps must be >= 1");
  if (!(reset_jitter >= 0.0)) throw std::invalid_argument("reset jitter must be >= 0");
  // catastrophes must dominate any single shaping reward
  if (!(beta * v_max * 2.0 < -r_cat)) {
    throw std::invalid_argument("beta * v_max too large relative to |r_cat|");
  }
}

ActionDecode decode_action(int action) {
  if (action < 0 || action >= kNumActions) {
    throw std::invalid_argument("action index " + std::to_string(action) + " outside [0, 9)");
  }
  ActionDecode d;
  const int s = action % 3;
  const int t = action / 3;
  d.steer_dir = s == 0 ? 1 : (s == 1 ? 0 : -1);
  d.throttle_dir = t == 0 ? 1 : (t == 1 ? 0 : -1);
  return d;
}

double wrap_angle(double a) {
  double w = std::fmod(a + kPi, 2.0 * kPi);
  if (w <= 0.0) w += 2.0 * kPi;
  return w - kPi;
}

Flags detect_flags(const TrackState& st, const TrackConfig& cfg) {
  Flags f;
  f.damaged = std::fabs(st.p) > cfg.width / 2.0 + cfg.damage_margin;
  f.stuck = st.stuck_counter >= cfg.stuck_patience;
  return f;
}

RewardBreakdown reward(const TrackState& st, const TrackConfig& cfg) {
  RewardBreakdown r;
  r.C = (st.stuck || st.damaged) ? 1 : 0;
  const double gate = r.C ? 0.0 : 1.0;
  const double heading = std::cos(st.heading_err) - std::fabs(std::sin(st.heading_err));
  const double lane = 2.0 * std::fabs(st.p) / cfg.width;
  r.progress_pure = cfg.beta * st.v * heading * gate;
  r.progress_total = cfg.beta * st.v * (heading - lane) * gate;
  r.catastrophe = cfg.r_cat * r.C;
  r.total = r.progress_total + r.catastrophe;
  return r;
}

Frame make_frame(const TrackState& st, const TrackConfig& cfg) {
  Frame f;
  f[0] = st.v / cfg.v_max;
  f[1] = std::sin(st.heading_err);
  f[2] = std::cos(st.heading_err);
  f[3] = 2.0 * st.p / cfg.width;
  f[4] = (cfg.width / 2.0 - st.p) / cfg.width;  // distance to the left edge
  f[5] = (cfg.width / 2.0 + st.p) / cfg.width;  // distance to the right edge
  for (int i = 0; i < 3; ++i) {
    f[6 + i] = cfg.curvature_at(st.s_pos + cfg.lookahead[i]);
  }
  return f;
}

SpeedwayEnv::SpeedwayEnv(const TrackConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), rng_(seed) {
  cfg_.validate();
  reset();
}

Observation SpeedwayEnv::reset() {
  state_ = TrackState{};
  if (cfg_.reset_jitter > 0.0) {
    state_.s_pos = rng_.uniform01() * cfg_.reset_jitter;
  }
  frames_.fill(make_frame(state_, cfg_));
  started_ = true;
  return observation();
}

Observation SpeedwayEnv::observation() const {
  Observation obs;
  for (int i = 0; i < kFrameStack; ++i) {
    for (int j = 0; j < kFrameFeatures; ++j) obs[i * kFrameFeatures + j] = frames_[i][j];
  }
  return obs;
}

SpeedwayEnv::StepResult SpeedwayEnv::step(int action) {
  if (!started_ || state_.done) {
    throw std::logic_error("step called on a finished episode; call reset first");
  }
  const ActionDecode act = decode_action(action);

  // advance with the current speed and heading, then apply the controls
  const double ds = state_.v * std::cos(state_.heading_err) * cfg_.dt;
  state_.p += state_.v * std::sin(state_.heading_err) * cfg_.dt;
  state_.heading_err = wrap_angle(state_.heading_err + act.steer_dir * cfg_.steer -
                                  cfg_.curvature_at(state_.s_pos) * ds);
  const double len = cfg_.track_length();
  state_.s_pos = std::fmod(state_.s_pos + ds, len);
  if (state_.s_pos < 0.0) state_.s_pos += len;
  state_.v += act.throttle_dir * cfg_.accel;
  if (state_.v < 0.0) state_.v = 0.0;
  if (state_.v > cfg_.v_max) state_.v = cfg_.v_max;
  state_.step_count += 1;

  if (state_.step_count > cfg_.stuck_warmup_steps && state_.v < cfg_.stuck_speed_threshold()) {
    state_.stuck_counter += 1;
  } else {
    state_.stuck_counter = 0;
  }
  const Flags f = detect_flags(state_, cfg_);
  state_.stuck = f.stuck;
  state_.damaged = f.damaged;

  const RewardBreakdown r = reward(state_, cfg_);
  state_.done = r.C == 1 || state_.step_count >= cfg_.max_episode_steps;

  for (int i = 0; i + 1 < kFrameStack; ++i) frames_[i] = frames_[i + 1];
  frames_[kFrameStack - 1] = make_frame(state_, cfg_);

  StepResult out;
  out.obs = observation();
  out.reward = r;
  out.done = state_.done;
  return out;
}

}  // namespace rararl
