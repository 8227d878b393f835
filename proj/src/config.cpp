#include "rararl/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "rararl/metrics.hpp"

namespace rararl {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Parser {
  const std::string& source;
  std::vector<std::string> errors;

  void fail(int line, const std::string& msg) {
    errors.push_back(source + ":" + std::to_string(line) + ": " + msg);
  }

  bool parse_long(const std::string& v, long& out) {
    const char* b = v.data();
    const char* e = b + v.size();
    auto res = std::from_chars(b, e, out);
    return res.ec == std::errc() && res.ptr == e;
  }

  bool parse_u64(const std::string& v, std::uint64_t& out) {
    const char* b = v.data();
    const char* e = b + v.size();
    auto res = std::from_chars(b, e, out);
    return res.ec == std::errc() && res.ptr == e;
  }

  bool parse_double(const std::string& v, double& out) {
    const char* b = v.data();
    const char* e = b + v.size();
    auto res = std::from_chars(b, e, out);
    return res.ec == std::errc() && res.ptr == e;
  }

  bool parse_bool(const std::string& v, bool& out) {
    if (v == "true") {
      out = true;
      return true;
    }
    if (v == "false") {
      out = false;
      return true;
    }
    return false;
  }

  bool parse_int_list(const std::string& v, std::vector<int>& out) {
    out.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      long x;
      if (!parse_long(item, x)) return false;
      out.push_back(static_cast<int>(x));
    }
    return !out.empty();
  }

  bool parse_double_list(const std::string& v, std::vector<double>& out) {
    out.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      double x;
      if (!parse_double(item, x)) return false;
      out.push_back(x);
    }
    return !out.empty();
  }
};

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source_name) {
  RunConfig cfg;
  Parser p{source_name, {}};

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        p.fail(line_no, "malformed section header '" + line + "'");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section != "run" && section != "train" && section != "track" && section != "eval") {
        p.fail(line_no, "unknown section [" + section + "]");
        section.clear();
      }
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      p.fail(line_no, "expected key = value, got '" + line + "'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      p.fail(line_no, "empty key or value");
      continue;
    }
    if (section.empty()) {
      p.fail(line_no, "key '" + key + "' outside any [section]");
      continue;
    }

    auto bad_value = [&](const char* type) {
      p.fail(line_no, "key '" + section + "." + key + "' needs a " + type + " value, got '" +
                          value + "'");
    };

    bool handled = true;
    if (section == "run") {
      if (key == "seed") {
        std::uint64_t s;
        if (p.parse_u64(value, s)) {
          cfg.seed = s;
          cfg.seed_set = true;
        } else {
          bad_value("nonnegative integer");
        }
      } else if (key == "out_dir") {
        cfg.out_dir = value;
      } else {
        handled = false;
      }
    } else if (section == "train") {
      TrainConfig& t = cfg.train;
      long l;
      double d;
      bool b;
      if (key == "variant") {
        try {
          t.variant = parse_variant(value);
        } catch (const std::invalid_argument& e) {
          p.fail(line_no, e.what());
        }
      } else if (key == "total_steps" && p.parse_long(value, l)) {
        t.total_steps = l;
      } else if (key == "train_freq" && p.parse_long(value, l)) {
        t.train_freq = static_cast<int>(l);
      } else if (key == "target_update_freq" && p.parse_long(value, l)) {
        t.target_update_freq = l;
      } else if (key == "batch_size" && p.parse_long(value, l)) {
        t.batch_size = static_cast<int>(l);
      } else if (key == "gamma" && p.parse_double(value, d)) {
        t.gamma = d;
      } else if (key == "lr" && p.parse_double(value, d)) {
        t.lr = d;
      } else if (key == "adam_beta1" && p.parse_double(value, d)) {
        t.adam_beta1 = d;
      } else if (key == "adam_beta2" && p.parse_double(value, d)) {
        t.adam_beta2 = d;
      } else if (key == "adam_epsilon" && p.parse_double(value, d)) {
        t.adam_epsilon = d;
      } else if (key == "grad_clip" && p.parse_double(value, d)) {
        t.grad_clip = d;
      } else if (key == "buffer_capacity" && p.parse_long(value, l) && l > 0) {
        t.buffer_capacity = static_cast<std::size_t>(l);
      } else if (key == "eps_start" && p.parse_double(value, d)) {
        t.eps_start = d;
      } else if (key == "eps_end" && p.parse_double(value, d)) {
        t.eps_end = d;
      } else if (key == "eps_decay_from" && p.parse_long(value, l)) {
        t.eps_decay_from = l;
      } else if (key == "eps_decay_to" && p.parse_long(value, l)) {
        t.eps_decay_to = l;
      } else if (key == "xi" && p.parse_long(value, l)) {
        t.schedule.xi = l;
      } else if (key == "m" && p.parse_long(value, l)) {
        t.schedule.m = static_cast<int>(l);
      } else if (key == "n" && p.parse_long(value, l)) {
        t.schedule.n = static_cast<int>(l);
      } else if (key == "k" && value == "auto") {
        t.k.reset();  // canonical form round-trips: the variant picks
      } else if (key == "k" && p.parse_long(value, l)) {
        t.k = static_cast<int>(l);
      } else if (key == "lambda_p" && value == "auto") {
        t.lambda_p.reset();
      } else if (key == "lambda_p" && p.parse_double(value, d)) {
        t.lambda_p = d;
      } else if (key == "lambda_a" && value == "auto") {
        t.lambda_a.reset();
      } else if (key == "lambda_a" && p.parse_double(value, d)) {
        t.lambda_a = d;
      } else if (key == "mask_rate" && p.parse_double(value, d)) {
        t.mask_rate = d;
      } else if (key == "heads_per_update" && p.parse_long(value, l)) {
        t.heads_per_update = static_cast<int>(l);
      } else if (key == "plain_poisson_mask" && p.parse_bool(value, b)) {
        t.plain_poisson_mask = b;
      } else if (key == "trunk_hidden") {
        std::vector<int> dims;
        if (p.parse_int_list(value, dims)) {
          t.trunk_hidden = dims;
        } else {
          bad_value("comma-separated integer list");
        }
      } else if (key == "checkpoint_interval" && p.parse_long(value, l)) {
        t.checkpoint_interval = l;
      } else if (key == "parallel_update" && p.parse_bool(value, b)) {
        t.parallel_update = b;
      } else if (key == "total_steps" || key == "train_freq" || key == "target_update_freq" ||
                 key == "batch_size" || key == "eps_decay_from" || key == "eps_decay_to" ||
                 key == "xi" || key == "m" || key == "n" || key == "k" ||
                 key == "heads_per_update" || key == "checkpoint_interval" ||
                 key == "buffer_capacity") {
        bad_value("integer");
      } else if (key == "gamma" || key == "lr" || key == "adam_beta1" || key == "adam_beta2" ||
                 key == "adam_epsilon" || key == "grad_clip" || key == "eps_start" ||
                 key == "eps_end" || key == "lambda_p" || key == "lambda_a" ||
                 key == "mask_rate") {
        bad_value("real number");
      } else if (key == "plain_poisson_mask" || key == "parallel_update") {
        bad_value("boolean (true/false)");
      } else {
        handled = false;
      }
    } else if (section == "track") {
      TrackConfig& tr = cfg.track;
      long l;
      double d;
      if (key == "shape") {
        tr.shape = value;
      } else if (key == "straight_length" && p.parse_double(value, d)) {
        tr.straight_length = d;
      } else if (key == "arc_radius" && p.parse_double(value, d)) {
        tr.arc_radius = d;
      } else if (key == "width" && p.parse_double(value, d)) {
        tr.width = d;
      } else if (key == "beta" && p.parse_double(value, d)) {
        tr.beta = d;
      } else if (key == "r_cat" && p.parse_double(value, d)) {
        tr.r_cat = d;
      } else if (key == "dt" && p.parse_double(value, d)) {
        tr.dt = d;
      } else if (key == "accel" && p.parse_double(value, d)) {
        tr.accel = d;
      } else if (key == "steer" && p.parse_double(value, d)) {
        tr.steer = d;
      } else if (key == "v_max" && p.parse_double(value, d)) {
        tr.v_max = d;
      } else if (key == "stuck_speed_fraction" && p.parse_double(value, d)) {
        tr.stuck_speed_fraction = d;
      } else if (key == "stuck_patience" && p.parse_long(value, l)) {
        tr.stuck_patience = static_cast<int>(l);
      } else if (key == "stuck_warmup_steps" && p.parse_long(value, l)) {
        tr.stuck_warmup_steps = static_cast<int>(l);
      } else if (key == "damage_margin" && p.parse_double(value, d)) {
        tr.damage_margin = d;
      } else if (key == "max_episode_steps" && p.parse_long(value, l)) {
        tr.max_episode_steps = static_cast<int>(l);
      } else if (key == "reset_jitter" && p.parse_double(value, d)) {
        tr.reset_jitter = d;
      } else if (key == "lookahead") {
        std::vector<double> xs;
        if (p.parse_double_list(value, xs) && xs.size() == 3) {
          tr.lookahead = {xs[0], xs[1], xs[2]};
        } else {
          bad_value("comma-separated list of 3 reals");
        }
      } else if (key == "stuck_patience" || key == "stuck_warmup_steps" ||
                 key == "max_episode_steps") {
        bad_value("integer");
      } else if (key == "straight_length" || key == "arc_radius" || key == "width" ||
                 key == "beta" || key == "r_cat" || key == "dt" || key == "accel" ||
                 key == "steer" || key == "v_max" || key == "stuck_speed_fraction" ||
                 key == "damage_margin" || key == "reset_jitter") {
        bad_value("real number");
      } else {
        handled = false;
      }
    } else if (section == "eval") {
      EvalConfig& e = cfg.eval;
      long l;
      bool b;
      if (key == "regime") {
        try {
          e.regime = parse_regime(value);
        } catch (const std::invalid_argument& ex) {
          p.fail(line_no, ex.what());
        }
      } else if (key == "episodes" && p.parse_long(value, l)) {
        e.episodes = static_cast<int>(l);
      } else if (key == "m" && p.parse_long(value, l)) {
        e.m = static_cast<int>(l);
      } else if (key == "n" && p.parse_long(value, l)) {
        e.n = static_cast<int>(l);
      } else if (key == "parallel" && p.parse_bool(value, b)) {
        e.parallel = b;
      } else if (key == "episodes" || key == "m" || key == "n") {
        bad_value("integer");
      } else if (key == "parallel") {
        bad_value("boolean (true/false)");
      } else {
        handled = false;
      }
    }
    if (!handled) {
      p.fail(line_no, "unknown key '" + key + "' in section [" + section + "]");
    }
  }

  if (!p.errors.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < p.errors.size(); ++i) {
      if (i) joined += "\n";
      joined += p.errors[i];
    }
    throw ConfigError(joined);
  }

  cfg.train.seed = cfg.seed;
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string canonical_config(const RunConfig& cfg) {
  std::ostringstream os;
  const TrainConfig& t = cfg.train;
  const TrackConfig& tr = cfg.track;
  const EvalConfig& e = cfg.eval;
  os << "eval.episodes=" << e.episodes << "\n";
  os << "eval.m=" << e.m << "\n";
  os << "eval.n=" << e.n << "\n";
  os << "eval.regime=" << regime_name(e.regime) << "\n";
  os << "run.seed=" << cfg.seed << "\n";
  os << "track.accel=" << format_double(tr.accel) << "\n";
  os << "track.arc_radius=" << format_double(tr.arc_radius) << "\n";
  os << "track.beta=" << format_double(tr.beta) << "\n";
  os << "track.damage_margin=" << format_double(tr.damage_margin) << "\n";
  os << "track.dt=" << format_double(tr.dt) << "\n";
  os << "track.lookahead=" << format_double(tr.lookahead[0]) << ","
     << format_double(tr.lookahead[1]) << "," << format_double(tr.lookahead[2]) << "\n";
  os << "track.max_episode_steps=" << tr.max_episode_steps << "\n";
  os << "track.r_cat=" << format_double(tr.r_cat) << "\n";
  os << "track.reset_jitter=" << format_double(tr.reset_jitter) << "\n";
  os << "track.shape=" << tr.shape << "\n";
  os << "track.steer=" << format_double(tr.steer) << "\n";
  os << "track.straight_length=" << format_double(tr.straight_length) << "\n";
  os << "track.stuck_patience=" << tr.stuck_patience << "\n";
  os << "track.stuck_speed_fraction=" << format_double(tr.stuck_speed_fraction) << "\n";
  os << "track.stuck_warmup_steps=" << tr.stuck_warmup_steps << "\n";
  os << "track.v_max=" << format_double(tr.v_max) << "\n";
  os << "track.width=" << format_double(tr.width) << "\n";
  os << "train.adam_beta1=" << format_double(t.adam_beta1) << "\n";
  os << "train.adam_beta2=" << format_double(t.adam_beta2) << "\n";
  os << "train.adam_epsilon=" << format_double(t.adam_epsilon) << "\n";
  os << "train.batch_size=" << t.batch_size << "\n";
  os << "train.buffer_capacity=" << t.buffer_capacity << "\n";
  os << "train.checkpoint_interval=" << t.checkpoint_interval << "\n";
  os << "train.eps_decay_from=" << t.eps_decay_from << "\n";
  os << "train.eps_decay_to=" << t.eps_decay_to << "\n";
  os << "train.eps_end=" << format_double(t.eps_end) << "\n";
  os << "train.eps_start=" << format_double(t.eps_start) << "\n";
  os << "train.gamma=" << format_double(t.gamma) << "\n";
  os << "train.grad_clip=" << format_double(t.grad_clip) << "\n";
  os << "train.heads_per_update=" << t.heads_per_update << "\n";
  os << "train.k=" << (t.k ? std::to_string(*t.k) : "auto") << "\n";
  os << "train.lambda_a=" << (t.lambda_a ? format_double(*t.lambda_a) : "auto") << "\n";
  os << "train.lambda_p=" << (t.lambda_p ? format_double(*t.lambda_p) : "auto") << "\n";
  os << "train.lr=" << format_double(t.lr) << "\n";
  os << "train.m=" << t.schedule.m << "\n";
  os << "train.mask_rate=" << format_double(t.mask_rate) << "\n";
  os << "train.n=" << t.schedule.n << "\n";
  os << "train.plain_poisson_mask=" << (t.plain_poisson_mask ? "true" : "false") << "\n";
  os << "train.target_update_freq=" << t.target_update_freq << "\n";
  os << "train.total_steps=" << t.total_steps << "\n";
  os << "train.train_freq=" << t.train_freq << "\n";
  os << "train.trunk_hidden=";
  for (std::size_t i = 0; i < t.trunk_hidden.size(); ++i) {
    if (i) os << ",";
    os << t.trunk_hidden[i];
  }
  os << "\n";
  os << "train.variant=" << variant_name(t.variant) << "\n";
  os << "train.xi=" << t.schedule.xi << "\n";
  return os.str();
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_digest(const RunConfig& cfg) {
  const std::uint64_t h = fnv1a64(canonical_config(cfg));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace rararl
