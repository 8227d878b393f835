#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rararl/checkpoint.hpp"
#include "rararl/config.hpp"
#include "rararl/credit.hpp"
#include "rararl/eval.hpp"
#include "rararl/metrics.hpp"
#include "rararl/rng.hpp"
#include "rararl/trainer.hpp"

namespace fs = std::filesystem;
using namespace rararl;

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("RARARL_SEED");
  if (!raw || !*raw) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0') {
    throw ConfigError(std::string("RARARL_SEED is not an integer: '") + raw + "'");
  }
  return static_cast<std::uint64_t>(v);
}

// precedence: --seed, then config, then RARARL_SEED, then 0
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& cli_seed, const RunConfig* cfg) {
  if (cli_seed) return *cli_seed;
  if (cfg && cfg->seed_set) return cfg->seed;
  if (auto s = env_seed()) return *s;
  return 0;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string checkpoint_filename(long step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "checkpoint_%08ld.json", step);
  return std::string(buf);
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> cli_seed,
              const std::string& out_override, const std::string& variant_override) {
  RunConfig run = load_config_file(config_path);
  if (!variant_override.empty()) run.train.variant = parse_variant(variant_override);
  if (!out_override.empty()) run.out_dir = out_override;
  run.seed = resolve_seed(cli_seed, &run);
  run.seed_set = true;
  run.train.seed = run.seed;
  run.train.validate();
  run.track.validate();
  const VariantSpec vs = make_variant(run.train);
  const std::string digest = config_digest(run);

  fs::create_directories(run.out_dir);

  TrainHooks hooks;
  int checkpoints_written = 0;
  hooks.on_checkpoint = [&](const TrainView& view) {
    Checkpoint ck;
    ck.variant = variant_name(run.train.variant);
    ck.config_digest = digest;
    ck.step = view.step;
    ck.lambda_p = vs.risk.lambda_p;
    ck.lambda_a = vs.risk.lambda_a;
    ck.protagonist.online = *view.protagonist.online;
    ck.protagonist.target = *view.protagonist.target;
    ck.protagonist.opt = *view.protagonist.opt;
    if (view.adversary) {
      AgentBundle adv;
      adv.online = *view.adversary->online;
      adv.target = *view.adversary->target;
      adv.opt = *view.adversary->opt;
      ck.adversary = std::move(adv);
    }
    save_checkpoint(ck, (fs::path(run.out_dir) / checkpoint_filename(view.step)).string());
    ++checkpoints_written;
  };

  const auto t0 = std::chrono::steady_clock::now();
  TrainOutput out = train(run.train, run.track, &hooks);
  const auto t1 = std::chrono::steady_clock::now();
  const double secs = std::chrono::duration<double>(t1 - t0).count();

  write_text((fs::path(run.out_dir) / "metrics.csv").string(), out.metrics.to_csv());

  std::cout << "trained " << variant_name(run.train.variant) << " seed=" << run.seed
            << " steps=" << out.steps << " episodes=" << out.episodes << " checkpoints="
            << checkpoints_written << " wall=" << std::fixed << secs << "s -> " << run.out_dir
            << "\n";
  return 0;
}

// The adversary network comes from the --adversary checkpoint (which may be
// the same file as --checkpoint for jointly trained variants).
const EnsembleQNetwork* adversary_net(const Checkpoint& ck, const std::string& path) {
  if (!ck.adversary) {
    throw CheckpointError("checkpoint " + path +
                          " has no adversary network; pass one trained with an adv variant");
  }
  return &ck.adversary->online;
}

int cmd_eval(const std::string& ck_path, const std::string& adv_path, const std::string& regime_s,
             int episodes, const std::string& csv_path, std::optional<std::uint64_t> cli_seed,
             const std::string& config_path) {
  RunConfig run;
  if (!config_path.empty()) run = load_config_file(config_path);
  EvalConfig ecfg = run.eval;
  ecfg.regime = parse_regime(regime_s);
  ecfg.episodes = episodes;
  ecfg.seed = resolve_seed(cli_seed, config_path.empty() ? nullptr : &run);

  const Checkpoint ck = load_checkpoint(ck_path);
  std::optional<Checkpoint> adv_ck;
  const EnsembleQNetwork* adv = nullptr;
  RiskConfig adv_risk;
  if (ecfg.regime == Regime::AdversarialPerturb) {
    if (!adv_path.empty()) {
      adv_ck = load_checkpoint(adv_path);
      adv = adversary_net(*adv_ck, adv_path);
      adv_risk.lambda_p = adv_ck->lambda_p;
      adv_risk.lambda_a = adv_ck->lambda_a;
    } else if (ck.adversary) {
      // jointly trained checkpoint: attack with its own adversary
      adv = &ck.adversary->online;
      adv_risk.lambda_p = ck.lambda_p;
      adv_risk.lambda_a = ck.lambda_a;
    } else {
      std::cerr << "error: --regime adversarial needs --adversary (this checkpoint holds no "
                   "adversary network)\n";
      return 2;
    }
  } else if (!adv_path.empty()) {
    std::cerr << "error: --adversary only applies to --regime adversarial\n";
    return 2;
  }

  RiskConfig prot_risk;
  prot_risk.lambda_p = ck.lambda_p;
  prot_risk.lambda_a = ck.lambda_a;
  const EvalReport report = evaluate(ck.protagonist.online, prot_risk, adv, adv_risk, ecfg,
                                     run.track);
  write_text(csv_path, report.to_csv());
  std::cout << "regime=" << regime_name(report.regime) << " episodes=" << episodes
            << " mean_progress_total=" << report.mean_progress_total
            << " mean_catastrophe_reward=" << report.mean_catastrophe_reward << " -> " << csv_path
            << "\n";
  return 0;
}

int cmd_credit(const std::string& ck_path, int episodes, const std::string& csv_path,
               std::optional<std::uint64_t> cli_seed, const std::string& config_path) {
  RunConfig run;
  if (!config_path.empty()) run = load_config_file(config_path);
  const std::uint64_t seed = resolve_seed(cli_seed, config_path.empty() ? nullptr : &run);
  if (episodes < 0) throw std::invalid_argument("--episodes must be >= 0");

  const Checkpoint ck = load_checkpoint(ck_path);
  if (!ck.adversary) {
    std::cerr << "error: checkpoint " << ck_path
              << " lacks the adversary network needed for credit traces\n";
    return 1;
  }
  const EnsembleQNetwork& prot = ck.protagonist.online;
  const EnsembleQNetwork& adv = ck.adversary->online;
  RiskConfig risk;
  risk.lambda_p = ck.lambda_p;
  risk.lambda_a = ck.lambda_a;
  const ValueFn value = greedy_value_fn(ck.protagonist.target);
  const int m = run.eval.m, n = run.eval.n;

  std::ostringstream csv;
  csv << "episode,index,role,value,signed_value,td\n";
  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t ep_seed = derive_seed(seed, static_cast<std::uint64_t>(e));
    SpeedwayEnv env(run.track, derive_seed(ep_seed, static_cast<std::uint64_t>(Stream::EnvJitter)));
    std::vector<std::pair<Observation, AgentRole>> traj;
    long i = 0;
    bool done = false;
    while (!done) {
      const bool perturber = (i % (m + n)) >= m;
      const AgentRole role = perturber ? AgentRole::Adversary : AgentRole::Protagonist;
      const Observation obs = env.observation();
      traj.emplace_back(obs, role);
      const EnsembleQNetwork& net = perturber ? adv : prot;
      const int a = select_action_test(net, obs, role, risk);
      done = env.step(a).done;
      ++i;
    }
    const bool last_perturber = (i % (m + n)) >= m;
    traj.emplace_back(env.observation(),
                      last_perturber ? AgentRole::Adversary : AgentRole::Protagonist);

    const CreditTrace trace = credit_decompose(traj, value);
    for (const CreditStep& st : trace.steps) {
      csv << e << "," << st.index << "," << (st.role == AgentRole::Protagonist ? 'P' : 'A') << ","
          << format_double(st.value) << "," << format_double(st.signed_value) << ",";
      if (st.has_td) csv << format_double(st.td);
      csv << "\n";
    }
    csv << e << ",totals,," << format_double(trace.td_protagonist) << ","
        << format_double(trace.td_adversary) << "," << format_double(trace.delta_signed_value)
        << "\n";
  }
  write_text(csv_path, csv.str());
  std::cout << "credit traces for " << episodes << " episode(s) -> " << csv_path << "\n";
  return 0;
}

struct ModelArg {
  std::string name;
  std::string path;
};

ModelArg parse_model_arg(const std::string& s) {
  const std::size_t eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= s.size()) {
    throw CLI::ValidationError("--model", "expected NAME=CHECKPOINT, got '" + s + "'");
  }
  return {s.substr(0, eq), s.substr(eq + 1)};
}

int cmd_compare(const std::vector<std::string>& model_args, const std::string& regimes_s,
                int episodes, const std::string& csv_path, const std::string& adv_path,
                std::optional<std::uint64_t> cli_seed, const std::string& config_path) {
  RunConfig run;
  if (!config_path.empty()) run = load_config_file(config_path);
  const std::uint64_t seed = resolve_seed(cli_seed, config_path.empty() ? nullptr : &run);

  std::vector<Regime> regimes;
  {
    std::stringstream ss(regimes_s);
    std::string item;
    while (std::getline(ss, item, ',')) regimes.push_back(parse_regime(item));
  }
  if (regimes.empty()) throw std::invalid_argument("--regimes must name at least one regime");

  std::optional<Checkpoint> shared_adv;
  if (!adv_path.empty()) shared_adv = load_checkpoint(adv_path);

  // Repeating a model name folds its checkpoints into one row, keeping the
  // best (largest) mean catastrophe reward per regime.
  std::vector<std::string> names;
  std::map<std::string, std::size_t> row_of;
  std::vector<std::vector<double>> cells;
  for (const std::string& arg : model_args) {
    const ModelArg ma = parse_model_arg(arg);
    const Checkpoint ck = load_checkpoint(ma.path);
    RiskConfig prot_risk;
    prot_risk.lambda_p = ck.lambda_p;
    prot_risk.lambda_a = ck.lambda_a;

    std::vector<double> row;
    for (const Regime r : regimes) {
      EvalConfig ecfg = run.eval;
      ecfg.regime = r;
      ecfg.episodes = episodes;
      ecfg.seed = seed;
      const EnsembleQNetwork* adv = nullptr;
      RiskConfig adv_risk;
      if (r == Regime::AdversarialPerturb) {
        const Checkpoint* src = ck.adversary ? &ck : (shared_adv ? &*shared_adv : nullptr);
        if (!src) {
          std::cerr << "error: model '" << ma.name
                    << "' has no adversary network and no --adversary fallback was given\n";
          return 1;
        }
        adv = &src->adversary->online;
        adv_risk.lambda_p = src->lambda_p;
        adv_risk.lambda_a = src->lambda_a;
      }
      const EvalReport rep =
          evaluate(ck.protagonist.online, prot_risk, adv, adv_risk, ecfg, run.track);
      row.push_back(rep.mean_catastrophe_reward);
    }

    auto it = row_of.find(ma.name);
    if (it == row_of.end()) {
      row_of[ma.name] = names.size();
      names.push_back(ma.name);
      cells.push_back(row);
    } else {
      std::vector<double>& best = cells[it->second];
      for (std::size_t j = 0; j < row.size(); ++j) best[j] = std::max(best[j], row[j]);
    }
  }

  const std::string table = compare_table_csv(names, regimes, cells);
  if (csv_path.empty()) {
    std::cout << table;
  } else {
    write_text(csv_path, table);
    std::cout << "comparison table (" << names.size() << " models x " << regimes.size()
              << " regimes) -> " << csv_path << "\n";
  }
  return 0;
}

struct Series {
  std::vector<double> xs, ys;
};

Series read_series(const std::string& csv_path, const std::string& xcol,
                   const std::string& ycol) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot read " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(csv_path + " is empty");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  long xi = -1, yi = -1;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == xcol) xi = static_cast<long>(i);
    if (cols[i] == ycol) yi = static_cast<long>(i);
  }
  if (xi < 0) throw std::runtime_error("column '" + xcol + "' not in " + csv_path);
  if (yi < 0) throw std::runtime_error("column '" + ycol + "' not in " + csv_path);

  Series s;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    while (fields.size() < cols.size()) fields.push_back("");
    if (fields[xi].empty() || fields[yi].empty()) continue;
    char* ex = nullptr;
    char* ey = nullptr;
    const double x = std::strtod(fields[xi].c_str(), &ex);
    const double y = std::strtod(fields[yi].c_str(), &ey);
    if (ex == fields[xi].c_str() || ey == fields[yi].c_str()) continue;  // non-numeric row
    s.xs.push_back(x);
    s.ys.push_back(y);
  }
  if (s.xs.empty()) throw std::runtime_error("no numeric rows for " + xcol + "/" + ycol);
  return s;
}

int cmd_plot(const std::string& csv_path, const std::string& xcol, const std::string& ycol,
             const std::string& out_path, const std::string& title) {
  const Series s = read_series(csv_path, xcol, ycol);
  double xmin = s.xs[0], xmax = s.xs[0], ymin = s.ys[0], ymax = s.ys[0];
  for (std::size_t i = 1; i < s.xs.size(); ++i) {
    xmin = std::min(xmin, s.xs[i]);
    xmax = std::max(xmax, s.xs[i]);
    ymin = std::min(ymin, s.ys[i]);
    ymax = std::max(ymax, s.ys[i]);
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  const double W = 720, H = 440, L = 70, R = 20, T = 40, B = 50;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << (H - B) << "\" x2=\"" << (W - R) << "\" y2=\""
      << (H - B) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << (H - B)
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    svg << "<text x=\"" << px(fx) << "\" y=\"" << (H - B + 18)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << fx << "</text>\n";
    svg << "<text x=\"" << (L - 8) << "\" y=\"" << (py(fy) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << fy << "</text>\n";
  }
  svg << "<text x=\"" << (W / 2) << "\" y=\"" << (H - 12)
      << "\" font-size=\"13\" text-anchor=\"middle\">" << xcol << "</text>\n";
  svg << "<text x=\"18\" y=\"" << (H / 2) << "\" font-size=\"13\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 18 " << (H / 2) << ")\">" << ycol << "</text>\n";
  svg << "<text x=\"" << (W / 2) << "\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">"
      << (title.empty() ? ycol + " vs " + xcol : title) << "</text>\n";
  svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < s.xs.size(); ++i) {
    if (i) svg << " ";
    svg << px(s.xs[i]) << "," << py(s.ys[i]);
  }
  svg << "\"/>\n</svg>\n";
  write_text(out_path, svg.str());
  std::cout << "plotted " << s.xs.size() << " points -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"risk-averse robust adversarial RL on a toy speedway"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string config_path, out_dir, variant, ck_path, adv_path, regime, csv_path, title;
  std::string xcol = "t", ycol = "reward_total", out_path = "plot.svg";
  std::string regimes = "none,random,adversarial";
  std::vector<std::string> models;
  int episodes = 10;

  CLI::App* train_cmd = app.add_subcommand("train", "train a variant from a config file");
  train_cmd->add_option("--config", config_path, "run config file")->required();
  train_cmd->add_option("--seed", seed, "master seed (overrides config and RARARL_SEED)");
  train_cmd->add_option("--out", out_dir, "output directory (overrides config)");
  train_cmd->add_option("--variant", variant, "variant name (overrides config)");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint under a regime");
  eval_cmd->add_option("--checkpoint", ck_path, "protagonist checkpoint")->required();
  eval_cmd->add_option("--adversary", adv_path, "checkpoint holding the adversary network");
  eval_cmd->add_option("--regime", regime, "none | random | adversarial")->required();
  eval_cmd->add_option("--episodes", episodes, "evaluation episodes")->required();
  eval_cmd->add_option("--csv", csv_path, "output CSV path")->required();
  eval_cmd->add_option("--seed", seed, "evaluation seed");
  eval_cmd->add_option("--config", config_path, "optional config for track/eval settings");

  CLI::App* credit_cmd = app.add_subcommand("credit", "per-episode credit decomposition traces");
  credit_cmd->add_option("--checkpoint", ck_path, "checkpoint with both networks")->required();
  credit_cmd->add_option("--episodes", episodes, "episodes to trace")->required();
  credit_cmd->add_option("--csv", csv_path, "output CSV path")->required();
  credit_cmd->add_option("--seed", seed, "rollout seed");
  credit_cmd->add_option("--config", config_path, "optional config for track/eval settings");

  CLI::App* compare_cmd = app.add_subcommand("compare", "Table-1-style model comparison");
  compare_cmd->add_option("--model", models, "NAME=CHECKPOINT (repeatable; same NAME keeps best)")
      ->required();
  compare_cmd->add_option("--regimes", regimes, "comma-separated regime list");
  compare_cmd->add_option("--episodes", episodes, "episodes per cell");
  compare_cmd->add_option("--csv", csv_path, "output CSV path (stdout when omitted)");
  compare_cmd->add_option("--adversary", adv_path, "fallback adversary checkpoint");
  compare_cmd->add_option("--seed", seed, "evaluation seed");
  compare_cmd->add_option("--config", config_path, "optional config for track/eval settings");

  CLI::App* plot_cmd = app.add_subcommand("plot", "emit an SVG line plot from a CSV column pair");
  plot_cmd->add_option("--csv", csv_path, "input CSV")->required();
  plot_cmd->add_option("--x", xcol, "x column name");
  plot_cmd->add_option("--y", ycol, "y column name");
  plot_cmd->add_option("--out", out_path, "output SVG path");
  plot_cmd->add_option("--title", title, "plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand(train_cmd))
      return cmd_train(config_path, seed, out_dir, variant);
    if (app.got_subcommand(eval_cmd))
      return cmd_eval(ck_path, adv_path, regime, episodes, csv_path, seed, config_path);
    if (app.got_subcommand(credit_cmd))
      return cmd_credit(ck_path, episodes, csv_path, seed, config_path);
    if (app.got_subcommand(compare_cmd))
      return cmd_compare(models, regimes, episodes, csv_path, adv_path, seed, config_path);
    if (app.got_subcommand(plot_cmd)) return cmd_plot(csv_path, xcol, ycol, out_path, title);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
