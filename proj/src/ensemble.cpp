#include "rararl/ensemble.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rararl {

void validate(const RiskConfig& cfg) {
  if (!(cfg.lambda_p >= 0.0) || !(cfg.lambda_a >= 0.0)) {
    throw std::invalid_argument("risk weights must be >= 0");
  }
  if (cfg.zero_sum && cfg.lambda_a != cfg.lambda_p) {
    throw std::invalid_argument("zero-sum setup requires lambda_a == lambda_p");
  }
}

std::size_t EnsembleQNetwork::parameter_count() const {
  std::size_t n = trunk.parameter_count();
  for (const DenseNet& h : heads) n += h.parameter_count();
  return n;
}

EnsembleQNetwork make_ensemble(int obs_dim, const std::vector<int>& trunk_hidden,
                               int k, int num_actions, RngStream& rng) {
  if (k < 1) throw std::invalid_argument("make_ensemble: k must be >= 1");
  if (num_actions < 1) throw std::invalid_argument("make_ensemble: num_actions must be >= 1");
  if (trunk_hidden.empty()) throw std::invalid_argument("make_ensemble: trunk needs at least one layer");
  std::vector<int> trunk_dims;
  trunk_dims.push_back(obs_dim);
  for (int d : trunk_hidden) trunk_dims.push_back(d);
  EnsembleQNetwork net;
  net.trunk = make_dense_net(trunk_dims, rng);
  const int feat = trunk_dims.back();
  net.heads.reserve(k);
  for (int i = 0; i < k; ++i) {
    net.heads.push_back(make_dense_net({feat, num_actions}, rng));
  }
  return net;
}

EnsembleAdam make_ensemble_adam(const EnsembleQNetwork& net, double beta1,
                                double beta2, double epsilon) {
  EnsembleAdam opt;
  opt.trunk = make_adam_state(net.trunk, beta1, beta2, epsilon);
  opt.heads.reserve(net.heads.size());
  for (const DenseNet& h : net.heads) opt.heads.push_back(make_adam_state(h, beta1, beta2, epsilon));
  return opt;
}

void sync_target(const EnsembleQNetwork& online, EnsembleQNetwork& target) {
  if (online.heads.size() != target.heads.size()) {
    throw std::invalid_argument("sync_target: head counts differ");
  }
  copy_parameters(online.trunk, target.trunk);
  for (std::size_t i = 0; i < online.heads.size(); ++i) {
    copy_parameters(online.heads[i], target.heads[i]);
  }
}

QMatrix ensemble_forward(const EnsembleQNetwork& net, std::span<const double> obs,
                         EnsembleCache* cache) {
  const int k = net.head_count();
  const int na = net.num_actions();
  std::vector<double> trunk_out = forward(net.trunk, obs, cache ? &cache->trunk : nullptr);
  std::vector<double> feature(trunk_out.size());
  for (std::size_t i = 0; i < trunk_out.size(); ++i) {
    feature[i] = trunk_out[i] > 0.0 ? trunk_out[i] : 0.0;
  }
  QMatrix q;
  q.k = k;
  q.num_actions = na;
  q.values.resize(static_cast<std::size_t>(k) * na);
  if (cache) {
    cache->feature = feature;
    cache->heads.resize(k);
  }
  for (int i = 0; i < k; ++i) {
    std::vector<double> row = forward(net.heads[i], feature, cache ? &cache->heads[i] : nullptr);
    for (int a = 0; a < na; ++a) q.values[static_cast<std::size_t>(i) * na + a] = row[a];
  }
  return q;
}

std::vector<double> mean_q(const QMatrix& q) {
  if (q.k < 1) throw std::invalid_argument("mean_q: empty ensemble");
  std::vector<double> mean(q.num_actions, 0.0);
  for (int i = 0; i < q.k; ++i) {
    for (int a = 0; a < q.num_actions; ++a) mean[a] += q.at(i, a);
  }
  for (double& m : mean) m /= static_cast<double>(q.k);
  return mean;
}

std::vector<double> variance_q(const QMatrix& q) {
  if (q.k < 1) throw std::invalid_argument("variance_q: empty ensemble");
  const std::vector<double> mean = mean_q(q);
  std::vector<double> var(q.num_actions, 0.0);
  for (int i = 0; i < q.k; ++i) {
    for (int a = 0; a < q.num_actions; ++a) {
      const double d = q.at(i, a) - mean[a];
      var[a] += d * d;
    }
  }
  for (double& v : var) v /= static_cast<double>(q.k);
  return var;
}

std::vector<double> modified_q(AgentRole role, std::span<const double> q,
                               std::span<const double> var, const RiskConfig& cfg) {
  if (q.size() != var.size()) throw std::invalid_argument("modified_q: length mismatch");
  validate(cfg);
  const double lambda = role == AgentRole::Protagonist ? cfg.lambda_p : cfg.lambda_a;
  const double sign = role == AgentRole::Protagonist ? -1.0 : 1.0;
  std::vector<double> out(q.size());
  for (std::size_t a = 0; a < q.size(); ++a) {
    if (!(var[a] >= 0.0)) throw std::invalid_argument("modified_q: negative or non-finite variance");
    out[a] = q[a] + sign * lambda * var[a];
  }
  return out;
}

int argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax_lowest: empty input");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

ActionChoice select_action(const EnsembleQNetwork& net, std::span<const double> obs,
                           AgentRole role, int head_index, const RiskConfig& cfg,
                           double epsilon, RngStream& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("select_action: epsilon outside [0, 1]");
  }
  if (head_index < 0 || head_index >= net.head_count()) {
    throw std::invalid_argument("select_action: head index " + std::to_string(head_index) +
                                " out of range");
  }
  const double u = rng.uniform01();
  if (u < epsilon) {
    ActionChoice c;
    c.action = static_cast<int>(rng.uniform_below(net.num_actions()));
    c.selected_variance = std::numeric_limits<double>::quiet_NaN();
    c.explored = true;
    return c;
  }
  const QMatrix q = ensemble_forward(net, obs);
  const std::vector<double> var = variance_q(q);
  const std::vector<double> mod = modified_q(role, q.row(head_index), var, cfg);
  ActionChoice c;
  c.action = argmax_lowest(mod);
  c.selected_variance = var[c.action];
  c.explored = false;
  return c;
}

int select_action_test(const EnsembleQNetwork& net, std::span<const double> obs,
                       AgentRole role, const RiskConfig& cfg) {
  const QMatrix q = ensemble_forward(net, obs);
  const std::vector<double> mean = mean_q(q);
  const std::vector<double> var = variance_q(q);
  const std::vector<double> mod = modified_q(role, mean, var, cfg);
  return argmax_lowest(mod);
}

BootstrapMask sample_mask(int k, double rate, int heads_per_update, RngStream& rng) {
  if (k < 1) throw std::invalid_argument("sample_mask: k must be >= 1");
  if (!(rate >= 0.0)) throw std::invalid_argument("sample_mask: rate must be >= 0");
  if (heads_per_update < 1 || heads_per_update > k) {
    throw std::invalid_argument("sample_mask: heads_per_update outside [1, k]");
  }
  BootstrapMask mask;
  mask.counts.assign(k, 0);
  if (heads_per_update == k) {
    for (int i = 0; i < k; ++i) mask.counts[i] = 1 + rng.poisson(rate);
    return mask;
  }
  // partial Fisher-Yates over head indices
  std::vector<int> pool(k);
  for (int i = 0; i < k; ++i) pool[i] = i;
  for (int i = 0; i < heads_per_update; ++i) {
    const int j = i + static_cast<int>(rng.uniform_below(static_cast<std::size_t>(k - i)));
    std::swap(pool[i], pool[j]);
    mask.counts[pool[i]] = 1 + rng.poisson(rate);
  }
  return mask;
}

BootstrapMask sample_mask_poisson(int k, double rate, RngStream& rng) {
  if (k < 1) throw std::invalid_argument("sample_mask_poisson: k must be >= 1");
  if (!(rate >= 0.0)) throw std::invalid_argument("sample_mask_poisson: rate must be >= 0");
  BootstrapMask mask;
  mask.counts.assign(k, 0);
  for (int i = 0; i < k; ++i) mask.counts[i] = rng.poisson(rate);
  return mask;
}

}  // namespace rararl
