#include "rararl/batch_kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rararl {

EnsembleGradients make_zero_gradients(const EnsembleQNetwork& net) {
  EnsembleGradients g;
  g.trunk = make_zero_gradients(net.trunk);
  g.heads.reserve(net.heads.size());
  for (const DenseNet& h : net.heads) g.heads.push_back(make_zero_gradients(h));
  return g;
}

namespace {

void zero_out(GradientSet& g) {
  for (auto& v : g.weights) std::fill(v.begin(), v.end(), 0.0);
  for (auto& v : g.biases) std::fill(v.begin(), v.end(), 0.0);
}

void zero_out(EnsembleGradients& g) {
  zero_out(g.trunk);
  for (GradientSet& h : g.heads) zero_out(h);
}

void accumulate(EnsembleGradients& into, const EnsembleGradients& from) {
  accumulate(into.trunk, from.trunk);
  for (std::size_t i = 0; i < into.heads.size(); ++i) accumulate(into.heads[i], from.heads[i]);
}

void check_batch(const EnsembleQNetwork& net, std::span<const NStepTransition> batch,
                 std::span<const double> targets, std::span<const BootstrapMask> masks) {
  if (batch.empty()) throw std::invalid_argument("td batch must not be empty");
  if (targets.size() != batch.size() || masks.size() != batch.size()) {
    throw std::invalid_argument("td batch, targets and masks must have equal length");
  }
  for (const BootstrapMask& m : masks) {
    if (static_cast<int>(m.counts.size()) != net.head_count()) {
      throw std::invalid_argument("bootstrap mask size does not match head count");
    }
  }
  for (double t : targets) {
    if (!std::isfinite(t)) throw std::runtime_error("non-finite TD target");
  }
}

}  // namespace

double td_item_gradients(const EnsembleQNetwork& net, const NStepTransition& item,
                         double target, const BootstrapMask& mask, double coef,
                         EnsembleGradients& out) {
  zero_out(out);
  if (item.action < 0 || item.action >= net.num_actions()) {
    throw std::invalid_argument("td_item_gradients: action index out of range");
  }
  EnsembleCache cache;
  const QMatrix q = ensemble_forward(net, item.obs, &cache);
  const int na = net.num_actions();
  std::vector<double> head_grad_out(na, 0.0);
  std::vector<double> d_feature(net.feature_dim(), 0.0);
  std::vector<double> d_head_in;
  double loss = 0.0;
  bool any = false;
  for (int i = 0; i < net.head_count(); ++i) {
    const int m = mask.counts[i];
    if (m == 0) continue;
    const double diff = q.at(i, item.action) - target;
    loss += static_cast<double>(m) * diff * diff;
    const double g = coef * static_cast<double>(m) * diff;
    head_grad_out[item.action] = g;
    out.heads[i] = backward(net.heads[i], cache.heads[i], head_grad_out, &d_head_in);
    head_grad_out[item.action] = 0.0;
    for (int j = 0; j < net.feature_dim(); ++j) d_feature[j] += d_head_in[j];
    any = true;
  }
  if (any) {
    // ReLU gate at the trunk/head interface
    for (int j = 0; j < net.feature_dim(); ++j) {
      if (!(cache.feature[j] > 0.0)) d_feature[j] = 0.0;
    }
    out.trunk = backward(net.trunk, cache.trunk, d_feature);
  }
  return loss;
}

double td_batch_gradients_serial(const EnsembleQNetwork& net,
                                 std::span<const NStepTransition> batch,
                                 std::span<const double> targets,
                                 std::span<const BootstrapMask> masks,
                                 EnsembleGradients& out) {
  check_batch(net, batch, targets, masks);
  const double coef = 2.0 / static_cast<double>(batch.size());
  zero_out(out);
  EnsembleGradients slot = make_zero_gradients(net);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    loss += td_item_gradients(net, batch[b], targets[b], masks[b], coef, slot);
    accumulate(out, slot);
  }
  return loss / static_cast<double>(batch.size());
}

double td_batch_gradients_parallel(const EnsembleQNetwork& net,
                                   std::span<const NStepTransition> batch,
                                   std::span<const double> targets,
                                   std::span<const BootstrapMask> masks,
                                   EnsembleGradients& out) {
  check_batch(net, batch, targets, masks);
  const double coef = 2.0 / static_cast<double>(batch.size());
  const std::size_t n = batch.size();
  std::vector<EnsembleGradients> slots(n, make_zero_gradients(net));
  std::vector<double> losses(n, 0.0);
#pragma omp parallel for schedule(static)
  for (long b = 0; b < static_cast<long>(n); ++b) {
    losses[b] = td_item_gradients(net, batch[b], targets[b], masks[b], coef, slots[b]);
  }
  // index-order reduction keeps the result identical to the serial path
  zero_out(out);
  double loss = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    loss += losses[b];
    accumulate(out, slots[b]);
  }
  return loss / static_cast<double>(n);
}

double td_update(EnsembleQNetwork& net, const EnsembleQNetwork& target_net,
                 std::span<const NStepTransition> batch,
                 std::span<const BootstrapMask> masks, EnsembleAdam& opt,
                 const TdUpdateOptions& options) {
  if (batch.size() != masks.size()) {
    throw std::invalid_argument("td_update: batch and masks must have equal length");
  }
  std::vector<double> targets(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    targets[b] = nstep_target(batch[b], target_net, options.gamma, &masks[b]);
  }
  EnsembleGradients grads = make_zero_gradients(net);
  const double loss = options.parallel
                          ? td_batch_gradients_parallel(net, batch, targets, masks, grads)
                          : td_batch_gradients_serial(net, batch, targets, masks, grads);
  std::vector<GradientSet*> parts;
  parts.push_back(&grads.trunk);
  for (GradientSet& h : grads.heads) parts.push_back(&h);
  clip_global_norm(parts, options.grad_clip);
  adam_step(net.trunk, opt.trunk, grads.trunk, options.lr);
  for (std::size_t i = 0; i < net.heads.size(); ++i) {
    adam_step(net.heads[i], opt.heads[i], grads.heads[i], options.lr);
  }
  return loss;
}

}  // namespace rararl
