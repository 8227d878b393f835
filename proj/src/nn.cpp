#include "rararl/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rararl {

namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite value");
  }
}

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("DenseNet needs at least input and output layer");
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("DenseNet layer sizes must be positive");
  }
}

}  // namespace

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

DenseNet make_dense_net(const std::vector<int>& layer_dims, RngStream& rng) {
  check_dims(layer_dims);
  DenseNet net;
  net.layer_dims = layer_dims;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int rows = layer_dims[l + 1];
    const int cols = layer_dims[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::vector<double> w(static_cast<std::size_t>(rows) * cols);
    for (double& x : w) x = (2.0 * rng.uniform01() - 1.0) * bound;
    std::vector<double> b(rows);
    for (double& x : b) x = (2.0 * rng.uniform01() - 1.0) * bound;
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            ForwardCache* cache) {
  if (static_cast<int>(input.size()) != net.input_dim()) {
    throw std::invalid_argument("forward: input length " + std::to_string(input.size()) +
                                ", expected " + std::to_string(net.input_dim()));
  }
  check_finite(input, "forward input");
  std::vector<double> a(input.begin(), input.end());
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(a);
  }
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const int rows = net.layer_dims[l + 1];
    const int cols = net.layer_dims[l];
    std::vector<double> z(rows);
    const double* w = net.weights[l].data();
    for (int r = 0; r < rows; ++r) {
      double sum = net.biases[l][r];
      const double* wr = w + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) sum += wr[c] * a[c];
      z[r] = sum;
    }
    if (l + 1 < net.layer_count()) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    a = std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

GradientSet make_zero_gradients(const DenseNet& net) {
  GradientSet g;
  g.weights.reserve(net.layer_count());
  g.biases.reserve(net.layer_count());
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    g.weights.emplace_back(net.weights[l].size(), 0.0);
    g.biases.emplace_back(net.biases[l].size(), 0.0);
  }
  return g;
}

GradientSet backward(const DenseNet& net, const ForwardCache& cache,
                     std::span<const double> grad_output,
                     std::vector<double>* grad_input) {
  const std::size_t layers = net.layer_count();
  if (cache.activations.size() != layers + 1) {
    throw std::invalid_argument("backward: cache does not match this net");
  }
  for (std::size_t l = 0; l <= layers; ++l) {
    if (static_cast<int>(cache.activations[l].size()) != net.layer_dims[l]) {
      throw std::invalid_argument("backward: cache does not match this net");
    }
  }
  if (static_cast<int>(grad_output.size()) != net.output_dim()) {
    throw std::invalid_argument("backward: grad_output length mismatch");
  }
  check_finite(grad_output, "backward grad_output");

  GradientSet g = make_zero_gradients(net);
  std::vector<double> delta(grad_output.begin(), grad_output.end());
  for (std::size_t l = layers; l-- > 0;) {
    const int rows = net.layer_dims[l + 1];
    const int cols = net.layer_dims[l];
    const std::vector<double>& a_prev = cache.activations[l];
    double* gw = g.weights[l].data();
    for (int r = 0; r < rows; ++r) {
      const double d = delta[r];
      g.biases[l][r] = d;
      double* gwr = gw + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) gwr[c] = d * a_prev[c];
    }
    if (l == 0 && grad_input == nullptr) break;
    std::vector<double> prev(cols, 0.0);
    const double* w = net.weights[l].data();
    for (int r = 0; r < rows; ++r) {
      const double d = delta[r];
      const double* wr = w + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) prev[c] += wr[c] * d;
    }
    if (l > 0) {
      // ReLU gate on the hidden activation
      for (int c = 0; c < cols; ++c) {
        if (!(a_prev[c] > 0.0)) prev[c] = 0.0;
      }
    }
    delta = std::move(prev);
  }
  if (grad_input) *grad_input = std::move(delta);
  return g;
}

AdamState make_adam_state(const DenseNet& net, double beta1, double beta2, double epsilon) {
  AdamState st;
  st.beta1 = beta1;
  st.beta2 = beta2;
  st.epsilon = epsilon;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    st.m_weights.emplace_back(net.weights[l].size(), 0.0);
    st.v_weights.emplace_back(net.weights[l].size(), 0.0);
    st.m_biases.emplace_back(net.biases[l].size(), 0.0);
    st.v_biases.emplace_back(net.biases[l].size(), 0.0);
  }
  return st;
}

namespace {

void check_grad_shape(const DenseNet& net, const GradientSet& g) {
  if (g.weights.size() != net.layer_count() || g.biases.size() != net.layer_count()) {
    throw std::invalid_argument("gradient set does not match net layout");
  }
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    if (g.weights[l].size() != net.weights[l].size() || g.biases[l].size() != net.biases[l].size()) {
      throw std::invalid_argument("gradient set does not match net layout");
    }
  }
}

void adam_update_span(std::span<double> params, std::span<double> m, std::span<double> v,
                      std::span<const double> grad, double lr, double b1, double b2,
                      double eps, double bc1, double bc2) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double gr = grad[i];
    m[i] = b1 * m[i] + (1.0 - b1) * gr;
    v[i] = b2 * v[i] + (1.0 - b2) * gr * gr;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

void adam_step(DenseNet& net, AdamState& st, const GradientSet& grads, double lr) {
  check_grad_shape(net, grads);
  if (st.m_weights.size() != net.layer_count()) {
    throw std::invalid_argument("adam state does not match net layout");
  }
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (double x : grads.weights[l]) {
      if (!std::isfinite(x)) {
        throw std::runtime_error("adam_step: non-finite weight gradient in layer " + std::to_string(l));
      }
    }
    for (double x : grads.biases[l]) {
      if (!std::isfinite(x)) {
        throw std::runtime_error("adam_step: non-finite bias gradient in layer " + std::to_string(l));
      }
    }
  }
  st.step += 1;
  if (all_zero(grads)) return;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    adam_update_span(net.weights[l], st.m_weights[l], st.v_weights[l], grads.weights[l],
                     lr, st.beta1, st.beta2, st.epsilon, bc1, bc2);
    adam_update_span(net.biases[l], st.m_biases[l], st.v_biases[l], grads.biases[l],
                     lr, st.beta1, st.beta2, st.epsilon, bc1, bc2);
  }
}

GradientSet finite_diff_grad(const DenseNet& net, std::span<const double> input,
                             std::span<const double> grad_output, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be positive");
  DenseNet work = net;
  GradientSet g = make_zero_gradients(net);
  auto value = [&]() {
    std::vector<double> out = forward(work, input);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * grad_output[i];
    return s;
  };
  auto probe = [&](double& param) {
    const double orig = param;
    param = orig + h;
    const double fp = value();
    param = orig - h;
    const double fm = value();
    param = orig;
    return (fp - fm) / (2.0 * h);
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (std::size_t i = 0; i < net.weights[l].size(); ++i) g.weights[l][i] = probe(work.weights[l][i]);
    for (std::size_t i = 0; i < net.biases[l].size(); ++i) g.biases[l][i] = probe(work.biases[l][i]);
  }
  return g;
}

void accumulate(GradientSet& into, const GradientSet& from) {
  if (into.weights.size() != from.weights.size()) {
    throw std::invalid_argument("accumulate: gradient layouts differ");
  }
  for (std::size_t l = 0; l < into.weights.size(); ++l) {
    if (into.weights[l].size() != from.weights[l].size() ||
        into.biases[l].size() != from.biases[l].size()) {
      throw std::invalid_argument("accumulate: gradient layouts differ");
    }
    for (std::size_t i = 0; i < into.weights[l].size(); ++i) into.weights[l][i] += from.weights[l][i];
    for (std::size_t i = 0; i < into.biases[l].size(); ++i) into.biases[l][i] += from.biases[l][i];
  }
}

double squared_norm(const GradientSet& g) {
  double s = 0.0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    for (double x : g.weights[l]) s += x * x;
    for (double x : g.biases[l]) s += x * x;
  }
  return s;
}

bool all_zero(const GradientSet& g) {
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    for (double x : g.weights[l]) {
      if (x != 0.0) return false;
    }
    for (double x : g.biases[l]) {
      if (x != 0.0) return false;
    }
  }
  return true;
}

double clip_global_norm(std::span<GradientSet* const> grads, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_global_norm: max_norm must be positive");
  // One running sum over every entry: the result must not depend on how the
  // parameters are split into gradient sets.
  double sq = 0.0;
  for (GradientSet* g : grads) {
    for (std::size_t l = 0; l < g->weights.size(); ++l) {
      for (double x : g->weights[l]) sq += x * x;
      for (double x : g->biases[l]) sq += x * x;
    }
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (GradientSet* g : grads) {
      for (std::size_t l = 0; l < g->weights.size(); ++l) {
        for (double& x : g->weights[l]) x *= scale;
        for (double& x : g->biases[l]) x *= scale;
      }
    }
  }
  return norm;
}

void copy_parameters(const DenseNet& src, DenseNet& dst) {
  if (src.layer_dims != dst.layer_dims) {
    throw std::invalid_argument("copy_parameters: layer shapes differ");
  }
  dst.weights = src.weights;
  dst.biases = src.biases;
}

}  // namespace rararl
