#pragma once

#include <span>
#include <vector>

#include "rararl/rng.hpp"

namespace rararl {

// Fully connected network with ReLU on hidden layers and identity output.
// weights[l] is row-major with shape (layer_dims[l+1] x layer_dims[l]).
struct DenseNet {
  std::vector<int> layer_dims;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t layer_count() const { return weights.size(); }
  std::size_t parameter_count() const;
};

// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], weights before biases,
// layer by layer. Draw order is part of the reproducibility contract.
DenseNet make_dense_net(const std::vector<int>& layer_dims, RngStream& rng);

// Post-activation value of every layer; activations[0] is the input copy.
struct ForwardCache {
  std::vector<std::vector<double>> activations;
};

std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            ForwardCache* cache = nullptr);

struct GradientSet {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

GradientSet make_zero_gradients(const DenseNet& net);

// Gradient of dot(output, grad_output) with respect to every parameter.
// grad_input, when non-null, receives the gradient w.r.t. the input vector.
GradientSet backward(const DenseNet& net, const ForwardCache& cache,
                     std::span<const double> grad_output,
                     std::vector<double>* grad_input = nullptr);

struct AdamState {
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::vector<double>> m_weights, v_weights;
  std::vector<std::vector<double>> m_biases, v_biases;
};

AdamState make_adam_state(const DenseNet& net, double beta1 = 0.9,
                          double beta2 = 0.999, double epsilon = 1e-8);

// Bias-corrected Adam. Invariant: an all-zero gradient set advances the step
// counter but leaves parameters and moments untouched.
void adam_step(DenseNet& net, AdamState& state, const GradientSet& grads, double lr);

// Central differences on every parameter. O(parameter_count) forward passes.
GradientSet finite_diff_grad(const DenseNet& net, std::span<const double> input,
                             std::span<const double> grad_output, double h);

void accumulate(GradientSet& into, const GradientSet& from);
double squared_norm(const GradientSet& g);
bool all_zero(const GradientSet& g);

// Scales all sets jointly so the combined L2 norm is at most max_norm.
// Returns the pre-clip norm. Norm accumulation order follows the span order,
// weights before biases within each layer.
double clip_global_norm(std::span<GradientSet* const> grads, double max_norm);

void copy_parameters(const DenseNet& src, DenseNet& dst);

}  // namespace rararl
