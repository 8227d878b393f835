#pragma once

#include <span>

#include "rararl/nstep.hpp"
#include "rararl/replay.hpp"

namespace rararl {

struct EnsembleGradients {
  GradientSet trunk;
  std::vector<GradientSet> heads;
};

EnsembleGradients make_zero_gradients(const EnsembleQNetwork& net);

// Gradients of the mean mask-weighted squared TD error for one batch item,
// written into `out` (overwritten, not accumulated). coef is 2 / batch_size.
// Returns the item's mask-weighted squared error sum.
double td_item_gradients(const EnsembleQNetwork& net, const NStepTransition& item,
                         double target, const BootstrapMask& mask, double coef,
                         EnsembleGradients& out);

// Sum of per-item gradients in batch order. The serial and parallel versions
// are bit-identical: the parallel one fills per-item slots concurrently and
// reduces them in index order afterwards.
double td_batch_gradients_serial(const EnsembleQNetwork& net,
                                 std::span<const NStepTransition> batch,
                                 std::span<const double> targets,
                                 std::span<const BootstrapMask> masks,
                                 EnsembleGradients& out);

double td_batch_gradients_parallel(const EnsembleQNetwork& net,
                                   std::span<const NStepTransition> batch,
                                   std::span<const double> targets,
                                   std::span<const BootstrapMask> masks,
                                   EnsembleGradients& out);

struct TdUpdateOptions {
  double gamma = 0.99;
  double lr = 1e-4;
  double grad_clip = 10.0;
  bool parallel = true;
};

// One optimizer step on trunk + heads from a batch of closed windows.
// Targets come from the target network via nstep_target with each item's
// mask. Returns the mean mask-weighted loss. A batch whose masks are all
// zero is a parameter no-op.
double td_update(EnsembleQNetwork& net, const EnsembleQNetwork& target_net,
                 std::span<const NStepTransition> batch,
                 std::span<const BootstrapMask> masks, EnsembleAdam& opt,
                 const TdUpdateOptions& options);

}  // namespace rararl
