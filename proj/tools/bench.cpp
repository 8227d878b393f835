// Times the OpenMP kernels against their serial references and checks that
// both produce bit-identical results.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rararl/batch_kernels.hpp"
#include "rararl/eval.hpp"
#include "rararl/rng.hpp"

using namespace rararl;

namespace {

double now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

bool same_bits(const EnsembleGradients& a, const EnsembleGradients& b) {
  auto eq = [](const GradientSet& x, const GradientSet& y) {
    if (x.weights.size() != y.weights.size()) return false;
    for (std::size_t l = 0; l < x.weights.size(); ++l) {
      if (std::memcmp(x.weights[l].data(), y.weights[l].data(),
                      x.weights[l].size() * sizeof(double)) != 0)
        return false;
      if (std::memcmp(x.biases[l].data(), y.biases[l].data(),
                      x.biases[l].size() * sizeof(double)) != 0)
        return false;
    }
    return true;
  };
  if (!eq(a.trunk, b.trunk)) return false;
  for (std::size_t h = 0; h < a.heads.size(); ++h)
    if (!eq(a.heads[h], b.heads[h])) return false;
  return true;
}

Observation random_obs(RngStream& rng) {
  Observation obs;
  for (double& x : obs) x = rng.uniform01() * 2.0 - 1.0;
  return obs;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("openmp: not enabled in this build\n");
#endif

  RngStream rng(derive_seed(7, static_cast<std::uint64_t>(Stream::Init)));
  EnsembleQNetwork net = make_ensemble(kObsDim, {64, 64}, 10, kNumActions, rng);

  const int B = 32;
  std::vector<NStepTransition> batch(B);
  std::vector<double> targets(B);
  std::vector<BootstrapMask> masks(B);
  for (int i = 0; i < B; ++i) {
    batch[i].obs = random_obs(rng);
    batch[i].action = static_cast<int>(rng.uniform_below(kNumActions));
    targets[i] = rng.uniform01() * 2.0 - 1.0;
    masks[i].counts.assign(10, 0);
    for (int h = 0; h < 10; ++h) masks[i].counts[h] = (rng.uniform01() < 0.5) ? 1 : 0;
    masks[i].counts[i % 10] = 1;
  }

  EnsembleGradients gs = make_zero_gradients(net);
  EnsembleGradients gp = make_zero_gradients(net);

  const int iters = 200;
  td_batch_gradients_serial(net, batch, targets, masks, gs);  // warm up
  double t0 = now();
  for (int it = 0; it < iters; ++it) td_batch_gradients_serial(net, batch, targets, masks, gs);
  const double serial_ms = (now() - t0) * 1000.0 / iters;

  td_batch_gradients_parallel(net, batch, targets, masks, gp);
  t0 = now();
  for (int it = 0; it < iters; ++it) td_batch_gradients_parallel(net, batch, targets, masks, gp);
  const double parallel_ms = (now() - t0) * 1000.0 / iters;

  std::printf("td_batch_gradients  B=%d k=10   serial %8.3f ms   parallel %8.3f ms   speedup %.2fx   bitwise %s\n",
              B, serial_ms, parallel_ms, serial_ms / parallel_ms,
              same_bits(gs, gp) ? "EQUAL" : "DIFFER");

  TrackConfig track;
  RiskConfig risk;
  EvalConfig ecfg;
  ecfg.regime = Regime::None;
  ecfg.episodes = 10;
  ecfg.seed = 99;

  ecfg.parallel = false;
  double e0 = now();
  EvalReport rs = evaluate(net, risk, nullptr, risk, ecfg, track);
  const double eval_serial = now() - e0;

  ecfg.parallel = true;
  e0 = now();
  EvalReport rp = evaluate(net, risk, nullptr, risk, ecfg, track);
  const double eval_parallel = now() - e0;

  std::printf("evaluate            10 episodes  serial %8.3f s    parallel %8.3f s    speedup %.2fx   csv %s\n",
              eval_serial, eval_parallel, eval_serial / eval_parallel,
              rs.to_csv() == rp.to_csv() ? "EQUAL" : "DIFFER");

  const bool ok = same_bits(gs, gp) && rs.to_csv() == rp.to_csv();
  return ok ? 0 : 1;
}
