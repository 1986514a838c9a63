#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "unmix3d/cscnet.hpp"

namespace unmix3d {

// One gradient tensor per parameter tensor, same layout as the parameters.
using Gradients = NetworkParams;

// Spectral angle with the cosine clamped to [-1 + eps, 1 - eps].
double sad_pixel(const Eigen::Ref<const Eigen::VectorXd>& r,
                 const Eigen::Ref<const Eigen::VectorXd>& r_hat, double eps_cos = 1e-7);

// Mean clamped spectral angle over all pixels.
double sad_loss(const HsiCube& reconstruction, const HsiCube& target, double eps_cos = 1e-7);

struct BackwardResult {
  double loss = 0.0;
  Gradients grads;
};

// Exact reverse-mode gradient of sad_loss(network_forward(target)) with
// respect to every parameter. The soft threshold uses subgradient 0 on
// |x| <= theta; the clamped cosine passes no gradient outside its interval.
BackwardResult network_backward(const ForwardCache& cache, const HsiCube& target,
                                const NetworkParams& params, const NetworkConfig& config,
                                double eps_cos = 1e-7);

struct AdamState {
  NetworkParams m;
  NetworkParams v;
  // Bias-correction step counters; the decoder counter only advances on
  // steps where the decoder is updated.
  long encoder_step = 0;
  long decoder_step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam_state(const NetworkParams& params);

void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               double lr_encoder, double lr_decoder, bool freeze_decoder);

// Simulated-data defaults: L_E = 1.2e-4, L_D = 1e-4, T_1 = 900, T = 1000.
struct TrainConfig {
  double lr_encoder = 1.2e-4;
  double lr_decoder = 1e-4;
  int stage1_epochs = 900;  // encoder-only epochs; 0 trains both from the start
  int total_epochs = 1000;
  std::uint64_t seed = 0;
  double eps_cos = 1e-7;
  int log_interval = 100;
};

// State handed to the observer every `log_interval` epochs (epochs counted
// from 1) and after the final epoch. `loss` and `abundances` are those of the
// forward pass at the start of that epoch, before its update.
struct EpochSnapshot {
  int epoch = 0;
  double loss = 0.0;
  bool stage_one = false;
  const NetworkParams* params = nullptr;
  const AbundanceMaps* abundances = nullptr;
  const AdamState* adam = nullptr;
};

using TrainObserver = std::function<void(const EpochSnapshot&)>;

struct TrainReport {
  std::vector<double> losses;  // one per epoch
  AbundanceMaps abundances;    // encoder output with the final parameters
  EndmemberMatrix endmembers;  // decoder weights after training
  int stage_boundary = 0;      // = stage1_epochs
  NetworkParams params;
};

TrainReport train(const HsiCube& cube, const NetworkConfig& net_config,
                  const TrainConfig& train_config, const EndmemberMatrix& initial_endmembers,
                  const TrainObserver& observer = {});

// The decoder weights, unmodified.
EndmemberMatrix extract_endmembers(const NetworkParams& params);

// Finite-difference verification of network_backward on a small network
// (C=4, K=2, P=3, L=16, H=W=8).
struct GradCheckOptions {
  std::uint64_t seed = 1;
  double step = 1e-5;
  double tolerance = 1e-4;
  // Test hook: scales the analytic gradient of this tensor to force a failure.
  std::string corrupt_tensor;
};

struct GradCheckEntry {
  std::string name;
  std::size_t size = 0;
  double max_relative_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool passed() const;
};

GradCheckReport gradient_check(const GradCheckOptions& options);

}  // namespace unmix3d
