#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "unmix3d/cube.hpp"
#include "unmix3d/tensor.hpp"

namespace unmix3d {

// Shape of the unrolled sparse-coding autoencoder. Y is treated as a one-channel
// L x H x W volume; the sparse code z is C x P x H x W.
struct NetworkConfig {
  static constexpr int kInDepth = 15;      // W_in depth
  static constexpr int kUpdateDepth = 7;   // W_u and W_d depth
  static constexpr int kSpatial = 3;       // spatial kernel extent, padding 1

  int channels = 48;
  int iterations = 6;
  int materials = 0;
  int bands = 0;
  int height = 0;
  int width = 0;
  int spectral_stride = 1;  // ceil(L / P)
  int pad_in = 0;           // depth padding of W_in
  int pad_update = 0;       // depth padding of W_u / W_d

  ConvGeometry in_geometry() const { return {spectral_stride, pad_in, 1, 1}; }
  ConvGeometry update_geometry() const { return {spectral_stride, pad_update, 1, 1}; }
};

// Smallest depth padding p <= stride with floor((L + 2p - kd) / stride) + 1 = P.
int solve_depth_padding(int bands, int materials, int stride, int kd);

// Derives the stride and the minimal depth paddings mapping L bands onto P
// code slices. Throws ConfigError when no padding <= stride satisfies the
// shape equation, or when P >= L or H, W < 3.
NetworkConfig make_config(int bands, int height, int width, int materials, int channels = 48,
                          int iterations = 6);

// Operators of one unrolled iteration. All three kernels are C x 1 x kd x 3 x 3:
// k_in and k_u are strided analysis maps (Y-space -> z-space); k_d is applied
// transposed as the synthesis map (z-space -> Y-space).
struct IterationModuleParams {
  ConvKernel k_in;
  ConvKernel k_u;
  ConvKernel k_d;
};

// theta_k = softplus(w*k + b) with w = -softplus(rho) < 0.
struct ThresholdParams {
  double rho = 0.0;
  double b_theta = 0.0;
  double slope() const;
};

struct NetworkParams {
  std::vector<IterationModuleParams> modules;
  ThresholdParams thresholds;
  ConvKernel g_kernel;      // 1 x C x 1 x 1 x 1 encoder head
  EndmemberMatrix decoder;  // L x P pointwise decoder weights
};

// Named flat view of one parameter tensor.
struct ParamTensor {
  std::string name;
  std::span<double> values;
  bool decoder = false;
};
struct ConstParamTensor {
  std::string name;
  std::span<const double> values;
  bool decoder = false;
};

// Every parameter tensor in a fixed order: module<k>.k_in/k_u/k_d,
// thresholds.rho, thresholds.b_theta, g_kernel, decoder.
std::vector<ParamTensor> param_tensors(NetworkParams& params);
std::vector<ConstParamTensor> param_tensors(const NetworkParams& params);

// Same structure, all zeros.
NetworkParams zeros_like(const NetworkParams& params);

// Kernels uniform on +-sqrt(6 / fan_in) from a seeded generator, rho such that
// w = -0.1, b = -4, decoder copied from `decoder_init`.
NetworkParams init_params(const NetworkConfig& config, const EndmemberMatrix& decoder_init,
                          std::uint64_t seed);

double softplus(double x);
double sigmoid(double x);

std::vector<double> compute_thresholds(const ThresholdParams& tp, int iterations);

Tensor4 soft_threshold(const Tensor4& x, double theta);

// 1 x L x H x W view of a cube and back.
Tensor4 cube_to_tensor(const HsiCube& cube);
HsiCube tensor_to_cube(const Tensor4& t);

// Intermediates kept for the backward pass.
struct ForwardCache {
  Tensor4 input;                  // 1 x L x H x W
  std::vector<double> thresholds;
  std::vector<Tensor4> pre;       // pre-activation of every iteration
  std::vector<Tensor4> codes;     // z^(k) after shrinkage
  std::vector<Tensor4> synth;     // W_d(z^(k-1)) for k >= 1 (index 0 unused)
  Eigen::MatrixXd abundances;     // P x N softmax output
  Eigen::MatrixXd reconstruction; // L x N
};

// Unrolled sparse coding: returns z^(K-1).
Tensor4 cscb_forward(const Tensor4& y, const NetworkParams& params, const NetworkConfig& config,
                     ForwardCache* cache = nullptr);

// Softmax over materials of G(z), as P x N.
Eigen::MatrixXd encoder_head(const Tensor4& z, const ConvKernel& g_kernel);

AbundanceMaps encoder_forward(const HsiCube& y, const NetworkParams& params,
                              const NetworkConfig& config, ForwardCache* cache = nullptr);

// Per-pixel linear mixture decoder * A.
HsiCube decoder_forward(const AbundanceMaps& abundances, const EndmemberMatrix& decoder);

struct NetworkOutput {
  HsiCube reconstruction;
  AbundanceMaps abundances;
  ForwardCache cache;
};

NetworkOutput network_forward(const HsiCube& y, const NetworkParams& params,
                              const NetworkConfig& config);

}  // namespace unmix3d
