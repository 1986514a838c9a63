#include <algorithm>
#include <cmath>
#include <random>

#include "unmix3d/cscnet.hpp"
#include "unmix3d/error.hpp"
#include "unmix3d/kernels.hpp"

namespace unmix3d {

int solve_depth_padding(int bands, int materials, int stride, int kd) {
  for (int p = 0; p <= stride; ++p) {
    const int span = bands + 2 * p - kd;
    if (span >= 0 && span / stride + 1 == materials) return p;
  }
  throw ConfigError("no depth padding <= " + std::to_string(stride) + " maps " +
                    std::to_string(bands) + " bands onto " + std::to_string(materials) +
                    " slices with a depth-" + std::to_string(kd) + " kernel");
}

NetworkConfig make_config(int bands, int height, int width, int materials, int channels,
                          int iterations) {
  if (materials < 2 || materials >= bands) throw ConfigError("need 2 <= P < L");
  if (height < 3 || width < 3) throw ConfigError("spatial size must be at least 3x3");
  if (channels < 1 || iterations < 1) throw ConfigError("channels and iterations must be >= 1");
  NetworkConfig c;
  c.channels = channels;
  c.iterations = iterations;
  c.materials = materials;
  c.bands = bands;
  c.height = height;
  c.width = width;
  c.spectral_stride = (bands + materials - 1) / materials;
  c.pad_in = solve_depth_padding(bands, materials, c.spectral_stride, NetworkConfig::kInDepth);
  c.pad_update =
      solve_depth_padding(bands, materials, c.spectral_stride, NetworkConfig::kUpdateDepth);
  return c;
}

double ThresholdParams::slope() const { return -softplus(rho); }

double softplus(double x) {
  // log(1 + e^x) without overflow for large x.
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> compute_thresholds(const ThresholdParams& tp, int iterations) {
  std::vector<double> theta(iterations);
  const double w = tp.slope();
  for (int k = 0; k < iterations; ++k) theta[k] = softplus(w * k + tp.b_theta);
  return theta;
}

Tensor4 soft_threshold(const Tensor4& x, double theta) {
  if (!(theta >= 0.0)) throw ConfigError("soft threshold must be >= 0");
  Tensor4 out = x;
  for (double& v : out.values()) {
    if (v > theta) {
      v -= theta;
    } else if (v < -theta) {
      v += theta;
    } else {
      v = 0.0;
    }
  }
  return out;
}

std::vector<ParamTensor> param_tensors(NetworkParams& p) {
  std::vector<ParamTensor> out;
  for (std::size_t k = 0; k < p.modules.size(); ++k) {
    const std::string prefix = "module" + std::to_string(k) + ".";
    out.push_back({prefix + "k_in", p.modules[k].k_in.values(), false});
    out.push_back({prefix + "k_u", p.modules[k].k_u.values(), false});
    out.push_back({prefix + "k_d", p.modules[k].k_d.values(), false});
  }
  out.push_back({"thresholds.rho", {&p.thresholds.rho, 1}, false});
  out.push_back({"thresholds.b_theta", {&p.thresholds.b_theta, 1}, false});
  out.push_back({"g_kernel", p.g_kernel.values(), false});
  out.push_back({"decoder",
                 {p.decoder.data(), static_cast<std::size_t>(p.decoder.size())}, true});
  return out;
}

std::vector<ConstParamTensor> param_tensors(const NetworkParams& p) {
  std::vector<ConstParamTensor> out;
  for (ParamTensor& t : param_tensors(const_cast<NetworkParams&>(p))) {
    out.push_back({std::move(t.name), t.values, t.decoder});
  }
  return out;
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams z = params;
  for (ParamTensor& t : param_tensors(z)) std::fill(t.values.begin(), t.values.end(), 0.0);
  return z;
}

namespace {

// Largest eigenvalue of A A^T, A = conv3d(., k, update geometry), by power
// iteration on a spatial window of at most 16 x 16 (the norm of a
// convolution is essentially independent of the image extent).
double gram_spectral_norm(const ConvKernel& k, const NetworkConfig& config) {
  const int h = std::min(config.height, 16);
  const int w = std::min(config.width, 16);
  const ConvGeometry geo = config.update_geometry();
  Tensor4 v(k.out_channels(), config.materials, h, w);
  auto vv = v.values();
  for (std::size_t i = 0; i < vv.size(); ++i) vv[i] = 1.0 + 0.5 * std::sin(0.7 * i);
  double lambda = 0.0;
  for (int it = 0; it < 60; ++it) {
    double norm = 0.0;
    for (double x : v.values()) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    for (double& x : v.values()) x /= norm;
    v = kernels::conv3d(kernels::conv3d_transpose(v, k, geo, config.bands, h, w), k, geo);
    double dot = 0.0;
    for (double x : v.values()) dot += x * x;
    lambda = std::sqrt(dot);
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw NumericalError("degenerate W_d kernel");
  return lambda;
}

}  // namespace

NetworkParams init_params(const NetworkConfig& config, const EndmemberMatrix& decoder_init,
                          std::uint64_t seed) {
  if (decoder_init.rows() != config.bands || decoder_init.cols() != config.materials) {
    throw DimensionError("decoder initialization must be L x P");
  }
  std::mt19937_64 rng(seed);
  auto fill_uniform = [&rng](ConvKernel& k) {
    const double bound = std::sqrt(6.0 / k.fan_in());
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : k.values()) v = u(rng);
  };
  const int c = config.channels;
  NetworkParams p;
  p.modules.resize(config.iterations);
  for (IterationModuleParams& m : p.modules) {
    m.k_in = ConvKernel(c, 1, NetworkConfig::kInDepth, 3, 3);
    m.k_d = ConvKernel(c, 1, NetworkConfig::kUpdateDepth, 3, 3);
    fill_uniform(m.k_in);
    fill_uniform(m.k_d);
    // Tied, step-size scaled analysis kernel: W_u W_d^T = A A^T / lambda_max,
    // so z - W_u(W_d(z)) starts non-expansive instead of amplifying the codes.
    m.k_u = m.k_d;
    const double scale = 1.0 / gram_spectral_norm(m.k_d, config);
    for (double& v : m.k_u.values()) v *= scale;
  }
  // softplus(rho) = 0.1
  p.thresholds.rho = std::log(std::expm1(0.1));
  p.thresholds.b_theta = -4.0;
  p.g_kernel = ConvKernel(1, c, 1, 1, 1);
  fill_uniform(p.g_kernel);
  p.decoder = decoder_init;
  return p;
}

Tensor4 cube_to_tensor(const HsiCube& cube) {
  Tensor4 t(1, cube.depth(), cube.height(), cube.width());
  std::copy(cube.values().begin(), cube.values().end(), t.values().begin());
  return t;
}

HsiCube tensor_to_cube(const Tensor4& t) {
  if (t.channels() != 1) throw DimensionError("tensor_to_cube expects one channel");
  return HsiCube(t.depth(), t.height(), t.width(),
                 std::vector<double>(t.values().begin(), t.values().end()));
}

namespace {

void check_shapes(const Tensor4& y, const NetworkParams& params, const NetworkConfig& config) {
  if (y.channels() != 1 || y.depth() != config.bands || y.height() != config.height ||
      y.width() != config.width) {
    throw DimensionError("network input does not match the configured L x H x W");
  }
  if (static_cast<int>(params.modules.size()) != config.iterations ||
      params.g_kernel.in_channels() != config.channels || params.decoder.rows() != config.bands ||
      params.decoder.cols() != config.materials) {
    throw DimensionError("network parameters do not match the configuration");
  }
}

}  // namespace

Tensor4 cscb_forward(const Tensor4& y, const NetworkParams& params, const NetworkConfig& config,
                     ForwardCache* cache) {
  check_shapes(y, params, config);
  const std::vector<double> theta = compute_thresholds(params.thresholds, config.iterations);
  const ConvGeometry in_geo = config.in_geometry();
  const ConvGeometry upd_geo = config.update_geometry();
  if (cache) {
    cache->input = y;
    cache->thresholds = theta;
    cache->pre.clear();
    cache->codes.clear();
    cache->synth.clear();
  }

  Tensor4 z;
  for (int k = 0; k < config.iterations; ++k) {
    const IterationModuleParams& m = params.modules[k];
    Tensor4 pre = kernels::conv3d(y, m.k_in, in_geo);
    Tensor4 synth;
    if (k > 0) {
      // z - W_u(W_d(z)) + W_in(Y); the k = 0 update acts on z = 0.
      synth = kernels::conv3d_transpose(z, m.k_d, upd_geo, config.bands, config.height,
                                        config.width);
      const Tensor4 gram = kernels::conv3d(synth, m.k_u, upd_geo);
      auto pv = pre.values();
      const auto zv = z.values();
      const auto gv = gram.values();
      for (std::size_t i = 0; i < pv.size(); ++i) pv[i] = zv[i] - gv[i] + pv[i];
    }
    z = soft_threshold(pre, theta[k]);
    if (cache) {
      cache->pre.push_back(std::move(pre));
      cache->codes.push_back(z);
      cache->synth.push_back(std::move(synth));
    }
  }
  return z;
}

Eigen::MatrixXd encoder_head(const Tensor4& z, const ConvKernel& g) {
  if (g.in_channels() != z.channels() || g.out_channels() != 1) {
    throw DimensionError("encoder head does not match code channels");
  }
  const int materials = z.depth();
  const int n = z.height() * z.width();
  Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(materials, n);
  for (int c = 0; c < z.channels(); ++c) {
    const double w = g(0, c, 0, 0, 0);
    for (int p = 0; p < materials; ++p) {
      const double* src = z.row(c, p, 0);
      for (int j = 0; j < n; ++j) logits(p, j) += w * src[j];
    }
  }
  Eigen::MatrixXd a(materials, n);
  for (int j = 0; j < n; ++j) {
    const double peak = logits.col(j).maxCoeff();
    double sum = 0.0;
    for (int p = 0; p < materials; ++p) {
      a(p, j) = std::exp(logits(p, j) - peak);
      sum += a(p, j);
    }
    a.col(j) /= sum;
  }
  return a;
}

AbundanceMaps encoder_forward(const HsiCube& y, const NetworkParams& params,
                              const NetworkConfig& config, ForwardCache* cache) {
  const Tensor4 z = cscb_forward(cube_to_tensor(y), params, config, cache);
  Eigen::MatrixXd a = encoder_head(z, params.g_kernel);
  AbundanceMaps maps = abundances_from_matrix(a, config.height, config.width);
  if (cache) cache->abundances = std::move(a);
  return maps;
}

HsiCube decoder_forward(const AbundanceMaps& abundances, const EndmemberMatrix& decoder) {
  if (decoder.cols() != abundances.depth()) {
    throw DimensionError("decoder has " + std::to_string(decoder.cols()) + " columns for " +
                         std::to_string(abundances.depth()) + " abundance maps");
  }
  return reshape_to_cube(decoder * abundances_to_matrix(abundances), abundances.height(),
                         abundances.width());
}

NetworkOutput network_forward(const HsiCube& y, const NetworkParams& params,
                              const NetworkConfig& config) {
  NetworkOutput out;
  out.abundances = encoder_forward(y, params, config, &out.cache);
  out.cache.reconstruction = params.decoder * out.cache.abundances;
  out.reconstruction = reshape_to_cube(out.cache.reconstruction, config.height, config.width);
  return out;
}

}  // namespace unmix3d
