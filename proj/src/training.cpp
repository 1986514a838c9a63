#include <algorithm>
#include <cmath>

#include "unmix3d/hsi_data.hpp"
#include "unmix3d/kernels.hpp"
#include "unmix3d/training.hpp"

namespace unmix3d {

double sad_pixel(const Eigen::Ref<const Eigen::VectorXd>& r,
                 const Eigen::Ref<const Eigen::VectorXd>& r_hat, double eps_cos) {
  if (r.size() != r_hat.size()) throw DimensionError("SAD: length mismatch");
  const double nr = r.norm();
  const double nq = r_hat.norm();
  if (nr == 0.0 || nq == 0.0) throw NumericalError("SAD: zero-norm spectrum");
  const double c = std::clamp(r.dot(r_hat) / (nr * nq), -1.0 + eps_cos, 1.0 - eps_cos);
  return std::acos(c);
}

double sad_loss(const HsiCube& reconstruction, const HsiCube& target, double eps_cos) {
  if (!reconstruction.same_shape(target)) throw DimensionError("SAD loss: cube shapes differ");
  const PixelMatrix q = reshape_to_matrix(reconstruction);
  const PixelMatrix r = reshape_to_matrix(target);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < r.cols(); ++j) sum += sad_pixel(r.col(j), q.col(j), eps_cos);
  return sum / static_cast<double>(r.cols());
}

BackwardResult network_backward(const ForwardCache& cache, const HsiCube& target,
                                const NetworkParams& params, const NetworkConfig& config,
                                double eps_cos) {
  const int k_count = config.iterations;
  if (static_cast<int>(cache.pre.size()) != k_count || cache.reconstruction.size() == 0 ||
      static_cast<int>(params.modules.size()) != k_count ||
      cache.reconstruction.rows() != target.depth() ||
      cache.reconstruction.cols() != target.pixel_count()) {
    throw DimensionError("backward: cache does not match parameters or target");
  }
  const PixelMatrix r = reshape_to_matrix(target);
  const Eigen::MatrixXd& q = cache.reconstruction;
  const Eigen::MatrixXd& a = cache.abundances;
  const int n = static_cast<int>(r.cols());
  const int materials = config.materials;

  BackwardResult out;
  out.grads = zeros_like(params);
  Gradients& g = out.grads;

  // Loss and its gradient with respect to the reconstruction.
  Eigen::MatrixXd d_recon = Eigen::MatrixXd::Zero(q.rows(), n);
  const double lo = -1.0 + eps_cos;
  const double hi = 1.0 - eps_cos;
  double loss = 0.0;
  for (int j = 0; j < n; ++j) {
    const double nr = r.col(j).norm();
    const double nq = q.col(j).norm();
    if (nr == 0.0 || nq == 0.0) throw NumericalError("SAD: zero-norm spectrum at pixel " + std::to_string(j));
    const double c = r.col(j).dot(q.col(j)) / (nr * nq);
    loss += std::acos(std::clamp(c, lo, hi));
    if (c > lo && c < hi) {
      const double dc = -1.0 / (n * std::sqrt(1.0 - c * c));
      d_recon.col(j) = dc * (r.col(j) / (nr * nq) - c * q.col(j) / (nq * nq));
    }
  }
  out.loss = loss / n;

  // Decoder.
  g.decoder = d_recon * a.transpose();
  const Eigen::MatrixXd d_a = params.decoder.transpose() * d_recon;

  // Softmax.
  Eigen::MatrixXd d_logits(materials, n);
  for (int j = 0; j < n; ++j) {
    const double s = a.col(j).dot(d_a.col(j));
    d_logits.col(j) = a.col(j).cwiseProduct(d_a.col(j) - Eigen::VectorXd::Constant(materials, s));
  }

  // Encoder head.
  const Tensor4& z_last = cache.codes.back();
  Tensor4 dz(config.channels, materials, config.height, config.width);
  for (int c = 0; c < config.channels; ++c) {
    const double w = params.g_kernel(0, c, 0, 0, 0);
    double acc = 0.0;
    for (int p = 0; p < materials; ++p) {
      const double* zr = z_last.row(c, p, 0);
      double* dzr = dz.row(c, p, 0);
      for (int j = 0; j < n; ++j) {
        acc += d_logits(p, j) * zr[j];
        dzr[j] = w * d_logits(p, j);
      }
    }
    g.g_kernel(0, c, 0, 0, 0) = acc;
  }

  // Unrolled iterations, last to first.
  const ConvGeometry in_geo = config.in_geometry();
  const ConvGeometry upd_geo = config.update_geometry();
  std::vector<double> d_theta(k_count, 0.0);
  for (int k = k_count - 1; k >= 0; --k) {
    const Tensor4& pre = cache.pre[k];
    const double theta = cache.thresholds[k];
    Tensor4 d_pre(pre.channels(), pre.depth(), pre.height(), pre.width());
    {
      const auto pv = pre.values();
      const auto gv = dz.values();
      auto dv = d_pre.values();
      double dt = 0.0;
      for (std::size_t i = 0; i < pv.size(); ++i) {
        if (pv[i] > theta) {
          dv[i] = gv[i];
          dt -= gv[i];
        } else if (pv[i] < -theta) {
          dv[i] = gv[i];
          dt += gv[i];
        }
      }
      d_theta[k] = dt;
    }

    IterationModuleParams& gm = g.modules[k];
    const IterationModuleParams& m = params.modules[k];
    gm.k_in = kernels::conv3d_kernel_grad(cache.input, d_pre, in_geo, NetworkConfig::kInDepth, 3, 3);
    if (k == 0) break;

    // pre = z - W_u(v) + W_in(Y), v = W_d(z).
    Tensor4 d_u = d_pre;
    for (double& v : d_u.values()) v = -v;
    const Tensor4& synth = cache.synth[k];
    const Tensor4& z_prev = cache.codes[k - 1];
    gm.k_u = kernels::conv3d_kernel_grad(synth, d_u, upd_geo, NetworkConfig::kUpdateDepth, 3, 3);
    const Tensor4 d_synth = kernels::conv3d_transpose(d_u, m.k_u, upd_geo, config.bands,
                                                      config.height, config.width);
    gm.k_d =
        kernels::conv3d_kernel_grad(d_synth, z_prev, upd_geo, NetworkConfig::kUpdateDepth, 3, 3);
    const Tensor4 back = kernels::conv3d(d_synth, m.k_d, upd_geo);
    dz = std::move(d_pre);
    auto dzv = dz.values();
    const auto bv = back.values();
    for (std::size_t i = 0; i < dzv.size(); ++i) dzv[i] += bv[i];
  }

  // theta_k = softplus(w k + b), w = -softplus(rho).
  const double w = params.thresholds.slope();
  double d_w = 0.0;
  double d_b = 0.0;
  for (int k = 0; k < k_count; ++k) {
    const double d_arg = d_theta[k] * sigmoid(w * k + params.thresholds.b_theta);
    d_b += d_arg;
    d_w += d_arg * k;
  }
  g.thresholds.b_theta = d_b;
  g.thresholds.rho = -d_w * sigmoid(params.thresholds.rho);
  return out;
}

AdamState make_adam_state(const NetworkParams& params) {
  AdamState s;
  s.m = zeros_like(params);
  s.v = zeros_like(params);
  return s;
}

void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state, double lr_encoder,
               double lr_decoder, bool freeze_decoder) {
  std::vector<ParamTensor> p = param_tensors(params);
  const std::vector<ConstParamTensor> g = param_tensors(grads);
  std::vector<ParamTensor> m = param_tensors(state.m);
  std::vector<ParamTensor> v = param_tensors(state.v);
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
    throw DimensionError("adam: gradient structure differs from parameters");
  }
  ++state.encoder_step;
  if (!freeze_decoder) ++state.decoder_step;

  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].values.size() != g[i].values.size()) {
      throw DimensionError("adam: size mismatch for " + p[i].name);
    }
    if (p[i].decoder && freeze_decoder) continue;
    const long t = p[i].decoder ? state.decoder_step : state.encoder_step;
    const double lr = p[i].decoder ? lr_decoder : lr_encoder;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));
    const double step = lr / bc1;
    const double root_bc2 = std::sqrt(bc2);
    for (std::size_t j = 0; j < p[i].values.size(); ++j) {
      const double gj = g[i].values[j];
      double& mj = m[i].values[j];
      double& vj = v[i].values[j];
      mj = state.beta1 * mj + (1.0 - state.beta1) * gj;
      vj = state.beta2 * vj + (1.0 - state.beta2) * gj * gj;
      p[i].values[j] -= step * mj / (std::sqrt(vj) / root_bc2 + state.epsilon);
    }
  }
}

TrainReport train(const HsiCube& cube, const NetworkConfig& net_config,
                  const TrainConfig& cfg, const EndmemberMatrix& initial_endmembers,
                  const TrainObserver& observer) {
  if (cfg.total_epochs < 1 || cfg.stage1_epochs < 0 || cfg.stage1_epochs > cfg.total_epochs) {
    throw ConfigError("training: need 0 <= T_1 <= T and T >= 1");
  }
  if (!(cfg.lr_encoder > 0.0) || !(cfg.lr_decoder > 0.0)) {
    throw ConfigError("training: learning rates must be positive");
  }
  if (cfg.log_interval < 1) throw ConfigError("training: log interval must be >= 1");

  TrainReport report;
  report.stage_boundary = cfg.stage1_epochs;
  NetworkParams params = init_params(net_config, initial_endmembers, cfg.seed);
  AdamState adam = make_adam_state(params);
  report.losses.reserve(cfg.total_epochs);

  for (int epoch = 1; epoch <= cfg.total_epochs; ++epoch) {
    const NetworkOutput out = network_forward(cube, params, net_config);
    BackwardResult bw = network_backward(out.cache, cube, params, net_config, cfg.eps_cos);
    if (!std::isfinite(bw.loss)) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    }
    report.losses.push_back(bw.loss);
    const bool stage_one = epoch <= cfg.stage1_epochs;
    if (observer && (epoch % cfg.log_interval == 0 || epoch == cfg.total_epochs)) {
      observer({epoch, bw.loss, stage_one, &params, &out.abundances, &adam});
    }
    adam_step(params, bw.grads, adam, cfg.lr_encoder, cfg.lr_decoder, stage_one);
  }

  report.abundances = encoder_forward(cube, params, net_config);
  report.endmembers = extract_endmembers(params);
  report.params = std::move(params);
  return report;
}

EndmemberMatrix extract_endmembers(const NetworkParams& params) { return params.decoder; }

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

GradCheckReport gradient_check(const GradCheckOptions& options) {
  constexpr int kBands = 16;
  constexpr int kMaterials = 3;
  constexpr int kSide = 8;
  const NetworkConfig config = make_config(kBands, kSide, kSide, kMaterials, 4, 2);

  const std::uint64_t s = options.seed;
  const EndmemberMatrix e_true = generate_synthetic_endmembers(kBands, kMaterials, s);
  const AbundanceMaps a_true = generate_gaussian_field_abundances(
      kMaterials, kSide, kSide, {.field_sigma = 2.0, .contrast = 2.0, .seed = s + 1});
  const HsiCube y = synthesize_scene(e_true, a_true, 30.0, s + 2).cube;
  const EndmemberMatrix e_init = generate_synthetic_endmembers(kBands, kMaterials, s + 3);
  NetworkParams params = init_params(config, e_init, s + 4);

  const NetworkOutput out = network_forward(y, params, config);
  BackwardResult analytic = network_backward(out.cache, y, params, config);

  auto loss_at = [&](const NetworkParams& p) {
    return sad_loss(network_forward(y, p, config).reconstruction, y);
  };

  GradCheckReport report;
  std::vector<ParamTensor> p_list = param_tensors(params);
  std::vector<ParamTensor> g_list = param_tensors(analytic.grads);
  if (!options.corrupt_tensor.empty() &&
      std::none_of(p_list.begin(), p_list.end(),
                   [&](const auto& t) { return t.name == options.corrupt_tensor; })) {
    throw ConfigError("unknown tensor '" + options.corrupt_tensor + "'");
  }
  for (std::size_t i = 0; i < p_list.size(); ++i) {
    GradCheckEntry entry{p_list[i].name, p_list[i].values.size(), 0.0, false};
    const double corruption = p_list[i].name == options.corrupt_tensor ? 1.5 : 1.0;
    for (std::size_t j = 0; j < p_list[i].values.size(); ++j) {
      double& x = p_list[i].values[j];
      const double saved = x;
      x = saved + options.step;
      const double up = loss_at(params);
      x = saved - options.step;
      const double down = loss_at(params);
      x = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double an = g_list[i].values[j] * corruption;
      const double rel = std::abs(an - numeric) / (std::abs(numeric) + 1e-8);
      entry.max_relative_error = std::max(entry.max_relative_error, rel);
    }
    entry.passed = entry.max_relative_error <= options.tolerance;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace unmix3d
