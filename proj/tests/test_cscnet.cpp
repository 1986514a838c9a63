#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "test_support.hpp"
#include "unmix3d/cscnet.hpp"
#include "unmix3d/hsi_data.hpp"
#include "unmix3d/kernels.hpp"

namespace unmix3d {
namespace {

NetworkParams toy_params(const NetworkConfig& c, std::uint64_t seed) {
  return init_params(c, generate_synthetic_endmembers(c.bands, c.materials, seed), seed + 1);
}

TEST(NetworkConfig, PaperScaleGeometry) {
  const NetworkConfig moffett = make_config(184, 50, 50, 3);
  EXPECT_EQ(moffett.spectral_stride, 62);
  EXPECT_EQ(moffett.pad_in, 0);
  EXPECT_EQ(moffett.pad_update, 0);
  const NetworkConfig sim = make_config(180, 130, 130, 5);
  EXPECT_EQ(sim.spectral_stride, 36);
  EXPECT_EQ(sim.pad_in, 0);
  EXPECT_EQ(sim.pad_update, 0);
  EXPECT_EQ(sim.channels, 48);
  EXPECT_EQ(sim.iterations, 6);
}

TEST(NetworkConfig, SolvedUpdatePadding) {
  EXPECT_EQ(solve_depth_padding(16, 4, 4, 7), 2);
  const NetworkConfig toy = make_config(16, 8, 8, 3, 4, 2);
  EXPECT_EQ(toy.spectral_stride, 6);
  EXPECT_EQ(toy.pad_in, 6);
  EXPECT_EQ(toy.pad_update, 2);
}

TEST(NetworkConfig, ShapeEquationHoldsOnSweep) {
  for (int l = 20; l <= 200; l += 7)
    for (int p = 2; p <= 6; ++p) {
      NetworkConfig c;
      try {
        c = make_config(l, 4, 4, p, 2, 1);
      } catch (const ConfigError&) {
        continue;
      }
      EXPECT_EQ(c.spectral_stride, (l + p - 1) / p);
      EXPECT_EQ(kernels::conv_output_extent(l, 15, c.spectral_stride, c.pad_in), p);
      EXPECT_EQ(kernels::conv_output_extent(l, 7, c.spectral_stride, c.pad_update), p);
    }
}

TEST(NetworkConfig, InvalidRejected) {
  EXPECT_THROW(make_config(16, 8, 8, 4), ConfigError);  // W_in would need padding 6 > stride 4
  EXPECT_THROW(make_config(10, 8, 8, 10), ConfigError);
  EXPECT_THROW(make_config(120, 2, 8, 4), ConfigError);
}

TEST(Thresholds, ClosedForm) {
  ThresholdParams tp;
  tp.rho = std::log(std::expm1(1.0));  // softplus(rho) = 1
  tp.b_theta = 0.0;
  const std::vector<double> th = compute_thresholds(tp, 2);
  EXPECT_NEAR(th[0], std::log(2.0), 1e-12);
  EXPECT_NEAR(th[1], 0.3132616875182228, 1e-12);
}

TEST(Thresholds, PositiveAndDecreasingForAnyParams) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 500; ++i) {
    ThresholdParams tp{u(rng), u(rng)};
    EXPECT_LT(tp.slope(), 0.0);
    const std::vector<double> th = compute_thresholds(tp, 6);
    for (int k = 0; k < 6; ++k) {
      EXPECT_GT(th[k], 0.0);
      if (k > 0) EXPECT_LT(th[k], th[k - 1]);
    }
  }
}

TEST(SoftThreshold, Formula) {
  Tensor4 x(1, 1, 1, 3);
  x(0, 0, 0, 0) = 3.0;
  x(0, 0, 0, 1) = -0.5;
  x(0, 0, 0, 2) = -4.0;
  const Tensor4 s = soft_threshold(x, 1.0);
  EXPECT_EQ(s(0, 0, 0, 0), 2.0);
  EXPECT_EQ(s(0, 0, 0, 1), 0.0);
  EXPECT_EQ(s(0, 0, 0, 2), -3.0);
  EXPECT_EQ(soft_threshold(x, 0.0), x);
}

TEST(SoftThreshold, SparsityMonotoneInTheta) {
  const Tensor4 x = test::random_tensor(2, 5, 6, 6, 4);
  auto nnz = [](const Tensor4& t) {
    return std::count_if(t.values().begin(), t.values().end(), [](double v) { return v != 0.0; });
  };
  long prev = nnz(x);
  for (double th = 0.05; th < 1.0; th += 0.05) {
    const long n = nnz(soft_threshold(x, th));
    EXPECT_LE(n, prev);
    prev = n;
  }
}

TEST(Network, ZeroInputFixedPoint) {
  const NetworkConfig c = make_config(40, 6, 5, 4, 8, 3);
  const NetworkParams p = toy_params(c, 5);
  const HsiCube zero(40, 6, 5);
  const Tensor4 z = cscb_forward(cube_to_tensor(zero), p, c);
  for (double v : z.values()) EXPECT_EQ(v, 0.0);
  const NetworkOutput out = network_forward(zero, p, c);
  for (double v : out.abundances.values()) EXPECT_DOUBLE_EQ(v, 0.25);
  for (int l = 0; l < 40; ++l) EXPECT_NEAR(out.reconstruction(l, 3, 2), p.decoder.row(l).mean(), 1e-15);
}

TEST(Network, SingleIterationComposition) {
  const NetworkConfig c = make_config(30, 5, 5, 3, 6, 1);
  NetworkParams p = toy_params(c, 6);
  p.thresholds.b_theta = -2.0;
  const HsiCube y = test::random_cube(30, 5, 5, 7);
  const Tensor4 expected = soft_threshold(
      kernels::reference::conv3d(cube_to_tensor(y), p.modules[0].k_in, c.in_geometry()),
      compute_thresholds(p.thresholds, 1)[0]);
  EXPECT_EQ(cscb_forward(cube_to_tensor(y), p, c), expected);
}

TEST(Network, TwoIterationComposition) {
  const NetworkConfig c = make_config(30, 5, 5, 3, 6, 2);
  NetworkParams p = toy_params(c, 8);
  p.thresholds.b_theta = -3.0;
  const HsiCube y = test::random_cube(30, 5, 5, 9);
  const Tensor4 yt = cube_to_tensor(y);
  const std::vector<double> th = compute_thresholds(p.thresholds, 2);
  namespace ref = kernels::reference;
  const Tensor4 z0 = soft_threshold(ref::conv3d(yt, p.modules[0].k_in, c.in_geometry()), th[0]);
  const Tensor4 synth = ref::conv3d_transpose(z0, p.modules[1].k_d, c.update_geometry(), 30, 5, 5);
  const Tensor4 gram = ref::conv3d(synth, p.modules[1].k_u, c.update_geometry());
  Tensor4 pre = ref::conv3d(yt, p.modules[1].k_in, c.in_geometry());
  for (std::size_t i = 0; i < pre.size(); ++i)
    pre.values()[i] += z0.values()[i] - gram.values()[i];
  const Tensor4 z1 = soft_threshold(pre, th[1]);
  const Tensor4 got = cscb_forward(yt, p, c);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.values()[i], z1.values()[i], 1e-12);
}

TEST(Network, AbundanceConstraintsForArbitraryParams) {
  const NetworkConfig c = make_config(24, 4, 4, 3, 4, 2);
  for (std::uint64_t s = 0; s < 5; ++s) {
    NetworkParams p = toy_params(c, s);
    std::mt19937_64 rng(s);
    std::normal_distribution<double> n(0.0, 30.0);
    for (ParamTensor& t : param_tensors(p))
      for (double& v : t.values) v = n(rng);
    const HsiCube y = test::random_cube(24, 4, 4, s + 10, -50.0, 50.0);
    const SimplexCheck chk = check_simplex(encoder_forward(y, p, c));
    EXPECT_GE(chk.min_value, 0.0);
    EXPECT_LE(chk.max_sum_error, 1e-6);
  }
}

TEST(Network, ForwardBitDeterministic) {
  const NetworkConfig c = make_config(40, 8, 8, 4, 8, 3);
  const NetworkParams p = toy_params(c, 11);
  const HsiCube y = test::random_cube(40, 8, 8, 12);
  EXPECT_EQ(network_forward(y, p, c).reconstruction, network_forward(y, p, c).reconstruction);
}

TEST(Decoder, OneHotAndZero) {
  const EndmemberMatrix e = test::random_matrix(6, 3, 13);
  AbundanceMaps a(3, 2, 2);
  a(2, 1, 0) = 1.0;
  const HsiCube y = decoder_forward(a, e);
  for (int l = 0; l < 6; ++l) {
    EXPECT_EQ(y(l, 1, 0), e(l, 2));
    EXPECT_EQ(y(l, 0, 0), 0.0);
  }
}

TEST(Init, KernelBoundsAndThresholdDefaults) {
  const NetworkConfig c = make_config(60, 4, 4, 3, 16, 6);
  const EndmemberMatrix e = generate_synthetic_endmembers(60, 3, 1);
  const NetworkParams p = init_params(c, e, 2);
  EXPECT_EQ(p.decoder, e);
  EXPECT_NEAR(p.thresholds.slope(), -0.1, 1e-12);
  EXPECT_EQ(p.thresholds.b_theta, -4.0);
  for (const IterationModuleParams& m : p.modules) {
    const double bound = std::sqrt(6.0 / m.k_in.fan_in());
    for (double v : m.k_in.values()) EXPECT_LE(std::abs(v), bound);
  }
  EXPECT_EQ(param_tensors(p).size(), 3u * 6 + 4);
  EXPECT_EQ(param_tensors(p).back().name, "decoder");
  EXPECT_TRUE(param_tensors(p).back().decoder);
}

TEST(Init, UpdateOperatorNonExpansive) {
  // Dense assembly of z -> W_u(W_d^T z) column by column on the toy geometry.
  const NetworkConfig c = make_config(16, 8, 8, 3, 4, 2);
  const NetworkParams p = toy_params(c, 5);
  const IterationModuleParams& m = p.modules[1];
  const ConvGeometry geo = c.update_geometry();
  const int n = c.channels * c.materials * c.height * c.width;
  Eigen::MatrixXd g(n, n);
  for (int j = 0; j < n; ++j) {
    Tensor4 e(c.channels, c.materials, c.height, c.width);
    e.values()[j] = 1.0;
    const Tensor4 col = kernels::conv3d(
        kernels::conv3d_transpose(e, m.k_d, geo, c.bands, c.height, c.width), m.k_u, geo);
    for (int i = 0; i < n; ++i) g(i, j) = col.values()[i];
  }
  EXPECT_LE((g - g.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
  EXPECT_NEAR(eig.eigenvalues().maxCoeff(), 1.0, 1e-3);
}

TEST(Init, CodesStayBoundedAcrossIterations) {
  // Soft thresholding and I - W_u W_d^T are non-expansive at init, so
  // ||z_k|| <= ||z_{k-1}|| + ||W_in^(k) Y||.
  const NetworkConfig c = make_config(60, 12, 12, 3, 8, 6);
  const NetworkParams p = toy_params(c, 9);
  const HsiCube y = test::random_cube(60, 12, 12, 10);
  const NetworkOutput out = network_forward(y, p, c);
  auto norm = [](const Tensor4& t) {
    double s = 0.0;
    for (double v : t.values()) s += v * v;
    return std::sqrt(s);
  };
  double bound = 0.0;
  for (int k = 0; k < c.iterations; ++k) {
    bound = bound * (1.0 + 1e-3) +
            norm(kernels::conv3d(cube_to_tensor(y), p.modules[k].k_in, c.in_geometry()));
    EXPECT_LE(norm(out.cache.codes[k]), bound) << "iteration " << k;
  }
}

TEST(Init, ShapeMismatchThrows) {
  const NetworkConfig c = make_config(60, 4, 4, 3, 4, 2);
  EXPECT_THROW(init_params(c, EndmemberMatrix::Ones(60, 4), 1), DimensionError);
  const NetworkParams p = toy_params(c, 1);
  EXPECT_THROW(encoder_forward(HsiCube(59, 4, 4), p, c), DimensionError);
}

}  // namespace
}  // namespace unmix3d
