#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "unmix3d/hsi_data.hpp"

namespace unmix3d {
namespace {

using test::random_cube;

TEST(Reshape, SingleVoxel) {
  HsiCube c(1, 1, 1, 5.0);
  const PixelMatrix m = reshape_to_matrix(c);
  ASSERT_EQ(m.rows(), 1);
  ASSERT_EQ(m.cols(), 1);
  EXPECT_EQ(m(0, 0), 5.0);
  EXPECT_EQ(reshape_to_cube(m, 1, 1)(0, 0, 0), 5.0);
}

TEST(Reshape, PixelsAreColumnsInRowMajorOrder) {
  HsiCube c(2, 1, 2, std::vector<double>{1, 2, 3, 4});  // band0 = [a,b], band1 = [c,d]
  const PixelMatrix m = reshape_to_matrix(c);
  EXPECT_EQ(m(0, 0), 1);
  EXPECT_EQ(m(1, 0), 3);
  EXPECT_EQ(m(0, 1), 2);
  EXPECT_EQ(m(1, 1), 4);
}

TEST(Reshape, RoundTripIsIdentity) {
  for (int l = 1; l <= 3; ++l)
    for (int h = 1; h <= 3; ++h)
      for (int w = 1; w <= 3; ++w) {
        const HsiCube c = random_cube(l, h, w, 100 * l + 10 * h + w);
        EXPECT_EQ(reshape_to_cube(reshape_to_matrix(c), h, w), c);
      }
  const HsiCube big = random_cube(37, 21, 29, 9);
  EXPECT_EQ(reshape_to_cube(reshape_to_matrix(big), 21, 29), big);
}

TEST(Reshape, IndexIdentityOracle) {
  const HsiCube c = random_cube(4, 3, 3, 1);
  const PixelMatrix m = reshape_to_matrix(c);
  for (int l = 0; l < 4; ++l)
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) EXPECT_EQ(m(l, r * 3 + col), c(l, r, col));
}

TEST(Reshape, PixelCountMismatchThrows) {
  EXPECT_THROW(reshape_to_cube(PixelMatrix::Zero(2, 4), 3, 2), DimensionError);
}

TEST(GaussianFilter, ConstantCubeUnchanged) {
  const HsiCube c(6, 5, 7, 0.7);
  const HsiCube f = gaussian_filter_3d(c, {1.3, 2.0, 0.8});
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(f.values()[i], 0.7, 1e-15);
}

TEST(GaussianFilter, ZeroSigmaIsIdentity) {
  const HsiCube c = random_cube(5, 4, 6, 3);
  EXPECT_EQ(gaussian_filter_3d(c, {0, 0, 0}), c);
}

TEST(GaussianFilter, ImpulseGivesTruncatedNormalizedKernel) {
  HsiCube c(9, 9, 9);
  c(4, 4, 4) = 1.0;
  const HsiCube f = gaussian_filter_3d(c, {1, 1, 1});
  // Closed form: product of per-axis exp(-t^2/2) over |t| <= 3, each normalized.
  double norm = 0.0;
  for (int t = -3; t <= 3; ++t) norm += std::exp(-0.5 * t * t);
  auto g = [&](int t) { return std::abs(t) <= 3 ? std::exp(-0.5 * t * t) / norm : 0.0; };
  for (int z = 0; z < 9; ++z)
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) EXPECT_NEAR(f(z, y, x), g(z - 4) * g(y - 4) * g(x - 4), 1e-15);
}

TEST(GaussianFilter, TapsAreNormalizedWithCeilThreeSigmaRadius) {
  const std::vector<double> taps = gaussian_taps(1.2);
  EXPECT_EQ(taps.size(), 2u * 4 + 1);
  EXPECT_NEAR(std::accumulate(taps.begin(), taps.end(), 0.0), 1.0, 1e-15);
}

TEST(GaussianFilter, PreservesGlobalMean) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const HsiCube c = random_cube(11, 8, 13, s);
    const HsiCube f = gaussian_filter_3d(c, {2.5, 1.0, 3.0});
    const double m0 = std::accumulate(c.values().begin(), c.values().end(), 0.0);
    const double m1 = std::accumulate(f.values().begin(), f.values().end(), 0.0);
    EXPECT_NEAR(m1 / m0, 1.0, 1e-6);
  }
}

TEST(GaussianFilter, NegativeSigmaRejected) {
  EXPECT_THROW(gaussian_filter_3d(HsiCube(2, 2, 2), {-1, 1, 1}), ConfigError);
}

double realized_snr(const HsiCube& clean, const HsiCube& noisy) {
  double s = 0.0, n = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    s += clean.values()[i] * clean.values()[i];
    const double d = noisy.values()[i] - clean.values()[i];
    n += d * d;
  }
  return 10.0 * std::log10(s / n);
}

TEST(Noise, NoiselessIsIdentity) {
  const HsiCube c = random_cube(3, 4, 5, 2);
  EXPECT_EQ(add_noise_at_snr(c, std::nullopt, 1), c);
}

TEST(Noise, RealizedSnrAtPaperScale) {
  const EndmemberMatrix e = generate_synthetic_endmembers(180, 5, 1);
  const AbundanceMaps a = generate_gaussian_field_abundances(5, 130, 130, {.seed = 2});
  const HsiCube clean = mix(e, a);
  EXPECT_NEAR(realized_snr(clean, add_noise_at_snr(clean, 20.0, 3)), 20.0, 0.5);
}

TEST(Noise, RealizedSnrAcrossRange) {
  const HsiCube clean = random_cube(50, 50, 40, 4, 0.1, 1.0);  // 1e5 voxels
  for (double snr : {5.0, 12.5, 25.0, 40.0}) {
    EXPECT_NEAR(realized_snr(clean, add_noise_at_snr(clean, snr, 5)), snr, 0.5) << snr;
  }
}

TEST(Noise, SeedDeterminism) {
  const HsiCube c = random_cube(4, 6, 6, 8);
  EXPECT_EQ(add_noise_at_snr(c, 15.0, 42), add_noise_at_snr(c, 15.0, 42));
  EXPECT_NE(add_noise_at_snr(c, 15.0, 42), add_noise_at_snr(c, 15.0, 43));
}

TEST(Abundances, SimplexConstraintsHold) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const AbundanceMaps a = generate_gaussian_field_abundances(
        3 + static_cast<int>(s), 40, 30, {.field_sigma = 2.0 + s, .contrast = 1.0 + s, .seed = s});
    const SimplexCheck chk = check_simplex(a);
    EXPECT_GE(chk.min_value, 0.0);
    EXPECT_LE(chk.max_sum_error, 1e-6);
  }
}

TEST(Abundances, SeedDeterminism) {
  const AbundanceFieldOptions o{.seed = 77};
  EXPECT_EQ(generate_gaussian_field_abundances(4, 20, 20, o),
            generate_gaussian_field_abundances(4, 20, 20, o));
}

TEST(Abundances, MapsAreNotNearlyUniform) {
  const AbundanceMaps a = generate_gaussian_field_abundances(4, 64, 64, {.seed = 5});
  double max_value = 0.0;
  for (double v : a.values()) max_value = std::max(max_value, v);
  EXPECT_GT(max_value, 0.8);
}

TEST(Abundances, PlantedPurePixelsAreOneHot) {
  AbundanceMaps a = generate_gaussian_field_abundances(4, 32, 32, {.seed = 6});
  plant_pure_pixels(a, 2);
  for (int p = 0; p < 4; ++p) {
    int pure = 0;
    for (int i = 0; i < 32 * 32; ++i) pure += a.plane(p)[i] == 1.0;
    EXPECT_GE(pure, 2) << p;
  }
  EXPECT_LE(check_simplex(a).max_sum_error, 1e-12);
}

TEST(Endmembers, AnglesPositivityDeterminism) {
  const EndmemberMatrix e = generate_synthetic_endmembers(120, 5, 9);
  ASSERT_EQ(e.rows(), 120);
  ASSERT_EQ(e.cols(), 5);
  EXPECT_GT(e.minCoeff(), 0.0);
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) EXPECT_GE(spectral_angle(e.col(i), e.col(j)), 0.15);
  EXPECT_EQ(e, generate_synthetic_endmembers(120, 5, 9));
}

TEST(Synthesis, PurePixelReproducesEndmember) {
  const EndmemberMatrix e = generate_synthetic_endmembers(30, 3, 1);
  AbundanceMaps a(3, 2, 2);
  a(1, 0, 1) = 1.0;
  a(0, 0, 0) = a(2, 1, 0) = a(0, 1, 1) = 1.0;
  const SyntheticScene s = synthesize_scene(e, a, std::nullopt, 0);
  for (int l = 0; l < 30; ++l) EXPECT_EQ(s.cube(l, 0, 1), e(l, 1));
}

TEST(Synthesis, SceneIsMixturePlusNoise) {
  const EndmemberMatrix e = generate_synthetic_endmembers(20, 3, 2);
  const AbundanceMaps a = generate_gaussian_field_abundances(3, 10, 10, {.seed = 3});
  const SyntheticScene s = synthesize_scene(e, a, 25.0, 4);
  EXPECT_EQ(s.cube, add_noise_at_snr(mix(e, a), 25.0, 4));
  EXPECT_EQ(s.gt_endmembers, e);
  EXPECT_EQ(s.gt_abundances, a);
}

TEST(Synthesis, ShapeMismatchThrows) {
  EXPECT_THROW(mix(EndmemberMatrix::Ones(5, 3), AbundanceMaps(2, 2, 2)), DimensionError);
}

}  // namespace
}  // namespace unmix3d
