#pragma once

#include <cstdint>
#include <optional>

#include "unmix3d/cube.hpp"

namespace unmix3d {

// Gaussian standard deviations in voxels: x = columns, y = rows, z = bands.
struct GaussianSigma {
  double x = 1.0;
  double y = 1.0;
  double z = 1.0;
};

// Separable normalized 3D Gaussian smoothing. Each axis kernel is truncated at
// radius ceil(3 sigma) and renormalized to unit sum; borders use half-sample
// symmetric reflection (the edge voxel is repeated), which keeps the global
// mean unchanged. A zero sigma leaves that axis untouched.
HsiCube gaussian_filter_3d(const HsiCube& cube, const GaussianSigma& sigma);
AbundanceMaps gaussian_filter_3d(const AbundanceMaps& maps, const GaussianSigma& sigma);

// Truncated, unit-sum 1D Gaussian taps for offsets -r..r, r = ceil(3 sigma).
std::vector<double> gaussian_taps(double sigma);

// Noise level: nullopt means noiseless.
using SnrDb = std::optional<double>;

// Adds i.i.d. N(0, s^2) noise with s^2 = mean(Y^2) * 10^(-snr/10).
HsiCube add_noise_at_snr(const HsiCube& cube, SnrDb snr_db, std::uint64_t seed);

struct AbundanceFieldOptions {
  // Spatial blur of the per-material white noise, in pixels.
  double field_sigma = 8.0;
  // Each blurred field is standardized to zero mean and unit variance and
  // scaled by this gain before the per-pixel softmax.
  double contrast = 4.0;
  std::uint64_t seed = 0;
};

// Smooth random abundance maps satisfying ANC/ASC by construction.
AbundanceMaps generate_gaussian_field_abundances(int materials, int height, int width,
                                                 const AbundanceFieldOptions& options);

// Turns, for every material, the `per_material` pixels where it is most
// dominant into pure (one-hot) pixels. Pixels already made pure are skipped.
void plant_pure_pixels(AbundanceMaps& maps, int per_material);

// Smooth positive spectra (sums of Gaussian bumps over band index), each
// scaled to a maximum of one, with pairwise spectral angle >= min_angle.
EndmemberMatrix generate_synthetic_endmembers(int bands, int materials, std::uint64_t seed,
                                              double min_angle = 0.15);

struct SyntheticScene {
  HsiCube cube;
  EndmemberMatrix gt_endmembers;
  AbundanceMaps gt_abundances;
  SnrDb snr_db;
  std::uint64_t seed = 0;
};

// Linear mixture E*A plus noise at the requested SNR.
SyntheticScene synthesize_scene(const EndmemberMatrix& endmembers, const AbundanceMaps& abundances,
                                SnrDb snr_db, std::uint64_t seed);

// E*A without noise.
HsiCube mix(const EndmemberMatrix& endmembers, const AbundanceMaps& abundances);

// Spectral angle between two nonzero vectors, in radians (unclamped cosine
// apart from rounding into [-1, 1]).
double spectral_angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace unmix3d
