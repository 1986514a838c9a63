#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "unmix3d/hsi_data.hpp"

namespace unmix3d {

double spectral_angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DimensionError("spectral angle: length mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw NumericalError("spectral angle: zero-norm vector");
  const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return std::acos(c);
}

HsiCube add_noise_at_snr(const HsiCube& cube, SnrDb snr_db, std::uint64_t seed) {
  if (!snr_db) return cube;
  if (!std::isfinite(*snr_db)) throw ConfigError("noise: SNR must be finite");
  double power = 0.0;
  for (double v : cube.values()) power += v * v;
  power /= static_cast<double>(cube.size());
  const double sigma = std::sqrt(power * std::pow(10.0, -*snr_db / 10.0));

  HsiCube noisy = cube;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : noisy.values()) v += noise(rng);
  return noisy;
}

AbundanceMaps generate_gaussian_field_abundances(int materials, int height, int width,
                                                 const AbundanceFieldOptions& options) {
  if (materials < 2) throw ConfigError("abundance fields: at least two materials required");
  if (!(options.field_sigma >= 0.0) || !(options.contrast > 0.0)) {
    throw ConfigError("abundance fields: field sigma must be >= 0 and contrast > 0");
  }
  AbundanceMaps logits(materials, height, width);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> white(0.0, 1.0);
  for (double& v : logits.values()) v = white(rng);
  logits = gaussian_filter_3d(logits, {options.field_sigma, options.field_sigma, 0.0});

  const int n = logits.pixel_count();
  for (int p = 0; p < materials; ++p) {
    auto plane = logits.plane(p);
    double mean = 0.0;
    for (double v : plane) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : plane) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    const double scale = sd > 0.0 ? options.contrast / sd : 0.0;
    for (double& v : plane) v = (v - mean) * scale;
  }

  AbundanceMaps maps(materials, height, width);
  std::vector<double> e(materials);
  for (int j = 0; j < n; ++j) {
    double peak = logits.plane(0)[j];
    for (int p = 1; p < materials; ++p) peak = std::max(peak, logits.plane(p)[j]);
    double sum = 0.0;
    for (int p = 0; p < materials; ++p) {
      e[p] = std::exp(logits.plane(p)[j] - peak);
      sum += e[p];
    }
    for (int p = 0; p < materials; ++p) maps.plane(p)[j] = e[p] / sum;
  }
  return maps;
}

void plant_pure_pixels(AbundanceMaps& maps, int per_material) {
  const int n = maps.pixel_count();
  const int materials = maps.depth();
  if (per_material < 0 || static_cast<long>(per_material) * materials > n) {
    throw ConfigError("pure pixels: requested count exceeds pixel count");
  }
  std::vector<bool> taken(n, false);
  for (int p = 0; p < materials; ++p) {
    for (int c = 0; c < per_material; ++c) {
      int best = -1;
      for (int j = 0; j < n; ++j) {
        if (taken[j]) continue;
        if (best < 0 || maps.plane(p)[j] > maps.plane(p)[best]) best = j;
      }
      taken[best] = true;
      for (int q = 0; q < materials; ++q) maps.plane(q)[best] = q == p ? 1.0 : 0.0;
    }
  }
}

EndmemberMatrix generate_synthetic_endmembers(int bands, int materials, std::uint64_t seed,
                                              double min_angle) {
  if (materials < 1 || materials >= bands) {
    throw ConfigError("endmember library: need 1 <= materials < bands");
  }
  constexpr int kMaxAttempts = 10000;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> bump_count(3, 6);
  std::uniform_real_distribution<double> center(0.0, bands - 1.0);
  std::uniform_real_distribution<double> width(std::max(1.0, 0.03 * bands),
                                               std::max(1.5, 0.2 * bands));
  std::uniform_real_distribution<double> amplitude(0.2, 1.0);

  EndmemberMatrix e(bands, materials);
  for (int p = 0; p < materials; ++p) {
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
      Eigen::VectorXd s = Eigen::VectorXd::Constant(bands, 0.02);
      const int bumps = bump_count(rng);
      for (int b = 0; b < bumps; ++b) {
        const double c = center(rng);
        const double w = width(rng);
        const double a = amplitude(rng);
        for (int l = 0; l < bands; ++l) s[l] += a * std::exp(-0.5 * (l - c) * (l - c) / (w * w));
      }
      s /= s.maxCoeff();
      accepted = true;
      for (int q = 0; q < p && accepted; ++q) {
        accepted = spectral_angle(s, e.col(q)) >= min_angle;
      }
      if (accepted) e.col(p) = s;
    }
    if (!accepted) {
      throw NumericalError("endmember library: could not reach the requested angular separation");
    }
  }
  return e;
}

HsiCube mix(const EndmemberMatrix& endmembers, const AbundanceMaps& abundances) {
  if (endmembers.cols() != abundances.depth()) {
    throw DimensionError("mix: endmember count " + std::to_string(endmembers.cols()) +
                         " != abundance maps " + std::to_string(abundances.depth()));
  }
  const Eigen::MatrixXd a = abundances_to_matrix(abundances);
  return reshape_to_cube(endmembers * a, abundances.height(), abundances.width());
}

SyntheticScene synthesize_scene(const EndmemberMatrix& endmembers, const AbundanceMaps& abundances,
                                SnrDb snr_db, std::uint64_t seed) {
  SyntheticScene scene;
  scene.cube = add_noise_at_snr(mix(endmembers, abundances), snr_db, seed);
  scene.gt_endmembers = endmembers;
  scene.gt_abundances = abundances;
  scene.snr_db = snr_db;
  scene.seed = seed;
  return scene;
}

}  // namespace unmix3d
