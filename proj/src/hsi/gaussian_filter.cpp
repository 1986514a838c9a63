#include <cmath>
#include <vector>

#include "unmix3d/hsi_data.hpp"

namespace unmix3d {

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma >= 0.0)) throw ConfigError("gaussian filter: sigma must be >= 0");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

namespace {

// Half-sample symmetric reflection: -1 -> 0, n -> n - 1, period 2n.
int reflect(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

// Filters every line of `count` samples spaced `stride` apart, starting at
// each offset in `starts`, in place.
void filter_lines(std::vector<double>& v, const std::vector<double>& taps, int count, long stride,
                  const std::vector<long>& starts) {
  if (taps.size() == 1) return;
  const int radius = static_cast<int>(taps.size() / 2);
  const long lines = static_cast<long>(starts.size());
#pragma omp parallel
  {
    std::vector<double> line(count);
#pragma omp for schedule(static)
    for (long s = 0; s < lines; ++s) {
      const long base = starts[s];
      for (int i = 0; i < count; ++i) line[i] = v[base + i * stride];
      for (int i = 0; i < count; ++i) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * line[reflect(i + k, count)];
        v[base + i * stride] = acc;
      }
    }
  }
}

void filter_values(std::vector<double>& v, int depth, int height, int width,
                   const GaussianSigma& sigma) {
  const long plane = static_cast<long>(height) * width;
  // Bands (z), then rows (y), then columns (x).
  {
    std::vector<long> starts(plane);
    for (long j = 0; j < plane; ++j) starts[j] = j;
    filter_lines(v, gaussian_taps(sigma.z), depth, plane, starts);
  }
  {
    std::vector<long> starts;
    starts.reserve(static_cast<std::size_t>(depth) * width);
    for (int d = 0; d < depth; ++d)
      for (int c = 0; c < width; ++c) starts.push_back(d * plane + c);
    filter_lines(v, gaussian_taps(sigma.y), height, width, starts);
  }
  {
    std::vector<long> starts;
    starts.reserve(static_cast<std::size_t>(depth) * height);
    for (int d = 0; d < depth; ++d)
      for (int r = 0; r < height; ++r) starts.push_back(d * plane + static_cast<long>(r) * width);
    filter_lines(v, gaussian_taps(sigma.x), width, 1, starts);
  }
}

template <class Tag>
Cube<Tag> filter_cube(const Cube<Tag>& cube, const GaussianSigma& sigma) {
  std::vector<double> v(cube.values().begin(), cube.values().end());
  filter_values(v, cube.depth(), cube.height(), cube.width(), sigma);
  return Cube<Tag>(cube.depth(), cube.height(), cube.width(), std::move(v));
}

}  // namespace

HsiCube gaussian_filter_3d(const HsiCube& cube, const GaussianSigma& sigma) {
  return filter_cube(cube, sigma);
}

AbundanceMaps gaussian_filter_3d(const AbundanceMaps& maps, const GaussianSigma& sigma) {
  return filter_cube(maps, sigma);
}

}  // namespace unmix3d
