#include <algorithm>
#include <cmath>

#include "unmix3d/cube.hpp"

namespace unmix3d {

namespace {

template <class Tag>
Eigen::MatrixXd to_matrix(const Cube<Tag>& cube) {
  const int n = cube.pixel_count();
  Eigen::MatrixXd m(cube.depth(), n);
  for (int d = 0; d < cube.depth(); ++d) {
    const auto plane = cube.plane(d);
    for (int j = 0; j < n; ++j) m(d, j) = plane[j];
  }
  return m;
}

template <class Tag>
Cube<Tag> from_matrix(const Eigen::MatrixXd& m, int height, int width) {
  if (height <= 0 || width <= 0 || m.cols() != static_cast<Eigen::Index>(height) * width) {
    throw DimensionError("reshape: matrix has " + std::to_string(m.cols()) + " columns, expected " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
  Cube<Tag> cube(static_cast<int>(m.rows()), height, width);
  for (int d = 0; d < cube.depth(); ++d) {
    auto plane = cube.plane(d);
    for (int j = 0; j < cube.pixel_count(); ++j) plane[j] = m(d, j);
  }
  return cube;
}

}  // namespace

PixelMatrix reshape_to_matrix(const HsiCube& cube) { return to_matrix(cube); }

HsiCube reshape_to_cube(const PixelMatrix& matrix, int height, int width) {
  return from_matrix<HsiTag>(matrix, height, width);
}

Eigen::MatrixXd abundances_to_matrix(const AbundanceMaps& maps) { return to_matrix(maps); }

AbundanceMaps abundances_from_matrix(const Eigen::MatrixXd& matrix, int height, int width) {
  return from_matrix<AbundanceTag>(matrix, height, width);
}

SimplexCheck check_simplex(const AbundanceMaps& maps) {
  SimplexCheck result;
  result.min_value = maps.values().empty() ? 0.0 : maps.values()[0];
  for (int j = 0; j < maps.pixel_count(); ++j) {
    double sum = 0.0;
    for (int p = 0; p < maps.depth(); ++p) {
      const double v = maps.plane(p)[j];
      sum += v;
      result.min_value = std::min(result.min_value, v);
    }
    result.max_sum_error = std::max(result.max_sum_error, std::abs(sum - 1.0));
  }
  return result;
}

}  // namespace unmix3d
