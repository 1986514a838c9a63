#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "unmix3d/error.hpp"

namespace unmix3d {

// Dense depth x height x width array stored depth-major, then row-major.
// The tag keeps hyperspectral cubes and abundance maps from being mixed up;
// both share the same layout.
template <class Tag>
class Cube {
 public:
  Cube() = default;
  Cube(int depth, int height, int width, double fill = 0.0)
      : depth_(depth), height_(height), width_(width) {
    if (depth <= 0 || height <= 0 || width <= 0) {
      throw DimensionError("cube dimensions must be positive");
    }
    values_.assign(static_cast<std::size_t>(depth) * height * width, fill);
  }
  Cube(int depth, int height, int width, std::vector<double> values)
      : depth_(depth), height_(height), width_(width), values_(std::move(values)) {
    if (depth <= 0 || height <= 0 || width <= 0) {
      throw DimensionError("cube dimensions must be positive");
    }
    if (values_.size() != static_cast<std::size_t>(depth) * height * width) {
      throw DimensionError("cube value count does not match dimensions");
    }
  }

  int depth() const { return depth_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int pixel_count() const { return height_ * width_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int d, int row, int col) { return values_[index(d, row, col)]; }
  double operator()(int d, int row, int col) const { return values_[index(d, row, col)]; }

  // Band (or material) plane d as a contiguous row-major span.
  std::span<double> plane(int d) {
    return {values_.data() + static_cast<std::size_t>(d) * pixel_count(),
            static_cast<std::size_t>(pixel_count())};
  }
  std::span<const double> plane(int d) const {
    return {values_.data() + static_cast<std::size_t>(d) * pixel_count(),
            static_cast<std::size_t>(pixel_count())};
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const Cube& other) const {
    return depth_ == other.depth_ && height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Cube&, const Cube&) = default;

 private:
  std::size_t index(int d, int row, int col) const {
    return (static_cast<std::size_t>(d) * height_ + row) * width_ + col;
  }

  int depth_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

struct HsiTag {};
struct AbundanceTag {};

// L bands x H rows x W columns of radiance or reflectance.
using HsiCube = Cube<HsiTag>;
// P materials x H x W; nonnegative and summing to one per pixel when valid.
using AbundanceMaps = Cube<AbundanceTag>;

// L x N, column j holds the spectrum of pixel j = row * W + col.
using PixelMatrix = Eigen::MatrixXd;
// L x P, column p holds the spectrum of endmember p.
using EndmemberMatrix = Eigen::MatrixXd;

PixelMatrix reshape_to_matrix(const HsiCube& cube);
HsiCube reshape_to_cube(const PixelMatrix& matrix, int height, int width);

// Same reshapes for abundance maps (P x N matrix).
Eigen::MatrixXd abundances_to_matrix(const AbundanceMaps& maps);
AbundanceMaps abundances_from_matrix(const Eigen::MatrixXd& matrix, int height, int width);

// Reinterprets the layout under another tag; used when abundance maps are
// stored in the cube container.
template <class To, class From>
Cube<To> retag(const Cube<From>& cube) {
  return Cube<To>(cube.depth(), cube.height(), cube.width(),
                  std::vector<double>(cube.values().begin(), cube.values().end()));
}

// Maximum deviation of any pixel's abundance sum from one, and the smallest
// abundance value.
struct SimplexCheck {
  double max_sum_error = 0.0;
  double min_value = 0.0;
};
SimplexCheck check_simplex(const AbundanceMaps& maps);

}  // namespace unmix3d
