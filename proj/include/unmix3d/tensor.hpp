#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "unmix3d/error.hpp"

namespace unmix3d {

// channels x depth x height x width feature volume.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int channels, int depth, int height, int width, double fill = 0.0)
      : channels_(channels), depth_(depth), height_(height), width_(width) {
    if (channels <= 0 || depth <= 0 || height <= 0 || width <= 0) {
      throw DimensionError("tensor dimensions must be positive");
    }
    values_.assign(static_cast<std::size_t>(channels) * depth * height * width, fill);
  }

  int channels() const { return channels_; }
  int depth() const { return depth_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int c, int d, int h, int w) { return values_[index(c, d, h, w)]; }
  double operator()(int c, int d, int h, int w) const { return values_[index(c, d, h, w)]; }

  // Pointer to the row (c, d, h, 0).
  double* row(int c, int d, int h) { return values_.data() + index(c, d, h, 0); }
  const double* row(int c, int d, int h) const { return values_.data() + index(c, d, h, 0); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const Tensor4& o) const {
    return channels_ == o.channels_ && depth_ == o.depth_ && height_ == o.height_ &&
           width_ == o.width_;
  }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  std::size_t index(int c, int d, int h, int w) const {
    return ((static_cast<std::size_t>(c) * depth_ + d) * height_ + h) * width_ + w;
  }

  int channels_ = 0;
  int depth_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

// out_channels x in_channels x kd x kh x kw convolution weights.
class ConvKernel {
 public:
  ConvKernel() = default;
  ConvKernel(int out_channels, int in_channels, int kd, int kh, int kw, double fill = 0.0)
      : out_(out_channels), in_(in_channels), kd_(kd), kh_(kh), kw_(kw) {
    if (out_channels <= 0 || in_channels <= 0 || kd <= 0 || kh <= 0 || kw <= 0) {
      throw DimensionError("kernel dimensions must be positive");
    }
    values_.assign(static_cast<std::size_t>(out_channels) * in_channels * kd * kh * kw, fill);
  }

  int out_channels() const { return out_; }
  int in_channels() const { return in_; }
  int kd() const { return kd_; }
  int kh() const { return kh_; }
  int kw() const { return kw_; }
  std::size_t size() const { return values_.size(); }
  // Number of inputs feeding one output voxel.
  int fan_in() const { return in_ * kd_ * kh_ * kw_; }

  double& operator()(int o, int i, int t, int y, int x) { return values_[index(o, i, t, y, x)]; }
  double operator()(int o, int i, int t, int y, int x) const {
    return values_[index(o, i, t, y, x)];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const ConvKernel& o) const {
    return out_ == o.out_ && in_ == o.in_ && kd_ == o.kd_ && kh_ == o.kh_ && kw_ == o.kw_;
  }

  friend bool operator==(const ConvKernel&, const ConvKernel&) = default;

 private:
  std::size_t index(int o, int i, int t, int y, int x) const {
    return (((static_cast<std::size_t>(o) * in_ + i) * kd_ + t) * kh_ + y) * kw_ + x;
  }

  int out_ = 0;
  int in_ = 0;
  int kd_ = 0;
  int kh_ = 0;
  int kw_ = 0;
  std::vector<double> values_;
};

// Stride along depth only; spatial stride is always 1.
struct ConvGeometry {
  int stride_d = 1;
  int pad_d = 0;
  int pad_h = 0;
  int pad_w = 0;
};

}  // namespace unmix3d
