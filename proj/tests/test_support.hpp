#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "unmix3d/cube.hpp"
#include "unmix3d/tensor.hpp"

namespace unmix3d::test {

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed, double lo = -1.0,
                                     double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline HsiCube random_cube(int l, int h, int w, std::uint64_t seed, double lo = 0.0,
                           double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  HsiCube c(l, h, w);
  for (double& v : c.values()) v = u(rng);
  return c;
}

inline Tensor4 random_tensor(int c, int d, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor4 t(c, d, h, w);
  for (double& v : t.values()) v = u(rng);
  return t;
}

inline ConvKernel random_kernel(int co, int ci, int kd, int kh, int kw, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ConvKernel k(co, ci, kd, kh, kw);
  for (double& v : k.values()) v = u(rng);
  return k;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("unmix3d_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace unmix3d::test
