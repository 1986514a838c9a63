#include <cmath>

#include "unmix3d/psvm.hpp"

namespace unmix3d {

Eigen::MatrixXd projective_normalize(const Eigen::MatrixXd& xd) {
  const Eigen::VectorXd u = xd.rowwise().mean();
  Eigen::MatrixXd rd(xd.rows(), xd.cols());
  for (Eigen::Index j = 0; j < xd.cols(); ++j) {
    const double dot = xd.col(j).dot(u);
    if (!(std::abs(dot) > 1e-12)) {
      throw NumericalError("projective normalization: pixel " + std::to_string(j) +
                           " is orthogonal to the mean direction");
    }
    rd.col(j) = xd.col(j) / dot;
  }
  return rd;
}

namespace {

void check_inputs(const HsiCube& cube, int materials) {
  if (materials < 2 || materials >= cube.depth()) {
    throw ConfigError("endmember count " + std::to_string(materials) + " outside [2, " +
                      std::to_string(cube.depth() - 1) + "]");
  }
  if (cube.pixel_count() < materials) throw ConfigError("fewer pixels than endmembers");
}

// All pixels (numerically) identical: no simplex can be formed.
void check_rank(const PixelMatrix& r) {
  const Eigen::VectorXd mean = r.rowwise().mean();
  const double spread = (r.colwise() - mean).colwise().norm().maxCoeff();
  if (!(spread > 1e-12 * std::max(mean.norm(), 1e-300))) {
    throw NumericalError("rank error: all pixels are identical");
  }
}

void check_volume(double v2) {
  if (!(v2 > 0.0)) {
    throw NumericalError("rank error: data does not span a simplex with the requested vertex count");
  }
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(idx[i]);
  return out;
}

}  // namespace

PsvmResult psvm_extract_detailed(const HsiCube& cube, int materials, const PsvmOptions& options) {
  check_inputs(cube, materials);
  if (options.max_sweeps < 1) throw ConfigError("max_sweeps must be >= 1");
  if (options.search_restarts < 1) throw ConfigError("search_restarts must be >= 1");

  PsvmResult result;
  PixelMatrix r = reshape_to_matrix(cube);
  check_rank(r);

  result.snr_threshold = snr_threshold(materials, options.snr_threshold_offset);
  result.snr_initial = estimate_snr(r, materials, options.snr_formula);
  if (options.denoise && result.snr_initial < result.snr_threshold) {
    r = reshape_to_matrix(gaussian_filter_3d(cube, options.gaussian_sigma));
    result.denoised = true;
  }
  result.snr_final = estimate_snr(r, materials, options.snr_formula);
  result.high_snr_branch = result.snr_final > result.snr_threshold;

  if (result.high_snr_branch) {
    const ProjectedData proj = project(r, materials);
    const Eigen::MatrixXd rd = projective_normalize(proj.coords);
    const SimplexSearchResult search = svm_maximize(rd, materials, options.max_sweeps, options.search_restarts);
    check_volume(search.sq_volume);
    result.indices = search.indices;
    result.sq_volume = search.sq_volume;
    result.endmembers = proj.basis.vectors * select_columns(proj.coords, search.indices);
  } else {
    const Eigen::VectorXd mean = r.rowwise().mean();
    const ProjectedData proj = project(r.colwise() - mean, materials - 1);
    const SimplexSearchResult search = svm_maximize(proj.coords, materials, options.max_sweeps,
                                                      options.search_restarts);
    check_volume(search.sq_volume);
    result.indices = search.indices;
    result.sq_volume = search.sq_volume;
    result.endmembers =
        (proj.basis.vectors * select_columns(proj.coords, search.indices)).colwise() + mean;
  }
  return result;
}

EndmemberMatrix psvm_extract(const HsiCube& cube, int materials, const PsvmOptions& options) {
  return psvm_extract_detailed(cube, materials, options).endmembers;
}

PsvmResult svm_baseline_extract(const HsiCube& cube, int materials, int max_sweeps,
                                int search_restarts) {
  check_inputs(cube, materials);
  const PixelMatrix r = reshape_to_matrix(cube);
  check_rank(r);
  const Eigen::VectorXd mean = r.rowwise().mean();
  const ProjectedData proj = project(r.colwise() - mean, materials - 1);
  const SimplexSearchResult search = svm_maximize(proj.coords, materials, max_sweeps, search_restarts);
  check_volume(search.sq_volume);

  PsvmResult result;
  result.indices = search.indices;
  result.sq_volume = search.sq_volume;
  result.endmembers = select_columns(r, search.indices);
  return result;
}

}  // namespace unmix3d
