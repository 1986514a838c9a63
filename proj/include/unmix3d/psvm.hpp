#pragma once

#include <vector>

#include "unmix3d/cube.hpp"
#include "unmix3d/hsi_data.hpp"
#include "unmix3d/subspace.hpp"

namespace unmix3d {

struct PsvmOptions {
  // false gives the PSVM_ND variant (no conditional denoising).
  bool denoise = true;
  SnrFormula snr_formula = SnrFormula::kDecibel;
  GaussianSigma gaussian_sigma{1.0, 1.0, 1.0};
  double snr_threshold_offset = 0.0;
  int max_sweeps = 50;
  int search_restarts = 16;  // simplex search starts (see svm_maximize)
};

struct PsvmResult {
  EndmemberMatrix endmembers;  // L x P, columns by ascending pixel index
  std::vector<int> indices;    // selected pixel indices (row * W + col)
  double snr_initial = 0.0;
  double snr_final = 0.0;  // after optional denoising; drives the branch
  double snr_threshold = 0.0;
  bool denoised = false;
  bool high_snr_branch = false;
  double sq_volume = 0.0;
};

PsvmResult psvm_extract_detailed(const HsiCube& cube, int materials, const PsvmOptions& options = {});
EndmemberMatrix psvm_extract(const HsiCube& cube, int materials, const PsvmOptions& options = {});

// Divides every column by its inner product with the mean column, removing a
// per-pixel scale factor. Throws NumericalError naming the first pixel whose
// inner product is below 1e-12 in magnitude.
Eigen::MatrixXd projective_normalize(const Eigen::MatrixXd& xd);

// Plain simplex-volume baseline: no denoising and no SNR branching; the search
// runs on the mean-removed top-(P-1) projection and the selected pixels'
// original spectra are returned.
PsvmResult svm_baseline_extract(const HsiCube& cube, int materials, int max_sweeps = 50,
                                int search_restarts = 16);

}  // namespace unmix3d
