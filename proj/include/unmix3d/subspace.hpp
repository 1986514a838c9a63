#pragma once

#include <vector>

#include <Eigen/Dense>

#include "unmix3d/cube.hpp"

namespace unmix3d {

// How the SNR estimate is reported. kDecibel is 10*log10(ratio); kAsWritten
// is |log10(ratio)|, kept only to audit the literal pseudocode expression.
enum class SnrFormula { kDecibel, kAsWritten };

// Orthonormal basis of the dominant eigenvectors of R*R^T/N.
struct ProjectionBasis {
  Eigen::MatrixXd vectors;      // L x d, orthonormal columns
  Eigen::VectorXd eigenvalues;  // d values, non-increasing
  int dimension() const { return static_cast<int>(vectors.cols()); }
};

struct ProjectedData {
  ProjectionBasis basis;
  Eigen::MatrixXd coords;  // d x N, basis^T * R
};

// Top-d eigenvectors of the correlation matrix R*R^T/N by descending
// eigenvalue. Each column is signed so its largest-magnitude entry (first one
// on ties) is positive.
ProjectionBasis correlation_eigs(const Eigen::MatrixXd& r, int d);

ProjectedData project(const Eigen::MatrixXd& r, int d);

// Subspace SNR estimate assuming `materials` endmembers. The ratio argument is
// clamped below at 1e-12 and its denominator at 1e-12 * P_R, so noiseless data
// yields a large finite value instead of a division by zero.
double estimate_snr(const PixelMatrix& r, int materials, SnrFormula formula = SnrFormula::kDecibel);

// 22 + 10*log10(P) + offset, in dB.
double snr_threshold(int materials, double offset_db = 0.0);

// Squared volume of the simplex spanned by the P columns of `points` (d x P),
// from the bordered Cayley-Menger determinant. Rounding negatives clamp to 0.
double cayley_menger_sq_volume(const Eigen::MatrixXd& points);

struct SimplexSearchResult {
  std::vector<int> indices;     // ascending column indices
  double sq_volume = 0.0;
  double seed_sq_volume = 0.0;  // greedy seeding from the largest-norm column
  int sweeps = 0;               // refinement sweeps of the winning start
};

// Deterministic maximum-volume simplex search over the columns of `rd`. One
// start is greedy seeding from a column followed by slot-by-slot replacement
// sweeps until no strict improvement (relative 1e-12) or `max_sweeps`. Starts
// are made from the `restarts` largest-norm columns and the largest volume
// wins (earliest start on ties). Ties inside a start go to the lowest index.
SimplexSearchResult svm_maximize(const Eigen::MatrixXd& rd, int materials, int max_sweeps = 50,
                                 int restarts = 16);

}  // namespace unmix3d
