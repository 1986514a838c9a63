#pragma once

#include <vector>

#include "unmix3d/cube.hpp"

namespace unmix3d {

// Spectral angle between a reference and an estimated endmember, radians.
double sad_endmember(const Eigen::VectorXd& e, const Eigen::VectorXd& e_hat);

// sqrt(mean((a - a_hat)^2)) over one material's map.
double rmse_material(std::span<const double> a, std::span<const double> a_hat);

// permutation[i] is the estimated column matched to reference material i.
using Permutation = std::vector<int>;

// Permutation minimizing the summed SAD of matched columns; exhaustive over
// P! (P <= 8), first permutation in lexicographic order wins ties.
Permutation match_materials(const EndmemberMatrix& estimated, const EndmemberMatrix& reference);

struct EvalReport {
  Permutation permutation;
  std::vector<double> sad;   // per reference material
  std::vector<double> rmse;  // per reference material
  double mean_sad = 0.0;
  double mean_rmse = 0.0;
};

// Matches on endmembers, reuses the permutation for the abundance maps.
EvalReport evaluate(const EndmemberMatrix& e_est, const AbundanceMaps& a_est,
                    const EndmemberMatrix& e_ref, const AbundanceMaps& a_ref);

// Endmember-only evaluation (abundance fields left empty).
EvalReport evaluate_endmembers(const EndmemberMatrix& e_est, const EndmemberMatrix& e_ref);

}  // namespace unmix3d
