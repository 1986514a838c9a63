#include <algorithm>
#include <cmath>
#include <numeric>

#include "unmix3d/metrics.hpp"

namespace unmix3d {

double sad_endmember(const Eigen::VectorXd& e, const Eigen::VectorXd& e_hat) {
  if (e.size() != e_hat.size()) throw DimensionError("SAD: length mismatch");
  const double ne = e.norm();
  const double nh = e_hat.norm();
  if (ne == 0.0 || nh == 0.0) throw NumericalError("SAD: zero-norm endmember");
  // Rounding can push the cosine a hair past 1.
  return std::acos(std::clamp(e.dot(e_hat) / (ne * nh), -1.0, 1.0));
}

double rmse_material(std::span<const double> a, std::span<const double> a_hat) {
  if (a.size() != a_hat.size() || a.empty()) throw DimensionError("RMSE: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - a_hat[i]) * (a[i] - a_hat[i]);
  return std::sqrt(sum / static_cast<double>(a.size()));
}

Permutation match_materials(const EndmemberMatrix& estimated, const EndmemberMatrix& reference) {
  if (estimated.rows() != reference.rows() || estimated.cols() != reference.cols()) {
    throw DimensionError("matching: endmember matrices differ in shape");
  }
  const int p = static_cast<int>(reference.cols());
  if (p > 8) throw ConfigError("matching supports at most 8 materials");
  Eigen::MatrixXd cost(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) cost(i, j) = sad_endmember(reference.col(i), estimated.col(j));

  Permutation perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  Permutation best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < p; ++i) total += cost(i, perm[i]);
    if (total < best_cost) {
      best_cost = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

EvalReport evaluate_endmembers(const EndmemberMatrix& e_est, const EndmemberMatrix& e_ref) {
  EvalReport report;
  report.permutation = match_materials(e_est, e_ref);
  const int p = static_cast<int>(e_ref.cols());
  for (int i = 0; i < p; ++i) {
    report.sad.push_back(sad_endmember(e_ref.col(i), e_est.col(report.permutation[i])));
  }
  report.mean_sad = std::accumulate(report.sad.begin(), report.sad.end(), 0.0) / p;
  return report;
}

EvalReport evaluate(const EndmemberMatrix& e_est, const AbundanceMaps& a_est,
                    const EndmemberMatrix& e_ref, const AbundanceMaps& a_ref) {
  if (!a_est.same_shape(a_ref) || a_ref.depth() != e_ref.cols()) {
    throw DimensionError("evaluate: abundance maps do not match each other or the endmembers");
  }
  EvalReport report = evaluate_endmembers(e_est, e_ref);
  const int p = static_cast<int>(e_ref.cols());
  for (int i = 0; i < p; ++i) {
    report.rmse.push_back(rmse_material(a_ref.plane(i), a_est.plane(report.permutation[i])));
  }
  report.mean_rmse = std::accumulate(report.rmse.begin(), report.rmse.end(), 0.0) / p;
  return report;
}

}  // namespace unmix3d
