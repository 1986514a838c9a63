#include <algorithm>
#include <numeric>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "unmix3d/subspace.hpp"

namespace unmix3d {

ProjectionBasis correlation_eigs(const Eigen::MatrixXd& r, int d) {
  const int bands = static_cast<int>(r.rows());
  const int n = static_cast<int>(r.cols());
  if (d < 1 || d > std::min(bands, n)) {
    throw ConfigError("projection dimension " + std::to_string(d) + " outside [1, " +
                      std::to_string(std::min(bands, n)) + "]");
  }
  const Eigen::MatrixXd corr = (r * r.transpose()) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(corr);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");

  ProjectionBasis basis;
  basis.vectors.resize(bands, d);
  basis.eigenvalues.resize(d);
  // Eigen returns ascending eigenvalues.
  for (int k = 0; k < d; ++k) {
    const int src = bands - 1 - k;
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    int lead = 0;
    for (int i = 1; i < bands; ++i)
      if (std::abs(v[i]) > std::abs(v[lead])) lead = i;
    if (v[lead] < 0) v = -v;
    basis.vectors.col(k) = v;
    basis.eigenvalues[k] = solver.eigenvalues()[src];
  }
  return basis;
}

ProjectedData project(const Eigen::MatrixXd& r, int d) {
  ProjectedData out;
  out.basis = correlation_eigs(r, d);
  out.coords = out.basis.vectors.transpose() * r;
  return out;
}

double snr_threshold(int materials, double offset_db) {
  return 22.0 + 10.0 * std::log10(static_cast<double>(materials)) + offset_db;
}

double estimate_snr(const PixelMatrix& r, int materials, SnrFormula formula) {
  const int bands = static_cast<int>(r.rows());
  const int n = static_cast<int>(r.cols());
  if (materials < 1 || materials >= bands || materials > n) {
    throw ConfigError("SNR estimate: need 1 <= P < L and P <= N");
  }
  const Eigen::VectorXd mean = r.rowwise().mean();
  const Eigen::MatrixXd centered = r.colwise() - mean;
  const ProjectedData proj = project(centered, materials);

  const double p_r = r.squaredNorm() / n;
  if (!(p_r > 0.0)) throw NumericalError("SNR estimate: data has zero power");
  const double p_rp = proj.coords.squaredNorm() / n + mean.squaredNorm();
  const double numerator = p_rp - (static_cast<double>(materials) / bands) * p_r;
  const double denominator = std::max(p_r - p_rp, 1e-12 * p_r);
  const double ratio = std::max(numerator / denominator, 1e-12);
  return formula == SnrFormula::kDecibel ? 10.0 * std::log10(ratio) : std::abs(std::log10(ratio));
}

namespace {

// Squared volume from the P x P squared-distance matrix. Distances are scaled
// by their maximum first; the bordered determinant is homogeneous of degree
// P-1 in that scale.
double sq_volume_from_distances(const Eigen::MatrixXd& dist) {
  const int p = static_cast<int>(dist.rows());
  const double scale = dist.maxCoeff();
  if (!(scale > 0.0)) return 0.0;
  Eigen::MatrixXd c(p + 1, p + 1);
  c(0, 0) = 0.0;
  c.row(0).tail(p).setOnes();
  c.col(0).tail(p).setOnes();
  c.bottomRightCorner(p, p) = dist / scale;
  const double det = c.partialPivLu().determinant();

  double factorial = 1.0;
  for (int i = 2; i <= p - 1; ++i) factorial *= i;
  const double sign = (p % 2 == 0) ? 1.0 : -1.0;
  const double denom = sign * std::pow(2.0, p - 1) * factorial * factorial;
  const double v2 = det / denom * std::pow(scale, p - 1);
  return std::max(v2, 0.0);
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& points) {
  const int p = static_cast<int>(points.cols());
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      dist(i, j) = (points.col(i) - points.col(j)).squaredNorm();
      dist(j, i) = dist(i, j);
    }
  return dist;
}

// V^2 of `base` with column `slot` replaced by each column of `rd`. Distances
// among the fixed columns are computed once; each candidate only adds its row.
std::vector<double> scan_slot(const Eigen::MatrixXd& rd, const Eigen::MatrixXd& base, int slot) {
  const int n = static_cast<int>(rd.cols());
  const int p = static_cast<int>(base.cols());
  const Eigen::MatrixXd fixed = squared_distances(base);
  std::vector<double> volumes(n);
#pragma omp parallel
  {
    Eigen::MatrixXd dist = fixed;
#pragma omp for schedule(static)
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < p; ++i) {
        const double d = i == slot ? 0.0 : (base.col(i) - rd.col(j)).squaredNorm();
        dist(i, slot) = d;
        dist(slot, i) = d;
      }
      volumes[j] = sq_volume_from_distances(dist);
    }
  }
  return volumes;
}

// First index of the maximum, skipping `excluded`.
int argmax_lowest(const std::vector<double>& v, const std::vector<int>& excluded) {
  int best = -1;
  for (int j = 0; j < static_cast<int>(v.size()); ++j) {
    if (std::find(excluded.begin(), excluded.end(), j) != excluded.end()) continue;
    if (best < 0 || v[j] > v[best]) best = j;
  }
  return best;
}

}  // namespace

double cayley_menger_sq_volume(const Eigen::MatrixXd& points) {
  if (points.cols() < 2) throw ConfigError("Cayley-Menger volume needs at least two points");
  if (points.rows() < points.cols() - 1) {
    throw DimensionError("Cayley-Menger volume: dimension " + std::to_string(points.rows()) +
                         " cannot hold a " + std::to_string(points.cols() - 1) + "-simplex");
  }
  return sq_volume_from_distances(squared_distances(points));
}

namespace {

// Greedy growth from `seed`, then slot-ordered replacement sweeps.
SimplexSearchResult search_from(const Eigen::MatrixXd& rd, int materials, int seed,
                                int max_sweeps) {
  std::vector<int> chosen{seed};
  chosen.reserve(materials);
  while (static_cast<int>(chosen.size()) < materials) {
    const int k = static_cast<int>(chosen.size());
    Eigen::MatrixXd base(rd.rows(), k + 1);
    for (int i = 0; i < k; ++i) base.col(i) = rd.col(chosen[i]);
    base.col(k) = rd.col(chosen[0]);
    const std::vector<double> volumes = scan_slot(rd, base, k);
    chosen.push_back(argmax_lowest(volumes, chosen));
  }

  Eigen::MatrixXd current(rd.rows(), materials);
  for (int i = 0; i < materials; ++i) current.col(i) = rd.col(chosen[i]);
  double volume = cayley_menger_sq_volume(current);

  SimplexSearchResult result;
  result.seed_sq_volume = volume;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    ++result.sweeps;
    bool changed = false;
    for (int slot = 0; slot < materials; ++slot) {
      const std::vector<double> volumes = scan_slot(rd, current, slot);
      const int best = argmax_lowest(volumes, {});
      if (volumes[best] > volume * (1.0 + 1e-12) && volumes[best] > 0.0) {
        chosen[slot] = best;
        current.col(slot) = rd.col(best);
        volume = volumes[best];
        changed = true;
      }
    }
    if (!changed) break;
  }
  result.indices = chosen;
  std::sort(result.indices.begin(), result.indices.end());
  result.sq_volume = volume;
  return result;
}

}  // namespace

SimplexSearchResult svm_maximize(const Eigen::MatrixXd& rd, int materials, int max_sweeps,
                                 int restarts) {
  const int n = static_cast<int>(rd.cols());
  if (materials < 2) throw ConfigError("simplex search needs P >= 2");
  if (n < materials) throw DimensionError("simplex search: fewer pixels than endmembers");
  if (rd.rows() < materials - 1) throw DimensionError("simplex search: projected dimension < P-1");
  if (max_sweeps < 1) throw ConfigError("simplex search: max_sweeps must be >= 1");
  if (restarts < 1) throw ConfigError("simplex search: restarts must be >= 1");

  // Seeds: the `restarts` largest-norm columns, ties to the lowest index.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd norms = rd.colwise().squaredNorm().transpose();
  const int starts = std::min(n, restarts);
  std::partial_sort(order.begin(), order.begin() + starts, order.end(), [&](int a, int b) {
    return norms(a) > norms(b) || (norms(a) == norms(b) && a < b);
  });

  SimplexSearchResult best = search_from(rd, materials, order[0], max_sweeps);
  const double first_seed_volume = best.seed_sq_volume;
  for (int s = 1; s < starts; ++s) {
    SimplexSearchResult r = search_from(rd, materials, order[s], max_sweeps);
    if (r.sq_volume > best.sq_volume * (1.0 + 1e-12)) best = std::move(r);
  }
  best.seed_sq_volume = first_seed_volume;
  return best;
}

}  // namespace unmix3d
