#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kflow/flowcore.hpp"

namespace kflow {

/// (iteration, value) pairs with strictly increasing iterations.
class MetricSeries {
 public:
  explicit MetricSeries(std::string name) : name_(std::move(name)) {}

  /// Throws DimensionError unless iteration exceeds the last one recorded.
  void push(long iteration, double value);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::pair<long, double>>& points() const noexcept { return points_; }
  bool empty() const noexcept { return points_.empty(); }
  std::size_t size() const noexcept { return points_.size(); }

 private:
  std::string name_;
  std::vector<std::pair<long, double>> points_;
};

/// |mu_d - mu_g|^2 + Tr(S_d + S_g - 2 (S_d^{1/2} S_g S_d^{1/2})^{1/2}); results in
/// [-1e-9, 0) are clamped to 0.
double w2_gaussian(const Vector& mu_d, const Matrix& cov_d, const Vector& mu_g, const Matrix& cov_g);

struct MomentFit {
  Vector mean;
  Matrix cov;
};

/// Sample mean and unbiased covariance, symmetrized with negative eigenvalues clamped.
/// Requires at least n + 1 points.
MomentFit fit_gaussian_moments(const ParticleSet& p);

/// 2 E|X - Y| - E|X - X'| - E|Y - Y'| over all pairs (V-statistic).
double energy_distance(const ParticleSet& a, const ParticleSet& b);

/// energy_distance against a fixed reference set, with E|Y - Y'| computed once.
class EnergyDistanceTo {
 public:
  explicit EnergyDistanceTo(ParticleSet reference);
  double operator()(const ParticleSet& a) const;

 private:
  ParticleSet ref_;
  double self_;
};

/// Unbiased U-statistic estimate of squared MMD. Rejects PHS kernels.
double mmd_squared(const ParticleSet& a, const ParticleSet& b, const KernelSpec& k);

/// Fraction of particles whose Mahalanobis-nearest mode lies within radius_multiplier.
std::vector<double> mode_coverage(const GaussianMixture& g, const ParticleSet& p, double radius_multiplier);

}  // namespace kflow
