#include "kflow/metrics.hpp"

#include <cmath>
#include <limits>

#include "kernel_loops.hpp"

namespace kflow {

void MetricSeries::push(long iteration, double value) {
  if (!points_.empty() && iteration <= points_.back().first)
    throw DimensionError("MetricSeries::push: iterations must increase");
  points_.emplace_back(iteration, value);
}

double w2_gaussian(const Vector& mu_d, const Matrix& cov_d, const Vector& mu_g, const Matrix& cov_g) {
  const Eigen::Index n = mu_d.size();
  if (mu_g.size() != n || cov_d.rows() != n || cov_d.cols() != n || cov_g.rows() != n || cov_g.cols() != n)
    throw DimensionError("w2_gaussian: dimension mismatch");
  const Matrix root_d = num::sqrt_spd(cov_d);
  Matrix inner = root_d * cov_g * root_d;
  inner = 0.5 * (inner + inner.transpose());
  const Matrix cross = num::sqrt_spd(inner);
  double w2 = (mu_d - mu_g).squaredNorm() + cov_d.trace() + cov_g.trace() - 2.0 * cross.trace();
  if (w2 < 0.0) {
    if (w2 < -1e-9) throw NumericError("w2_gaussian: negative result beyond round-off");
    w2 = 0.0;
  }
  return w2;
}

MomentFit fit_gaussian_moments(const ParticleSet& p) {
  const Eigen::Index n = p.cols();
  if (n < 1 || p.rows() < n + 1) throw DimensionError("fit_gaussian_moments: need at least n + 1 points");
  MomentFit out;
  out.mean = p.colwise().mean().transpose();
  const PointMatrix centered = p.rowwise() - out.mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(p.rows() - 1);
  cov = 0.5 * (cov + cov.transpose());
  const auto eig = num::eig_sym(cov);
  const Vector clamped = eig.values.cwiseMax(0.0);
  out.cov = eig.vectors * clamped.asDiagonal() * eig.vectors.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

namespace {

double mean_self_distance(const ParticleSet& a) {
  const Eigen::Index n = a.cols();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double* x = a.row(i).data();
    double row = 0.0;
    for (Eigen::Index j = i + 1; j < a.rows(); ++j) {
      const double* y = a.row(j).data();
      double u = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double d = x[k] - y[k];
        u += d * d;
      }
      row += std::sqrt(u);
    }
    acc += row;
  }
  return 2.0 * acc / (static_cast<double>(a.rows()) * static_cast<double>(a.rows()));
}

double mean_pair_distance(const ParticleSet& a, const ParticleSet& b) {
  const Eigen::Index n = a.cols();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double* x = a.row(i).data();
    double row = 0.0;
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      const double* y = b.row(j).data();
      double u = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double d = x[k] - y[k];
        u += d * d;
      }
      row += std::sqrt(u);
    }
    acc += row;
  }
  return acc / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

}  // namespace

double energy_distance(const ParticleSet& a, const ParticleSet& b) {
  if (a.rows() < 1 || b.rows() < 1) throw DimensionError("energy_distance: empty particle set");
  if (a.cols() != b.cols()) throw DimensionError("energy_distance: dimension mismatch");
  const double ed = 2.0 * mean_pair_distance(a, b) - mean_self_distance(a) - mean_self_distance(b);
  return std::max(ed, 0.0);
}

EnergyDistanceTo::EnergyDistanceTo(ParticleSet reference) : ref_(std::move(reference)) {
  if (ref_.rows() < 1) throw DimensionError("EnergyDistanceTo: empty reference set");
  self_ = mean_self_distance(ref_);
}

double EnergyDistanceTo::operator()(const ParticleSet& a) const {
  if (a.rows() < 1) throw DimensionError("energy_distance: empty particle set");
  if (a.cols() != ref_.cols()) throw DimensionError("energy_distance: dimension mismatch");
  return std::max(2.0 * mean_pair_distance(a, ref_) - mean_self_distance(a) - self_, 0.0);
}

double mmd_squared(const ParticleSet& a, const ParticleSet& b, const KernelSpec& k) {
  if (!k.positive_definite()) throw DimensionError("mmd_squared: kernel must be positive definite");
  if (a.rows() < 2 || b.rows() < 2) throw DimensionError("mmd_squared: need at least two points per set");
  if (a.cols() != b.cols()) throw DimensionError("mmd_squared: dimension mismatch");
  return detail::with_kernel(k, [&](const auto& terms) {
    auto sum = [&](const ParticleSet& p, const ParticleSet& q, bool skip_diag) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < q.rows(); ++j) {
          if (skip_diag && i == j) continue;
          acc += terms((p.row(i) - q.row(j)).squaredNorm()).value;
        }
      return acc;
    };
    const double m = static_cast<double>(a.rows());
    const double n = static_cast<double>(b.rows());
    return sum(a, a, true) / (m * (m - 1.0)) + sum(b, b, true) / (n * (n - 1.0)) - 2.0 * sum(a, b, false) / (m * n);
  });
}

std::vector<double> mode_coverage(const GaussianMixture& g, const ParticleSet& p, double radius_multiplier) {
  if (!(radius_multiplier > 0.0)) throw DimensionError("mode_coverage: radius multiplier must be > 0");
  if (p.cols() != g.dim()) throw DimensionError("mode_coverage: dimension mismatch");
  const auto& comps = g.components();
  std::vector<Eigen::LLT<Matrix>> chol;
  chol.reserve(comps.size());
  for (const auto& c : comps) chol.emplace_back(c.cov());
  std::vector<double> counts(comps.size(), 0.0);
  if (p.rows() == 0) return counts;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const Vector x = p.row(i).transpose();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < comps.size(); ++m) {
      const double d = std::sqrt(chol[m].matrixL().solve(x - comps[m].mean()).squaredNorm());
      if (d < best_d) {
        best_d = d;
        best = m;
      }
    }
    if (best_d <= radius_multiplier) counts[best] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(p.rows());
  return counts;
}

}  // namespace kflow
