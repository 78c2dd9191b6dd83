#include "kflow/scores.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kflow {

Gaussian::Gaussian(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  const Eigen::Index n = mean_.size();
  if (n == 0) throw DimensionError("Gaussian: empty mean");
  if (cov_.rows() != n || cov_.cols() != n) throw DimensionError("Gaussian: covariance shape mismatch");
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, cov_.norm()))
    throw NumericError("Gaussian: covariance is not symmetric");
  chol_.compute(cov_);
  if (chol_.info() != Eigen::Success) throw NumericError("Gaussian: covariance is not positive definite");
  const Matrix& l = chol_.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(l(i, i) > 0.0)) throw NumericError("Gaussian: covariance is not positive definite");
    log_det += 2.0 * std::log(l(i, i));
  }
  log_norm_ = -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + log_det);
}

Gaussian Gaussian::standard(Eigen::Index n) {
  return Gaussian(Vector::Zero(n), Matrix::Identity(n, n));
}

Gaussian Gaussian::isotropic(Vector mean, double variance) {
  const Eigen::Index n = mean.size();
  return Gaussian(std::move(mean), variance * Matrix::Identity(n, n));
}

double Gaussian::log_pdf(const Vector& x) const {
  if (x.size() != dim()) throw DimensionError("Gaussian::log_pdf: dimension mismatch");
  const Vector w = chol_.matrixL().solve(x - mean_);
  return log_norm_ - 0.5 * w.squaredNorm();
}

Vector Gaussian::score(const Vector& x) const {
  if (x.size() != dim()) throw DimensionError("Gaussian::score: dimension mismatch");
  return -chol_.solve(x - mean_);
}

Vector Gaussian::sample(Prng& rng) const {
  return mean_ + chol_.matrixL() * sample_std_normal(rng, static_cast<std::size_t>(dim()));
}

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<Gaussian> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (components_.empty()) throw DimensionError("GaussianMixture: needs at least one component");
  if (weights_.size() != components_.size())
    throw DimensionError("GaussianMixture: weight/component count mismatch");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0)) throw DimensionError("GaussianMixture: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DimensionError("GaussianMixture: weights must sum to 1");
  for (const auto& c : components_)
    if (c.dim() != components_.front().dim())
      throw DimensionError("GaussianMixture: component dimensions differ");
  log_weights_.reserve(weights_.size());
  for (double w : weights_) log_weights_.push_back(std::log(w));
}

std::vector<double> GaussianMixture::log_terms(const Vector& x) const {
  if (x.size() != dim()) throw DimensionError("GaussianMixture: dimension mismatch");
  std::vector<double> terms(components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i)
    terms[i] = log_weights_[i] + components_[i].log_pdf(x);
  return terms;
}

double GaussianMixture::log_pdf(const Vector& x) const {
  const auto terms = log_terms(x);
  const double top = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += std::exp(t - top);
  return top + std::log(s);
}

std::vector<double> GaussianMixture::responsibilities(const Vector& x) const {
  auto terms = log_terms(x);
  const double top = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double& t : terms) {
    t = std::exp(t - top);
    s += t;
  }
  for (double& t : terms) t /= s;
  return terms;
}

Vector GaussianMixture::score(const Vector& x) const {
  const auto r = responsibilities(x);
  Vector out = Vector::Zero(dim());
  for (std::size_t i = 0; i < components_.size(); ++i)
    if (r[i] > 0.0) out += r[i] * components_[i].score(x);
  return out;
}

Vector GaussianMixture::sample(Prng& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t pick = components_.size() - 1;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    acc += weights_[i];
    if (u < acc) {
      pick = i;
      break;
    }
  }
  return components_[pick].sample(rng);
}

Eigen::Index DensityModel::dim() const {
  return std::visit([](const auto& m) { return m.dim(); }, model_);
}

double DensityModel::log_pdf(const Vector& x) const {
  return std::visit([&](const auto& m) { return m.log_pdf(x); }, model_);
}

Vector DensityModel::score(const Vector& x) const {
  return std::visit([&](const auto& m) { return m.score(x); }, model_);
}

Vector DensityModel::sample(Prng& rng) const {
  return std::visit([&](const auto& m) { return m.sample(rng); }, model_);
}

PointMatrix DensityModel::sample(Prng& rng, Eigen::Index count) const {
  PointMatrix out(count, dim());
  for (Eigen::Index i = 0; i < count; ++i) out.row(i) = sample(rng).transpose();
  return out;
}

double fisher_divergence(const ScoreFunction& score_a, const ScoreFunction& score_b,
                         const PointMatrix& samples) {
  if (samples.rows() == 0) throw DimensionError("fisher_divergence: empty sample set");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const Vector x = samples.row(i).transpose();
    acc += (score_a(x) - score_b(x)).squaredNorm();
  }
  return 0.5 * acc / static_cast<double>(samples.rows());
}

double fgan_coefficient(Divergence d, double r) {
  if (!(r > 0.0)) throw DimensionError("fgan_coefficient: density ratio must be > 0");
  switch (d) {
    case Divergence::Kl:
      return r;
    case Divergence::ReverseKl:
      return 1.0;
    case Divergence::PearsonChi2:
      return 2.0 * r * r;
    case Divergence::SquaredHellinger:
      return 0.5 * std::sqrt(r);
    case Divergence::Sgan:
      return r * r / (r + 1.0);
  }
  throw DimensionError("fgan_coefficient: unknown divergence");
}

double lsgan_coefficient(double a, double b, double c, double p_prev, double p_data) {
  if (p_prev < 0.0 || p_data < 0.0) throw DimensionError("lsgan_coefficient: densities must be >= 0");
  const double total = p_prev + p_data;
  if (!(total > 0.0)) throw DimensionError("lsgan_coefficient: both densities are zero");
  return (b - a) * ((a - c) * p_prev + (b - c) * p_data) / (total * total * total);
}

}  // namespace kflow
