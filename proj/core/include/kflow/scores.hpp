#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "kflow/numkit.hpp"

namespace kflow {

/// Multivariate normal with an eagerly built Cholesky factor of the covariance.
class Gaussian {
 public:
  /// Throws NumericError unless cov is symmetric positive definite.
  Gaussian(Vector mean, Matrix cov);

  static Gaussian standard(Eigen::Index n);
  static Gaussian isotropic(Vector mean, double variance);

  Eigen::Index dim() const noexcept { return mean_.size(); }
  const Vector& mean() const noexcept { return mean_; }
  const Matrix& cov() const noexcept { return cov_; }

  double log_pdf(const Vector& x) const;
  /// -Sigma^{-1} (x - mu)
  Vector score(const Vector& x) const;
  Vector sample(Prng& rng) const;

 private:
  Vector mean_;
  Matrix cov_;
  Eigen::LLT<Matrix> chol_;
  double log_norm_;  ///< -0.5 (n ln 2pi + ln det Sigma)
};

class GaussianMixture {
 public:
  /// Weights must be positive and sum to 1 within 1e-12.
  GaussianMixture(std::vector<double> weights, std::vector<Gaussian> components);

  Eigen::Index dim() const noexcept { return components_.front().dim(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<Gaussian>& components() const noexcept { return components_; }

  double log_pdf(const Vector& x) const;
  /// Responsibilities r_i(x) proportional to w_i N_i(x), computed in log space.
  std::vector<double> responsibilities(const Vector& x) const;
  Vector score(const Vector& x) const;
  Vector sample(Prng& rng) const;

 private:
  std::vector<double> log_terms(const Vector& x) const;

  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<Gaussian> components_;
};

/// Analytic target density with exact log-density and score.
class DensityModel {
 public:
  DensityModel(Gaussian g) : model_(std::move(g)) {}
  DensityModel(GaussianMixture m) : model_(std::move(m)) {}

  Eigen::Index dim() const;
  double log_pdf(const Vector& x) const;
  Vector score(const Vector& x) const;
  Vector sample(Prng& rng) const;
  PointMatrix sample(Prng& rng, Eigen::Index count) const;

  const std::variant<Gaussian, GaussianMixture>& model() const noexcept { return model_; }

 private:
  std::variant<Gaussian, GaussianMixture> model_;
};

/// Pluggable score field; a learned score network would slot in here.
using ScoreFunction = std::function<Vector(const Vector&)>;

/// 0.5 * mean_i |score_a(x_i) - score_b(x_i)|^2 over the rows of samples.
double fisher_divergence(const ScoreFunction& score_a, const ScoreFunction& score_b,
                         const PointMatrix& samples);

enum class Divergence { Kl, ReverseKl, PearsonChi2, SquaredHellinger, Sgan };

/// Coefficient multiplying the score difference in the optimal f-GAN generator
/// condition, as a function of the density ratio r = p_d / p_prev.
double fgan_coefficient(Divergence d, double r);

/// LSGAN coefficient (b-a)((a-c) p_prev + (b-c) p_data) / (p_prev + p_data)^3.
double lsgan_coefficient(double a, double b, double c, double p_prev, double p_data);

}  // namespace kflow
