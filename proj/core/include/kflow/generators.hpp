#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "kflow/numkit.hpp"
#include "kflow/scores.hpp"

namespace kflow {

/// x = A z + b
struct LinearGenerator {
  Matrix weight;
  Vector bias;
};

/// Leaky-ReLU perceptron; the output layer is linear.
struct MlpGenerator {
  std::vector<Matrix> weights;  ///< weights[l] is widths[l+1] x widths[l]
  std::vector<Vector> biases;
  double slope = 0.2;

  std::vector<int> widths() const;
};

/// One named block of the flattened parameter vector (row-major within the block).
struct ParamSlice {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index offset;
};

struct ParamLayout {
  std::vector<ParamSlice> slices;
  Eigen::Index size() const noexcept {
    return slices.empty() ? 0 : slices.back().offset + slices.back().rows * slices.back().cols;
  }
  std::string describe() const;
};

class Generator {
 public:
  Generator(LinearGenerator g);
  Generator(MlpGenerator g);

  /// Glorot-uniform weights, zero biases.
  static Generator linear(Eigen::Index in_dim, Eigen::Index out_dim, Prng& rng);
  static Generator mlp(const std::vector<int>& widths, double slope, Prng& rng);

  Eigen::Index in_dim() const;
  Eigen::Index out_dim() const;
  bool is_linear() const noexcept { return std::holds_alternative<LinearGenerator>(net_); }
  const std::variant<LinearGenerator, MlpGenerator>& net() const noexcept { return net_; }

  ParamLayout layout() const;
  Vector params() const;
  /// Inverse of params(); throws DimensionError on a length mismatch.
  void set_params(const Vector& theta);

  Vector forward(const Vector& z) const;
  /// Row-wise forward map of a batch of latent codes.
  PointMatrix forward(const PointMatrix& z) const;

  /// Layerwise chain-rule Jacobian dG/dz (out_dim x in_dim). A pre-activation that is
  /// exactly zero takes the positive branch.
  Matrix jacobian(const Vector& z) const;

  /// Gradient of sum_i upstream_i . G(z_i) with respect to the flattened parameters.
  Vector vjp(const PointMatrix& z, const PointMatrix& upstream) const;
  Vector vjp(const Vector& z, const Vector& upstream) const;

 private:
  std::variant<LinearGenerator, MlpGenerator> net_;
};

/// Central differences of z -> ln|det J(z)|. Throws SingularMatrixError when a
/// stencil point has a singular Jacobian.
Vector logdet_grad_fd(const Generator& g, const Vector& z, double h = 1e-5);

/// Same stencil for an arbitrary square Jacobian field.
template <typename JacobianFn>
Vector logdet_grad_fd(JacobianFn&& jac, const Vector& z, double h) {
  Vector out(z.size());
  Vector probe = z;
  auto logdet = [&](const Vector& at) {
    const auto d = num::lu_logabsdet(jac(at));
    if (d.sign == 0) throw SingularMatrixError("logdet_grad_fd: singular Jacobian on stencil", 0.0);
    return d.log_abs;
  };
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    probe(i) = z(i) + h;
    const double up = logdet(probe);
    probe(i) = z(i) - h;
    const double down = logdet(probe);
    probe(i) = z(i);
    out(i) = (up - down) / (2.0 * h);
  }
  return out;
}

/// Score of the push-forward G#(prior) at x = G(z) for a square generator:
///   J^{-T} (grad_z ln prior(z) - grad_z ln|det J(z)|).
Vector generator_score_square(const Generator& g, const Vector& z, const Gaussian& prior);
Vector generator_score_square(const Generator& g, const Vector& z);

/// Tall-generator approximation with a standard-normal prior:
///   pinv(J)^T (-z - 0.5 grad_z ln det(J^T J)).
/// Throws NumericError if J is not of full column rank.
Vector generator_score_rect(const Generator& g, const Vector& z);

/// Dispatches on the generator shape (square or tall).
Vector generator_score(const Generator& g, const Vector& z);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam.
class Adam {
 public:
  using Options = AdamOptions;

  explicit Adam(Eigen::Index size, Options opts = {});

  void step(Vector& params, const Vector& grad);

  long steps() const noexcept { return t_; }
  const Vector& first_moment() const noexcept { return m_; }
  const Vector& second_moment() const noexcept { return v_; }
  const Options& options() const noexcept { return opts_; }

 private:
  Options opts_;
  Vector m_;
  Vector v_;
  long t_ = 0;
};

/// Flat checkpoint: text header ("kflow-checkpoint 1", layout lines, "end"), then the
/// parameters as little-endian IEEE-754 doubles.
void write_checkpoint(const std::filesystem::path& path, const Generator& g);
Generator read_checkpoint(const std::filesystem::path& path);

}  // namespace kflow
