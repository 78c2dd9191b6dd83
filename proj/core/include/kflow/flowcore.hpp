#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kflow/generators.hpp"
#include "kflow/kernels.hpp"
#include "kflow/scores.hpp"

namespace kflow {

/// N points of dimension n, one per row.
using ParticleSet = PointMatrix;

/// Throws DimensionError for an empty set or a non-finite entry.
void check_particles(const ParticleSet& p, const char* what);

/// Kernel discriminator built from two center sets:
///   D(x) = C * s * [mean_j k(x - g_j) - mean_i k(x - d_i)]
/// where s = kernel.orientation() so that data centers attract under x <- x - a grad D.
class DiscriminatorField {
 public:
  DiscriminatorField(ParticleSet data_centers, ParticleSet gen_centers, KernelSpec kernel,
                     double scale = 1.0);

  Eigen::Index dim() const noexcept { return data_.cols(); }
  const ParticleSet& data_centers() const noexcept { return data_; }
  const ParticleSet& gen_centers() const noexcept { return gen_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  double scale() const noexcept { return scale_; }

  double eval(const Vector& x) const;
  /// PHS terms whose center coincides with x contribute zero.
  Vector grad(const Vector& x) const;
  /// Row-wise grad over a batch of points.
  PointMatrix grad(const ParticleSet& x) const;

 private:
  ParticleSet data_;
  ParticleSet gen_;
  KernelSpec kernel_;
  double scale_;
};

/// mean_j grad k(x - g_j) - mean_i grad k(x - d_i). Equals s/C times DiscriminatorField::grad.
Vector flow_residual(const KernelSpec& kernel, const Vector& x, const ParticleSet& data,
                     const ParticleSet& prev_gen);

/// Row-wise flow_residual for a batch.
PointMatrix flow_residual(const KernelSpec& kernel, const ParticleSet& x, const ParticleSet& data,
                          const ParticleSet& prev_gen);

struct LossAndGrad {
  double loss = 0.0;
  Vector grad;
};

/// How the sample-space gradient of the FloWGAN loss is formed.
///  - Exact: dL/dx = 2 H^T F with H the mean kernel-Hessian difference and the centers
///    held fixed; the true gradient of mean |F|^2.
///  - Transport: dL/dx = 2 s F, which moves every sample along the flow field itself.
enum class FlowGradient { Exact, Transport };

/// loss = mean_z |flow_residual(G(z))|^2 with the generator's current parameters.
LossAndGrad flowgan_loss(const Generator& g, const ParticleSet& z, const ParticleSet& data,
                         const ParticleSet& prev_gen, const KernelSpec& kernel,
                         FlowGradient mode = FlowGradient::Exact);
LossAndGrad flowgan_loss(const Generator& g, const Vector& theta, const ParticleSet& z,
                         const ParticleSet& data, const ParticleSet& prev_gen, const KernelSpec& kernel,
                         FlowGradient mode = FlowGradient::Exact);

/// Mean squared score mismatch between the generator and the target at G(z).
double scoregan_value(const Generator& g, const ParticleSet& z, const DensityModel& target);

/// scoregan_value and its parameter gradient. Closed form for a square linear generator
/// against a Gaussian target, central differences over theta (step 1e-5 (1 + |theta_i|))
/// otherwise.
LossAndGrad scoregan_loss(const Generator& g, const ParticleSet& z, const DensityModel& target);
LossAndGrad scoregan_loss(const Generator& g, const Vector& theta, const ParticleSet& z,
                          const DensityModel& target);

enum class LossKind { ScoreGan, FlowGan };

struct TrainOptions {
  LossKind loss = LossKind::FlowGan;
  long iterations = 1000;
  long batch = 500;
  Adam::Options adam{};
  FlowGradient flow_gradient = FlowGradient::Transport;
  long metric_stride = 10;
};

struct TraceRow {
  long iteration;
  double loss;
  std::vector<double> metrics;
};

struct TrainTrace {
  std::vector<std::string> metric_names;
  std::vector<TraceRow> rows;
  Vector final_params;
};

/// Thrown when a loss turns non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, long iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

using MetricHook = std::function<std::vector<double>(const Generator&)>;

/// Runs iterations 0..T. Iteration t evaluates the loss at theta_t and, for t < T, takes
/// one Adam step. Rows are recorded at multiples of the stride and at t = T.
/// FloWGAN centers: a fresh target batch and G_{theta_t}(fresh z) per iteration.
TrainTrace train(const TrainOptions& opts, Generator& g, const DensityModel& target,
                 const KernelSpec& kernel, Prng& rng, std::vector<std::string> metric_names = {},
                 const MetricHook& hook = {});

enum class AlphaMode { Constant, Geometric };
enum class GammaMode { Zero, SqrtTwoAlpha };

struct LangevinSchedule {
  double alpha0 = 1.0;
  AlphaMode alpha_mode = AlphaMode::Constant;
  double rho = 0.99;
  GammaMode gamma_mode = GammaMode::Zero;
  long horizon = 500;

  void validate() const;
};

double schedule_alpha(const LangevinSchedule& s, long t);
double schedule_gamma(const LangevinSchedule& s, long t);

class LangevinDiverged : public std::runtime_error {
 public:
  LangevinDiverged(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Called with step 0 for the initial set and after every update; step_sq is the mean
/// over particles of |x_t - x_{t-1}|^2.
using LangevinRecorder = std::function<void(long step, const ParticleSet& particles, double step_sq)>;

/// x <- x - a_t grad D_t(x) + g_t z with D_t built from the current particles and a
/// fresh batch of min(pool, batch) data points drawn without replacement.
ParticleSet langevin_run(ParticleSet init, const ParticleSet& data_pool, const KernelSpec& kernel,
                         double scale, const LangevinSchedule& s, long batch, Prng& rng,
                         const LangevinRecorder& recorder = {});

}  // namespace kflow
