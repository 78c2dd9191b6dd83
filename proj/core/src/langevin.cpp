#include <cmath>
#include <numeric>

#include "kflow/flowcore.hpp"

namespace kflow {

void LangevinSchedule::validate() const {
  if (!(alpha0 >= 0.0) || !std::isfinite(alpha0)) throw DimensionError("LangevinSchedule: alpha0 must be >= 0");
  if (alpha_mode == AlphaMode::Geometric && !(rho > 0.0 && rho < 1.0))
    throw DimensionError("LangevinSchedule: rho must lie in (0, 1)");
  if (horizon < 1) throw DimensionError("LangevinSchedule: horizon must be >= 1");
}

double schedule_alpha(const LangevinSchedule& s, long t) {
  if (t < 0 || t >= s.horizon) throw DimensionError("schedule_alpha: step out of range");
  if (s.alpha_mode == AlphaMode::Constant) return s.alpha0;
  return s.alpha0 * std::pow(s.rho, static_cast<double>(t));
}

double schedule_gamma(const LangevinSchedule& s, long t) {
  const double a = schedule_alpha(s, t);
  return s.gamma_mode == GammaMode::Zero ? 0.0 : std::sqrt(2.0 * a);
}

ParticleSet langevin_run(ParticleSet x, const ParticleSet& data_pool, const KernelSpec& kernel, double scale,
                         const LangevinSchedule& s, long batch, Prng& rng, const LangevinRecorder& recorder) {
  s.validate();
  check_particles(x, "langevin_run init");
  check_particles(data_pool, "langevin_run data");
  if (x.cols() != data_pool.cols()) throw DimensionError("langevin_run: dimension mismatch");
  if (batch < 1) throw DimensionError("langevin_run: batch must be >= 1");

  const auto pool = static_cast<std::size_t>(data_pool.rows());
  const auto take = std::min(pool, static_cast<std::size_t>(batch));
  std::vector<std::size_t> index(pool);
  ParticleSet centers(static_cast<Eigen::Index>(take), data_pool.cols());

  if (recorder) recorder(0, x, 0.0);
  for (long t = 0; t < s.horizon; ++t) {
    std::iota(index.begin(), index.end(), std::size_t{0});
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.uniform_index(pool - i);
      std::swap(index[i], index[j]);
      centers.row(static_cast<Eigen::Index>(i)) = data_pool.row(static_cast<Eigen::Index>(index[i]));
    }
    const double alpha = schedule_alpha(s, t);
    const double gamma = schedule_gamma(s, t);
    const ParticleSet noise = sample_std_normal(rng, static_cast<std::size_t>(x.rows()),
                                                static_cast<std::size_t>(x.cols()));

    const DiscriminatorField field(centers, x, kernel, scale);
    ParticleSet delta = -alpha * field.grad(x);
    if (gamma != 0.0) delta += gamma * noise;
    x += delta;
    if (!x.allFinite())
      throw LangevinDiverged("langevin_run: non-finite particle at step " + std::to_string(t + 1), t + 1);
    if (recorder) recorder(t + 1, x, delta.rowwise().squaredNorm().mean());
  }
  return x;
}

}  // namespace kflow
