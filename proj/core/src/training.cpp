#include <cmath>

#include "kflow/flowcore.hpp"

namespace kflow {

TrainTrace train(const TrainOptions& opts, Generator& g, const DensityModel& target, const KernelSpec& kernel,
                 Prng& rng, std::vector<std::string> metric_names, const MetricHook& hook) {
  if (opts.iterations < 0) throw DimensionError("train: iterations must be >= 0");
  if (opts.batch < 1) throw DimensionError("train: batch must be >= 1");
  if (opts.metric_stride < 1) throw DimensionError("train: metric stride must be >= 1");
  if (target.dim() != g.out_dim()) throw DimensionError("train: target and generator dimensions differ");

  TrainTrace trace;
  trace.metric_names = std::move(metric_names);
  Adam adam(g.layout().size(), opts.adam);
  const auto batch = static_cast<std::size_t>(opts.batch);
  const auto latent = static_cast<std::size_t>(g.in_dim());

  for (long t = 0; t <= opts.iterations; ++t) {
    const ParticleSet z = sample_std_normal(rng, batch, latent);
    LossAndGrad lg;
    if (opts.loss == LossKind::FlowGan) {
      const ParticleSet data = target.sample(rng, opts.batch);
      const ParticleSet prev = g.forward(sample_std_normal(rng, batch, latent));
      lg = flowgan_loss(g, z, data, prev, kernel, opts.flow_gradient);
    } else {
      lg = scoregan_loss(g, z, target);
    }
    if (!std::isfinite(lg.loss) || !lg.grad.allFinite())
      throw TrainingDiverged("train: non-finite loss at iteration " + std::to_string(t), t);

    if (t % opts.metric_stride == 0 || t == opts.iterations) {
      TraceRow row{t, lg.loss, {}};
      if (hook) row.metrics = hook(g);
      trace.rows.push_back(std::move(row));
    }
    if (t < opts.iterations) {
      Vector theta = g.params();
      adam.step(theta, lg.grad);
      g.set_params(theta);
    }
  }
  trace.final_params = g.params();
  return trace;
}

}  // namespace kflow
