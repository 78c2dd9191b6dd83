#include "kflow/experiments.hpp"

#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "kflow/io.hpp"
#include "kflow/shapes.hpp"

namespace kflow {

const MetricSeries& ExperimentResult::find(const std::string& name) const {
  for (const auto& s : series)
    if (s.name() == name) return s;
  throw std::out_of_range("no metric series named " + name);
}

GrayscaleMask resolve_mask(const std::string& spec, const std::filesystem::path& base_dir) {
  constexpr std::string_view prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) return builtin_mask(std::string_view(spec).substr(prefix.size()));
  std::filesystem::path p(spec);
  if (p.is_relative()) p = base_dir / p;
  return pgm_load(p);
}

namespace {

constexpr std::uint64_t kMetricStream = 0x9e3779b97f4a7c15ULL;

void write_summary(const std::filesystem::path& path, const ExperimentConfig& cfg,
                   const std::map<std::string, double>& summary) {
  nlohmann::json j;
  j["kind"] = to_string(cfg.kind);
  j["seed"] = cfg.seed;
  nlohmann::json values = nlohmann::json::object();
  for (const auto& [k, v] : summary) values[k] = format_double(v);
  j["summary"] = values;
  write_file_atomic(path, j.dump(2) + "\n");
}

void add_trace_series(ExperimentResult& r, const TrainTrace& trace) {
  MetricSeries loss("loss");
  std::vector<MetricSeries> extra;
  for (const auto& n : trace.metric_names) extra.emplace_back(n);
  for (const auto& row : trace.rows) {
    loss.push(row.iteration, row.loss);
    for (std::size_t i = 0; i < extra.size(); ++i) extra[i].push(row.iteration, row.metrics[i]);
  }
  r.series.push_back(std::move(loss));
  for (auto& s : extra) r.series.push_back(std::move(s));
}

std::filesystem::path write_trace(const std::filesystem::path& dir, const TrainTrace& trace) {
  std::vector<std::string> header{"iteration", "loss"};
  header.insert(header.end(), trace.metric_names.begin(), trace.metric_names.end());
  CsvTable table(header);
  for (const auto& row : trace.rows) {
    std::vector<double> values{static_cast<double>(row.iteration), row.loss};
    values.insert(values.end(), row.metrics.begin(), row.metrics.end());
    table.add_row(values);
  }
  const auto path = dir / "trace.csv";
  table.write(path);
  return path;
}

Matrix linear_cov(const LinearGenerator& lin) { return lin.weight * lin.weight.transpose(); }

}  // namespace

ExperimentResult run_gaussian_experiment(const ExperimentConfig& in) {
  ExperimentConfig cfg = in;
  validate_config(cfg);
  if (cfg.kind != ExperimentKind::Gaussian) throw ConfigError("run_gaussian_experiment: kind must be gaussian");
  if (cfg.target.type != "gaussian") throw ConfigError("run_gaussian_experiment: target must be gaussian");

  Prng rng(cfg.seed);
  Prng metric_rng(cfg.seed ^ kMetricStream);
  const DensityModel target = build_target(cfg.target);
  const Gaussian& tg = std::get<Gaussian>(target.model());
  const KernelSpec kernel = build_kernel(cfg.kernel, cfg.target.dim);
  Generator g = build_generator(cfg.generator, cfg.target.dim, rng);

  const long samples = cfg.train.metric_samples;
  MetricHook hook = [&](const Generator& gen) -> std::vector<double> {
    if (const auto* lin = std::get_if<LinearGenerator>(&gen.net()))
      return {w2_gaussian(tg.mean(), tg.cov(), lin->bias, linear_cov(*lin))};
    const ParticleSet x = gen.forward(
        sample_std_normal(metric_rng, static_cast<std::size_t>(samples), static_cast<std::size_t>(gen.in_dim())));
    const MomentFit fit = fit_gaussian_moments(x);
    return {w2_gaussian(tg.mean(), tg.cov(), fit.mean, fit.cov)};
  };
  const TrainTrace trace = train(build_train_options(cfg.train), g, target, kernel, rng, {"w2"}, hook);

  ExperimentResult r;
  add_trace_series(r, trace);
  r.artifacts.push_back(write_trace(cfg.output_dir, trace));
  const auto ckpt = cfg.output_dir / "generator.ckpt";
  write_checkpoint(ckpt, g);
  r.artifacts.push_back(ckpt);
  r.summary["w2_initial"] = trace.rows.front().metrics[0];
  r.summary["w2_final"] = trace.rows.back().metrics[0];
  r.summary["loss_final"] = trace.rows.back().loss;
  r.summary["iterations"] = static_cast<double>(cfg.train.iterations);
  const auto summary = cfg.output_dir / "summary.json";
  write_summary(summary, cfg, r.summary);
  r.artifacts.push_back(summary);
  return r;
}

ExperimentResult run_gmm_experiment(const ExperimentConfig& in) {
  ExperimentConfig cfg = in;
  validate_config(cfg);
  if (cfg.kind != ExperimentKind::Gmm) throw ConfigError("run_gmm_experiment: kind must be gmm");

  Prng rng(cfg.seed);
  Prng metric_rng(cfg.seed ^ kMetricStream);
  const DensityModel target = build_target(cfg.target);
  const GaussianMixture& mix = std::get<GaussianMixture>(target.model());
  const KernelSpec kernel = build_kernel(cfg.kernel, cfg.target.dim);
  const long samples = cfg.train.metric_samples;
  const EnergyDistanceTo ed_to_target(target.sample(metric_rng, samples));

  std::vector<std::string> names{"energy_distance"};
  for (std::size_t m = 0; m < mix.components().size(); ++m) names.push_back("coverage_" + std::to_string(m));
  auto evaluate = [&](const ParticleSet& x) {
    std::vector<double> out{ed_to_target(x)};
    const auto cov = mode_coverage(mix, x, cfg.gmm.coverage_radius);
    out.insert(out.end(), cov.begin(), cov.end());
    return out;
  };

  ExperimentResult r;
  TrainTrace trace;
  ParticleSet final_samples;
  if (cfg.gmm.data_as_generator) {
    trace.metric_names = names;
    final_samples = target.sample(metric_rng, samples);
    trace.rows.push_back({0, 0.0, evaluate(final_samples)});
  } else {
    Generator g = build_generator(cfg.generator, cfg.target.dim, rng);
    MetricHook hook = [&](const Generator& gen) {
      return evaluate(gen.forward(sample_std_normal(metric_rng, static_cast<std::size_t>(samples),
                                                    static_cast<std::size_t>(gen.in_dim()))));
    };
    trace = train(build_train_options(cfg.train), g, target, kernel, rng, names, hook);
    final_samples = g.forward(sample_std_normal(metric_rng, static_cast<std::size_t>(samples),
                                                static_cast<std::size_t>(g.in_dim())));
    const auto ckpt = cfg.output_dir / "generator.ckpt";
    write_checkpoint(ckpt, g);
    r.artifacts.push_back(ckpt);
  }

  add_trace_series(r, trace);
  r.artifacts.push_back(write_trace(cfg.output_dir, trace));
  const auto samples_path = cfg.output_dir / "samples.csv";
  write_particles_csv(samples_path, final_samples);
  r.artifacts.push_back(samples_path);

  const auto& first = trace.rows.front().metrics;
  const auto& last = trace.rows.back().metrics;
  r.summary["energy_distance_initial"] = first[0];
  r.summary["energy_distance_final"] = last[0];
  for (std::size_t m = 1; m < last.size(); ++m) r.summary["coverage_" + std::to_string(m - 1) + "_final"] = last[m];
  r.summary["loss_final"] = trace.rows.back().loss;
  const auto summary = cfg.output_dir / "summary.json";
  write_summary(summary, cfg, r.summary);
  r.artifacts.push_back(summary);
  return r;
}

ExperimentResult run_morph_experiment(const ExperimentConfig& in) {
  ExperimentConfig cfg = in;
  validate_config(cfg);
  if (cfg.kind != ExperimentKind::Morph) throw ConfigError("run_morph_experiment: kind must be morph");
  const auto& l = cfg.langevin;

  Prng rng(cfg.seed);
  const GrayscaleMask target_mask = resolve_mask(l.target, cfg.base_dir);
  ParticleSet init;
  if (l.source == "gaussian") {
    init = sample_std_normal(rng, static_cast<std::size_t>(l.particles), 2);
  } else {
    init = shape_sample(resolve_mask(l.source, cfg.base_dir), l.particles, rng);
  }
  const ParticleSet pool = shape_sample(target_mask, l.pool, rng);
  const EnergyDistanceTo ed_to_target(shape_sample(target_mask, l.particles, rng));
  const KernelSpec kernel = build_kernel(cfg.kernel, 2);

  ExperimentResult r;
  MetricSeries ed("energy_distance");
  MetricSeries step_sq("step_sq");
  CsvTable table({"step", "energy_distance", "step_sq"});
  const auto snap_dir = cfg.output_dir / "snapshots";

  auto recorder = [&](long step, const ParticleSet& x, double sq) {
    if (step % l.metric_stride == 0 || step == l.steps) {
      const double e = ed_to_target(x);
      ed.push(step, e);
      step_sq.push(step, sq);
      table.add_row({static_cast<double>(step), e, sq});
    }
    if (l.snapshot_stride > 0 && (step % l.snapshot_stride == 0 || step == l.steps)) {
      char name[32];
      std::snprintf(name, sizeof name, "step_%06ld.csv", step);
      write_particles_csv(snap_dir / name, x);
      r.artifacts.push_back(snap_dir / name);
    }
  };
  langevin_run(init, pool, kernel, l.scale, build_schedule(l), l.batch, rng, recorder);

  const auto energy_path = cfg.output_dir / "energy.csv";
  table.write(energy_path);
  r.artifacts.push_back(energy_path);

  const double e0 = ed.points().front().second;
  r.summary["energy_distance_initial"] = e0;
  r.summary["energy_distance_final"] = ed.points().back().second;
  double first_hit = -1.0;
  for (const auto& [step, v] : ed.points())
    if (v <= 0.1 * e0) {
      first_hit = static_cast<double>(step);
      break;
    }
  r.summary["first_step_below_10pct"] = first_hit;
  r.series.push_back(std::move(ed));
  r.series.push_back(std::move(step_sq));
  const auto summary = cfg.output_dir / "summary.json";
  write_summary(summary, cfg, r.summary);
  r.artifacts.push_back(summary);
  return r;
}

ExperimentResult quiver_export(const ExperimentConfig& in) {
  ExperimentConfig cfg = in;
  validate_config(cfg);
  if (cfg.target.dim != 2) throw ConfigError("quiver_export: target must be 2-D");
  const auto& q = cfg.quiver;

  Prng rng(cfg.seed);
  const DensityModel target = build_target(cfg.target);
  std::optional<DiscriminatorField> field;
  if (q.field == "flow") {
    Generator g = build_generator(cfg.generator, 2, rng);
    ParticleSet data = target.sample(rng, q.centers);
    ParticleSet gen = g.forward(sample_std_normal(rng, static_cast<std::size_t>(q.centers),
                                                  static_cast<std::size_t>(g.in_dim())));
    field.emplace(std::move(data), std::move(gen), build_kernel(cfg.kernel, 2));
  }

  CsvTable table({"x", "y", "u", "v"});
  Vector p(2);
  for (int iy = 0; iy < q.ny; ++iy) {
    for (int ix = 0; ix < q.nx; ++ix) {
      p(0) = q.extent[0] + (q.extent[1] - q.extent[0]) * ix / (q.nx - 1);
      p(1) = q.extent[2] + (q.extent[3] - q.extent[2]) * iy / (q.ny - 1);
      const Vector v = field ? Vector(-field->grad(p)) : target.score(p);
      table.add_row({p(0), p(1), v(0), v(1)});
    }
  }
  ExperimentResult r;
  const auto path = cfg.output_dir / "quiver.csv";
  table.write(path);
  r.artifacts.push_back(path);
  r.summary["nodes"] = static_cast<double>(table.rows());
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::Gaussian:
      return run_gaussian_experiment(cfg);
    case ExperimentKind::Gmm:
      return run_gmm_experiment(cfg);
    case ExperimentKind::Morph:
      return run_morph_experiment(cfg);
    case ExperimentKind::Quiver:
      return quiver_export(cfg);
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace kflow
