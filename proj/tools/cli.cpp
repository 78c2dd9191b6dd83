#include "cli.hpp"

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "kflow/experiments.hpp"
#include "kflow/io.hpp"

namespace kflow {

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long> iters;
  std::optional<std::string> out;
};

void apply_overrides(ExperimentConfig& cfg, const Options& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.iters) {
    if (cfg.kind == ExperimentKind::Morph)
      cfg.langevin.steps = *o.iters;
    else
      cfg.train.iterations = *o.iters;
  }
  if (o.out) cfg.output_dir = *o.out;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel-flow and score-matching generative experiments"};
  app.name("kflow");
  app.require_subcommand(1, 1);

  Options opts;
  const char* kinds[] = {"gaussian", "gmm", "morph", "quiver", "validate"};
  const char* help[] = {"train a generator on a Gaussian target", "train a generator on a Gaussian mixture",
                        "morph one shape into another with the discriminator-guided sampler",
                        "export a vector field on a regular grid", "check a config file without running"};
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(kinds[i], help[i]);
    sub->add_option("-c,--config", opts.config, "config file (JSON)")->required();
    if (i < 4) {
      sub->add_option("--seed", opts.seed, "override the seed");
      sub->add_option("--iters", opts.iters, "override iterations (steps for morph)")->check(CLI::NonNegativeNumber);
      sub->add_option("--out", opts.out, "override the output directory");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "kflow: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  ExperimentConfig cfg;
  try {
    cfg = load_config(opts.config);
    apply_overrides(cfg, opts);
    validate_config(cfg);
  } catch (const ConfigError& e) {
    err << "kflow: invalid config: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  if (cmd == "validate") {
    out << "ok: " << to_string(cfg.kind) << " config " << opts.config << "\n";
    return 0;
  }
  if (to_string(cfg.kind) != cmd) {
    err << "kflow: config kind '" << to_string(cfg.kind) << "' does not match subcommand '" << cmd << "'\n";
    return 2;
  }

  try {
    const ExperimentResult r = run_experiment(cfg);
    for (const auto& [k, v] : r.summary) out << k << " = " << format_double(v) << "\n";
    out << "wrote " << r.artifacts.size() << " artifact(s) under " << cfg.output_dir.string() << "\n";
  } catch (const TrainingDiverged& e) {
    err << "kflow: " << e.what() << "\n";
    return 1;
  } catch (const LangevinDiverged& e) {
    err << "kflow: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    err << "kflow: invalid config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "kflow: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace kflow
