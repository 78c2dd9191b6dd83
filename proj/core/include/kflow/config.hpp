#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kflow/flowcore.hpp"

namespace kflow {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Gaussian, Gmm, Morph, Quiver };

struct ComponentConfig {
  double weight = 1.0;
  std::vector<double> mean;  ///< one entry broadcasts to every coordinate
  /// One entry: isotropic variance. One row of length dim: diagonal. Otherwise dim x dim.
  std::vector<std::vector<double>> cov{{1.0}};
};

struct TargetConfig {
  std::string type = "gaussian";  ///< "gaussian" (one component) | "gmm"
  int dim = 2;
  std::vector<ComponentConfig> components{ComponentConfig{}};
};

struct GeneratorConfig {
  std::string type = "linear";  ///< "linear" | "mlp"
  int latent_dim = 0;           ///< linear; 0 means the target dimension
  std::vector<int> widths;      ///< mlp, including input and output widths
  double slope = 0.2;
};

struct KernelConfig {
  std::string type = "phs";  ///< "rbfg" | "mog" | "imq" | "phs"
  double sigma = 1.0;
  std::vector<double> sigmas{0.5, 1.0, 2.0, 4.0, 8.0};
  double c = 1.0;
  std::optional<int> k;  ///< required for phs
  std::string convention = "exact";  ///< "exact" | "table"
};

struct TrainConfig {
  std::string loss = "flowgan";  ///< "flowgan" | "scoregan"
  long iterations = 5000;
  long batch = 0;  ///< 0: 500 for dim <= 2, else 100
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long metric_stride = 0;  ///< 0: 10 for gaussian, 100 for gmm
  std::string flow_gradient = "transport";  ///< "transport" | "exact"
  long metric_samples = 1000;
};

struct LangevinConfig {
  std::string source = "builtin:disk";  ///< PGM path or builtin:<name>
  std::string target = "builtin:heart";
  long particles = 1000;
  long pool = 2000;
  long batch = 1000;
  long steps = 500;
  double alpha0 = 1.0;
  std::string alpha_mode = "constant";  ///< "constant" | "geometric"
  double rho = 0.99;
  std::string gamma_mode = "zero";  ///< "zero" | "sqrt_two_alpha"
  double scale = 1.0;
  long snapshot_stride = 50;  ///< 0 disables snapshots
  long metric_stride = 1;
};

struct QuiverConfig {
  std::string field = "score";  ///< "score" | "flow"
  std::vector<double> extent{-8.0, 8.0, -8.0, 8.0};  ///< xmin, xmax, ymin, ymax
  int nx = 50;
  int ny = 50;
  long centers = 500;
};

struct GmmConfig {
  double coverage_radius = 3.0;
  bool data_as_generator = false;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Gaussian;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  TargetConfig target;
  GeneratorConfig generator;
  KernelConfig kernel;
  TrainConfig train;
  LangevinConfig langevin;
  QuiverConfig quiver;
  GmmConfig gmm;
  /// Directory that relative mask paths resolve against.
  std::filesystem::path base_dir = ".";
};

std::string to_string(ExperimentKind k);
ExperimentKind parse_kind(std::string_view s);

/// Parses JSON text. Unknown keys and wrong types raise ConfigError.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);

/// Fills the kind-dependent defaults (batch, metric stride, latent width) and checks
/// every range; throws ConfigError.
void validate_config(ExperimentConfig& cfg);

DensityModel build_target(const TargetConfig& t);
KernelSpec build_kernel(const KernelConfig& k, int ambient_dim);
Generator build_generator(const GeneratorConfig& g, int out_dim, Prng& rng);
TrainOptions build_train_options(const TrainConfig& t);
LangevinSchedule build_schedule(const LangevinConfig& l);

}  // namespace kflow
