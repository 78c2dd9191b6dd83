#include "kflow/config.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

namespace kflow {

using nlohmann::json;

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Gaussian:
      return "gaussian";
    case ExperimentKind::Gmm:
      return "gmm";
    case ExperimentKind::Morph:
      return "morph";
    case ExperimentKind::Quiver:
      return "quiver";
  }
  return "gaussian";
}

ExperimentKind parse_kind(std::string_view s) {
  if (s == "gaussian") return ExperimentKind::Gaussian;
  if (s == "gmm") return ExperimentKind::Gmm;
  if (s == "morph" || s == "langevin") return ExperimentKind::Morph;
  if (s == "quiver") return ExperimentKind::Quiver;
  throw ConfigError("unknown experiment kind '" + std::string(s) + "'");
}

namespace {

// Reads keys from one JSON object and rejects any key left unread.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(path_ + "." + key + ": unknown key");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string name(const std::string& key) const { return path_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name(key) + ": wrong type");
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(out)) throw ConfigError(name(key) + ": must be finite");
    }
  }

  void get_optional(const std::string& key, std::optional<int>& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<int>();
    } catch (const json::exception&) {
      throw ConfigError(name(key) + ": wrong type");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> number_or_list(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw ConfigError(where + ": expected a number or a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(where + ": expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::vector<double>> parse_cov(const json& v, const std::string& where) {
  if (v.is_number()) return {{v.get<double>()}};
  if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a number, a diagonal or a matrix");
  if (v.front().is_number()) return {number_or_list(v, where)};
  std::vector<std::vector<double>> rows;
  for (const auto& r : v) {
    if (!r.is_array()) throw ConfigError(where + ": matrix rows must be lists");
    rows.push_back(number_or_list(r, where));
  }
  return rows;
}

void parse_component(Section& s, ComponentConfig& c) {
  if (s.has("mean")) c.mean = number_or_list(s.at("mean"), s.name("mean"));
  if (s.has("cov")) c.cov = parse_cov(s.at("cov"), s.name("cov"));
}

void parse_target(const json& j, TargetConfig& t) {
  Section s(j, "target");
  s.get("type", t.type);
  s.get("dim", t.dim);
  if (t.type == "gmm") {
    if (!s.has("components")) throw ConfigError("target.components: required for gmm");
    const json& list = s.at("components");
    if (!list.is_array() || list.empty()) throw ConfigError("target.components: expected a nonempty list");
    t.components.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section cs(list[i], "target.components[" + std::to_string(i) + "]");
      ComponentConfig c;
      if (!cs.has("weight")) throw ConfigError(cs.name("weight") + ": missing");
      cs.get("weight", c.weight);
      parse_component(cs, c);
      cs.finish();
      t.components.push_back(std::move(c));
    }
  } else {
    t.components.assign(1, ComponentConfig{});
    parse_component(s, t.components.front());
  }
  s.finish();
}

void parse_generator(const json& j, GeneratorConfig& g) {
  Section s(j, "generator");
  s.get("type", g.type);
  s.get("latent_dim", g.latent_dim);
  s.get("widths", g.widths);
  s.get("slope", g.slope);
  s.finish();
}

void parse_kernel(const json& j, KernelConfig& k) {
  Section s(j, "kernel");
  s.get("type", k.type);
  s.get("sigma", k.sigma);
  s.get("sigmas", k.sigmas);
  s.get("c", k.c);
  s.get_optional("k", k.k);
  s.get("convention", k.convention);
  s.finish();
}

void parse_train(const json& j, TrainConfig& t) {
  Section s(j, "train");
  s.get("loss", t.loss);
  s.get("iterations", t.iterations);
  s.get("batch", t.batch);
  s.get("learning_rate", t.learning_rate);
  s.get("beta1", t.beta1);
  s.get("beta2", t.beta2);
  s.get("epsilon", t.epsilon);
  s.get("metric_stride", t.metric_stride);
  s.get("flow_gradient", t.flow_gradient);
  s.get("metric_samples", t.metric_samples);
  s.finish();
}

void parse_langevin(const json& j, LangevinConfig& l) {
  Section s(j, "langevin");
  s.get("source", l.source);
  s.get("target", l.target);
  s.get("particles", l.particles);
  s.get("pool", l.pool);
  s.get("batch", l.batch);
  s.get("steps", l.steps);
  s.get("alpha0", l.alpha0);
  s.get("alpha_mode", l.alpha_mode);
  s.get("rho", l.rho);
  s.get("gamma_mode", l.gamma_mode);
  s.get("scale", l.scale);
  s.get("snapshot_stride", l.snapshot_stride);
  s.get("metric_stride", l.metric_stride);
  s.finish();
}

void parse_quiver(const json& j, QuiverConfig& q) {
  Section s(j, "quiver");
  s.get("field", q.field);
  s.get("extent", q.extent);
  s.get("nx", q.nx);
  s.get("ny", q.ny);
  s.get("centers", q.centers);
  s.finish();
}

void parse_gmm(const json& j, GmmConfig& g) {
  Section s(j, "gmm");
  s.get("coverage_radius", g.coverage_radius);
  s.get("data_as_generator", g.data_as_generator);
  s.finish();
}

template <typename T>
void require_one_of(const std::string& value, std::initializer_list<const char*> allowed, const T& where) {
  for (const char* a : allowed)
    if (value == a) return;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  throw ConfigError(std::string(where) + ": '" + value + "' is not one of " + list);
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  Section s(j, "config");
  if (!s.has("kind")) throw ConfigError("config.kind: missing");
  std::string kind;
  s.get("kind", kind);
  cfg.kind = parse_kind(kind);
  if (!s.has("seed")) throw ConfigError("config.seed: missing");
  s.get("seed", cfg.seed);
  std::string out = cfg.output_dir.string();
  s.get("output_dir", out);
  cfg.output_dir = out;
  if (s.has("target")) parse_target(s.at("target"), cfg.target);
  if (s.has("generator")) parse_generator(s.at("generator"), cfg.generator);
  if (s.has("kernel")) parse_kernel(s.at("kernel"), cfg.kernel);
  if (s.has("train")) parse_train(s.at("train"), cfg.train);
  if (s.has("langevin")) parse_langevin(s.at("langevin"), cfg.langevin);
  if (s.has("quiver")) parse_quiver(s.at("quiver"), cfg.quiver);
  if (s.has("gmm")) parse_gmm(s.at("gmm"), cfg.gmm);
  s.finish();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j;
  j["kind"] = to_string(cfg.kind);
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir.string();

  auto component_json = [](const ComponentConfig& c) {
    json out;
    out["mean"] = c.mean;
    out["cov"] = c.cov;
    return out;
  };
  json t;
  t["type"] = cfg.target.type;
  t["dim"] = cfg.target.dim;
  if (cfg.target.type == "gmm") {
    json list = json::array();
    for (const auto& c : cfg.target.components) {
      json cj = component_json(c);
      cj["weight"] = c.weight;
      list.push_back(cj);
    }
    t["components"] = list;
  } else {
    const json cj = component_json(cfg.target.components.front());
    t["mean"] = cj["mean"];
    t["cov"] = cj["cov"];
  }
  j["target"] = t;

  j["generator"] = {{"type", cfg.generator.type},
                    {"latent_dim", cfg.generator.latent_dim},
                    {"widths", cfg.generator.widths},
                    {"slope", cfg.generator.slope}};

  json k = {{"type", cfg.kernel.type},
            {"sigma", cfg.kernel.sigma},
            {"sigmas", cfg.kernel.sigmas},
            {"c", cfg.kernel.c},
            {"convention", cfg.kernel.convention}};
  if (cfg.kernel.k) k["k"] = *cfg.kernel.k;
  j["kernel"] = k;

  const auto& tr = cfg.train;
  j["train"] = {{"loss", tr.loss},
                {"iterations", tr.iterations},
                {"batch", tr.batch},
                {"learning_rate", tr.learning_rate},
                {"beta1", tr.beta1},
                {"beta2", tr.beta2},
                {"epsilon", tr.epsilon},
                {"metric_stride", tr.metric_stride},
                {"flow_gradient", tr.flow_gradient},
                {"metric_samples", tr.metric_samples}};

  const auto& l = cfg.langevin;
  j["langevin"] = {{"source", l.source},       {"target", l.target},
                   {"particles", l.particles}, {"pool", l.pool},
                   {"batch", l.batch},         {"steps", l.steps},
                   {"alpha0", l.alpha0},       {"alpha_mode", l.alpha_mode},
                   {"rho", l.rho},             {"gamma_mode", l.gamma_mode},
                   {"scale", l.scale},         {"snapshot_stride", l.snapshot_stride},
                   {"metric_stride", l.metric_stride}};

  j["quiver"] = {{"field", cfg.quiver.field},
                 {"extent", cfg.quiver.extent},
                 {"nx", cfg.quiver.nx},
                 {"ny", cfg.quiver.ny},
                 {"centers", cfg.quiver.centers}};
  j["gmm"] = {{"coverage_radius", cfg.gmm.coverage_radius}, {"data_as_generator", cfg.gmm.data_as_generator}};
  return j.dump(2) + "\n";
}

void validate_config(ExperimentConfig& cfg) {
  auto& t = cfg.target;
  require_one_of(t.type, {"gaussian", "gmm"}, "target.type");
  if (t.dim < 1) throw ConfigError("target.dim: must be >= 1");
  if (t.components.empty()) throw ConfigError("target: needs at least one component");
  if (t.type == "gaussian" && t.components.size() != 1) throw ConfigError("target: gaussian has one component");
  const auto dim = static_cast<std::size_t>(t.dim);
  double total = 0.0;
  for (auto& c : t.components) {
    if (c.mean.empty()) c.mean.assign(dim, 0.0);
    if (c.mean.size() == 1 && dim > 1) c.mean.assign(dim, c.mean.front());
    if (c.mean.size() != dim) throw ConfigError("target mean: length must equal dim");
    if (c.cov.size() == 1 && c.cov.front().size() == 1 && dim > 1) {
      const double v = c.cov.front().front();
      c.cov.assign(dim, std::vector<double>(dim, 0.0));
      for (std::size_t i = 0; i < dim; ++i) c.cov[i][i] = v;
    } else if (c.cov.size() == 1 && c.cov.front().size() == dim && dim > 1) {
      const std::vector<double> diag = c.cov.front();
      c.cov.assign(dim, std::vector<double>(dim, 0.0));
      for (std::size_t i = 0; i < dim; ++i) c.cov[i][i] = diag[i];
    }
    if (c.cov.size() != dim) throw ConfigError("target cov: expected dim rows");
    for (const auto& row : c.cov)
      if (row.size() != dim) throw ConfigError("target cov: expected dim columns");
    if (t.type == "gaussian") c.weight = 1.0;
    if (!(c.weight > 0.0)) throw ConfigError("target weight: must be > 0");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("target weights: must sum to 1");
  try {
    build_target(t);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("target: ") + e.what());
  }

  auto& g = cfg.generator;
  require_one_of(g.type, {"linear", "mlp"}, "generator.type");
  if (g.type == "linear") {
    if (g.latent_dim == 0) g.latent_dim = t.dim;
    if (g.latent_dim < 1) throw ConfigError("generator.latent_dim: must be >= 1");
  } else {
    if (g.widths.size() < 2) throw ConfigError("generator.widths: need input and output widths");
    for (int w : g.widths)
      if (w < 1) throw ConfigError("generator.widths: must be >= 1");
    if (g.widths.back() != t.dim) throw ConfigError("generator.widths: last width must equal target.dim");
    if (!(g.slope > 0.0 && g.slope < 1.0)) throw ConfigError("generator.slope: must lie in (0, 1)");
  }

  auto& k = cfg.kernel;
  require_one_of(k.type, {"rbfg", "mog", "imq", "phs"}, "kernel.type");
  require_one_of(k.convention, {"exact", "table"}, "kernel.convention");
  if (k.type == "phs" && !k.k) throw ConfigError("kernel.k: required for phs");
  try {
    build_kernel(k, cfg.kind == ExperimentKind::Morph ? 2 : t.dim);
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }

  auto& tr = cfg.train;
  require_one_of(tr.loss, {"flowgan", "scoregan"}, "train.loss");
  require_one_of(tr.flow_gradient, {"transport", "exact"}, "train.flow_gradient");
  if (tr.iterations < 0) throw ConfigError("train.iterations: must be >= 0");
  if (tr.batch == 0) tr.batch = t.dim <= 2 ? 500 : 100;
  if (tr.batch < 1) throw ConfigError("train.batch: must be >= 1");
  if (tr.metric_stride == 0) tr.metric_stride = cfg.kind == ExperimentKind::Gmm ? 100 : 10;
  if (tr.metric_stride < 1) throw ConfigError("train.metric_stride: must be >= 1");
  if (!(tr.learning_rate > 0.0)) throw ConfigError("train.learning_rate: must be > 0");
  if (!(tr.beta1 >= 0.0 && tr.beta1 < 1.0) || !(tr.beta2 >= 0.0 && tr.beta2 < 1.0))
    throw ConfigError("train.beta1/beta2: must lie in [0, 1)");
  if (!(tr.epsilon > 0.0)) throw ConfigError("train.epsilon: must be > 0");
  if (tr.metric_samples < t.dim + 1) throw ConfigError("train.metric_samples: must exceed target.dim");
  if (tr.loss == "scoregan") {
    const int in = g.type == "linear" ? g.latent_dim : g.widths.front();
    if (in > t.dim) throw ConfigError("generator: scoregan needs latent dim <= target dim");
  }

  auto& l = cfg.langevin;
  require_one_of(l.alpha_mode, {"constant", "geometric"}, "langevin.alpha_mode");
  require_one_of(l.gamma_mode, {"zero", "sqrt_two_alpha"}, "langevin.gamma_mode");
  if (l.particles < 1 || l.pool < 1 || l.batch < 1 || l.steps < 1)
    throw ConfigError("langevin: particles, pool, batch and steps must be >= 1");
  if (!(l.alpha0 >= 0.0)) throw ConfigError("langevin.alpha0: must be >= 0");
  if (l.alpha_mode == "geometric" && !(l.rho > 0.0 && l.rho < 1.0))
    throw ConfigError("langevin.rho: must lie in (0, 1)");
  if (!(l.scale > 0.0)) throw ConfigError("langevin.scale: must be > 0");
  if (l.snapshot_stride < 0) throw ConfigError("langevin.snapshot_stride: must be >= 0");
  if (l.metric_stride < 1) throw ConfigError("langevin.metric_stride: must be >= 1");
  if (l.source.empty() || l.target.empty()) throw ConfigError("langevin: source and target masks are required");

  auto& q = cfg.quiver;
  require_one_of(q.field, {"score", "flow"}, "quiver.field");
  if (q.extent.size() != 4 || !(q.extent[0] < q.extent[1]) || !(q.extent[2] < q.extent[3]))
    throw ConfigError("quiver.extent: expected [xmin, xmax, ymin, ymax] with min < max");
  if (q.nx < 2 || q.ny < 2) throw ConfigError("quiver.nx/ny: must be >= 2");
  if (q.centers < 1) throw ConfigError("quiver.centers: must be >= 1");
  if (cfg.kind == ExperimentKind::Quiver && t.dim != 2) throw ConfigError("quiver: target must be 2-D");

  if (!(cfg.gmm.coverage_radius > 0.0)) throw ConfigError("gmm.coverage_radius: must be > 0");
  if (cfg.kind == ExperimentKind::Gmm && t.type != "gmm") throw ConfigError("gmm: target.type must be gmm");
}

DensityModel build_target(const TargetConfig& t) {
  auto gaussian = [](const ComponentConfig& c) {
    const auto n = static_cast<Eigen::Index>(c.mean.size());
    Matrix cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = c.cov.at(i).at(j);
    return Gaussian(Vector(Eigen::Map<const Vector>(c.mean.data(), n)), cov);
  };
  if (t.type == "gaussian") return DensityModel(gaussian(t.components.front()));
  std::vector<double> weights;
  std::vector<Gaussian> comps;
  for (const auto& c : t.components) {
    weights.push_back(c.weight);
    comps.push_back(gaussian(c));
  }
  return DensityModel(GaussianMixture(std::move(weights), std::move(comps)));
}

KernelSpec build_kernel(const KernelConfig& k, int ambient_dim) {
  KernelSpec spec = k.type == "rbfg"  ? KernelSpec::rbfg(k.sigma)
                    : k.type == "mog" ? KernelSpec::mog(k.sigmas)
                    : k.type == "imq" ? KernelSpec::imq(k.c)
                                      : KernelSpec::phs(k.k.value_or(1), ambient_dim);
  if (k.convention == "table") spec = spec.with_convention(GradientConvention::Tabulated);
  return spec;
}

Generator build_generator(const GeneratorConfig& g, int out_dim, Prng& rng) {
  if (g.type == "linear") return Generator::linear(g.latent_dim, out_dim, rng);
  return Generator::mlp(g.widths, g.slope, rng);
}

TrainOptions build_train_options(const TrainConfig& t) {
  TrainOptions o;
  o.loss = t.loss == "scoregan" ? LossKind::ScoreGan : LossKind::FlowGan;
  o.iterations = t.iterations;
  o.batch = t.batch;
  o.adam = {t.learning_rate, t.beta1, t.beta2, t.epsilon};
  o.flow_gradient = t.flow_gradient == "exact" ? FlowGradient::Exact : FlowGradient::Transport;
  o.metric_stride = t.metric_stride;
  return o;
}

LangevinSchedule build_schedule(const LangevinConfig& l) {
  LangevinSchedule s;
  s.alpha0 = l.alpha0;
  s.alpha_mode = l.alpha_mode == "geometric" ? AlphaMode::Geometric : AlphaMode::Constant;
  s.rho = l.rho;
  s.gamma_mode = l.gamma_mode == "sqrt_two_alpha" ? GammaMode::SqrtTwoAlpha : GammaMode::Zero;
  s.horizon = l.steps;
  return s;
}

}  // namespace kflow
