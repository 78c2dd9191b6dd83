// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance <output_dir> [criterion...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kflow/config.hpp"
#include "kflow/experiments.hpp"
#include "kflow/flowcore.hpp"
#include "kflow/scores.hpp"

using namespace kflow;
namespace fs = std::filesystem;

namespace {

fs::path g_out;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

ExperimentConfig load(const std::string& name, const std::string& run) {
  ExperimentConfig cfg = load_config(fs::path(KFLOW_SOURCE_DIR) / "configs" / name);
  cfg.output_dir = g_out / run;
  return cfg;
}

Vector random_vector(Prng& rng, Eigen::Index n, double scale) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

Vector central_grad(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p(i) = x(i) + h;
    const double up = f(p);
    p(i) = x(i) - h;
    const double down = f(p);
    p(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

Generator random_mlp(Prng& rng, const std::vector<int>& widths) {
  Generator g = Generator::mlp(widths, 0.2, rng);
  g.set_params(random_vector(rng, g.layout().size(), 1.0));
  return g;
}

Outcome kernel_gradients() {
  double worst = 0.0;
  int checks = 0;
  Prng rng(1001);
  for (int n : {2, 16, 63}) {
    const std::vector<KernelSpec> ks{KernelSpec::rbfg(1.0), KernelSpec::mog(), KernelSpec::imq(1.0),
                                     KernelSpec::phs(1, n), KernelSpec::phs(3, n), KernelSpec::phs(2, n)};
    for (const KernelSpec& k : ks) {
      for (int i = 0; i < 100; ++i) {
        Vector x = sample_std_normal(rng, static_cast<std::size_t>(n));
        x *= (0.1 + 2.9 * rng.uniform()) / x.norm();
        const Vector fd = central_grad([&](const Vector& p) { return kernel_eval(k, p); }, x, 1e-5);
        const Vector an = kernel_grad(k, x).value;
        worst = std::max(worst, rel_err(an, fd));
        ++checks;
      }
    }
  }
  return {worst <= 1e-6, std::to_string(checks) + " points, worst relative error " + fmt(worst) + " (<= 1e-6)"};
}

Outcome generator_scores() {
  Prng rng(1002);
  double worst_linear = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = trial < 25 ? 2 : 16;
    // Singular values in [0.5, 2] keep the N(b, AA^T) reference itself accurate to ~1e-14.
    const Matrix u = Eigen::HouseholderQR<Matrix>(Matrix(sample_std_normal(rng, n, n))).householderQ();
    const Matrix v = Eigen::HouseholderQR<Matrix>(Matrix(sample_std_normal(rng, n, n))).householderQ();
    Vector sv(n);
    for (int i = 0; i < n; ++i) sv(i) = 0.5 + 1.5 * rng.uniform();
    const Matrix a = u * sv.asDiagonal() * v.transpose();
    const Vector b = random_vector(rng, n, 3.0);
    const Generator g(LinearGenerator{a, b});
    const Gaussian push(b, a * a.transpose());
    const Vector z = sample_std_normal(rng, static_cast<std::size_t>(n));
    const Vector s = generator_score_square(g, z);
    worst_linear = std::max(worst_linear, (s - push.score(g.forward(z))).norm() / std::max(1.0, s.norm()));
  }

  // Change of variables: log p(x) = log N(G^{-1}(x)) - ln|det J(G^{-1}(x))|, G^{-1} by Newton.
  const Generator mlp = random_mlp(rng, {2, 2, 2});
  double worst_mlp = 0.0;
  int points = 0;
  while (points < 20) {
    const Vector z0 = random_vector(rng, 2, 1.5);
    const Matrix j0 = mlp.jacobian(z0);
    if (std::abs(j0.determinant()) < 1e-2) continue;
    auto logp = [&](const Vector& x) {
      Vector z = z0;
      for (int it = 0; it < 50; ++it) {
        const Vector r = mlp.forward(z) - x;
        if (r.norm() < 1e-14) break;
        z -= mlp.jacobian(z).lu().solve(r);
      }
      return -0.5 * z.squaredNorm() - std::log(2.0 * M_PI) - std::log(std::abs(mlp.jacobian(z).determinant()));
    };
    const Vector x0 = mlp.forward(z0);
    const Vector fd = central_grad(logp, x0, 1e-6);
    const Vector fd_wide = central_grad(logp, x0, 1e-4);
    // Points within a step of an activation kink give unreliable differences in either oracle.
    if ((fd - fd_wide).norm() > 1e-3 * fd.norm()) continue;
    worst_mlp = std::max(worst_mlp, rel_err(generator_score_square(mlp, z0), fd));
    ++points;
  }
  return {worst_linear <= 1e-10 && worst_mlp <= 1e-4,
          "linear worst " + fmt(worst_linear) + " (<= 1e-10), mlp worst " + fmt(worst_mlp) + " (<= 1e-4)"};
}

long first_below(const MetricSeries& s, double threshold) {
  for (const auto& [it, v] : s.points())
    if (v < threshold) return it;
  return -1;
}

Outcome gaussian_2d() {
  auto timed = [](const char* config, const char* run, double& secs) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult r = run_experiment(load(config, run));
    secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };
  double tf = 0.0, ts = 0.0;
  const ExperimentResult flow = timed("gaussian2d_flowgan.json", "c3_flowgan", tf);
  const ExperimentResult score = timed("gaussian2d_scoregan.json", "c3_scoregan", ts);
  const long hf = first_below(flow.find("w2"), 1e-2);
  const long hs = first_below(score.find("w2"), 1e-2);
  const bool pass = hf >= 0 && hf <= 5000 && hs >= 0 && hs <= 2000 && tf < 120.0 && ts < 120.0;
  return {pass, "runs " + fmt(tf) + " s and " + fmt(ts) + " s (< 120 s each); FloWGAN W2 " + fmt(flow.summary.at("w2_initial")) + " -> " + fmt(flow.summary.at("w2_final")) +
                    ", below 1e-2 at iteration " + std::to_string(hf) + " (<= 5000); ScoreGAN W2 " +
                    fmt(score.summary.at("w2_initial")) + " -> " + fmt(score.summary.at("w2_final")) +
                    ", below 1e-2 at iteration " + std::to_string(hs) + " (<= 2000)"};
}

Outcome gaussian_128() {
  const ExperimentResult r = run_experiment(load("gaussian128_flowgan.json", "c4_gaussian128"));
  const MetricSeries& w2 = r.find("w2");
  const double initial = w2.points().front().second;
  double best = initial;
  for (const auto& [it, v] : w2.points())
    if (it <= 10000) best = std::min(best, v);
  const double reduction = 1.0 - best / initial;
  return {reduction >= 0.9, "W2 " + fmt(initial) + " -> " + fmt(best) + ", reduction " + fmt(100.0 * reduction) +
                                "% (>= 90%)"};
}

Outcome gmm_modes() {
  const ExperimentResult r = run_experiment(load("gmm_flowgan.json", "c5_gmm"));
  const double minority = r.summary.at("coverage_0_final");
  const double majority = r.summary.at("coverage_1_final");
  return {minority >= 0.05 && majority >= 0.5,
          "minority coverage " + fmt(minority) + " (>= 0.05), majority " + fmt(majority) + " (>= 0.5)"};
}

Outcome morphing() {
  ExperimentConfig disk = load("morph_disk_heart.json", "c6_disk");
  ExperimentConfig spiral = load("morph_spiral_heart.json", "c6_spiral");
  disk.langevin.snapshot_stride = 0;
  spiral.langevin.snapshot_stride = 0;
  const ExperimentResult rd = run_experiment(disk);
  const ExperimentResult rs = run_experiment(spiral);
  const auto hd = static_cast<long>(rd.summary.at("first_step_below_10pct"));
  const auto hs = static_cast<long>(rs.summary.at("first_step_below_10pct"));
  const bool pass = hd >= 0 && hd <= 250 && hs >= 0 && hs <= 500;
  return {pass, "disk->heart below 10% at step " + std::to_string(hd) + " (<= 250), spiral->heart at step " +
                    std::to_string(hs) + " (<= 500)"};
}

Outcome langevin_noise() {
  ExperimentConfig clean = load("morph_disk_heart.json", "c7_zero");
  ExperimentConfig noisy = load("morph_disk_heart_noise.json", "c7_noise");
  clean.langevin.snapshot_stride = 0;
  noisy.langevin.snapshot_stride = 0;
  const double e_clean = run_experiment(clean).summary.at("energy_distance_final");
  const double e_noisy = run_experiment(noisy).summary.at("energy_distance_final");
  return {e_noisy > e_clean, "final energy distance with noise " + fmt(e_noisy) + " vs without " + fmt(e_clean)};
}

Outcome fgan_table() {
  int exact = 0;
  for (double r : {0.1, 0.5, 1.0, 2.0, 10.0}) {
    exact += fgan_coefficient(Divergence::Kl, r) == r;
    exact += fgan_coefficient(Divergence::ReverseKl, r) == 1.0;
    exact += fgan_coefficient(Divergence::PearsonChi2, r) == 2.0 * r * r;
    exact += fgan_coefficient(Divergence::SquaredHellinger, r) == 0.5 * std::sqrt(r);
    exact += fgan_coefficient(Divergence::Sgan, r) == r * r / (r + 1.0);
  }
  return {exact == 25, std::to_string(exact) + "/25 exact"};
}

Outcome loss_gradients() {
  Prng rng(1009);
  const KernelSpec kernel = KernelSpec::phs(1, 2);
  const DensityModel target(Gaussian::isotropic(Vector::Constant(2, 5.0), 0.75));
  double worst_flow = 0.0;
  double worst_score = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Generator g = random_mlp(rng, {2, 8, 2});
    const ParticleSet z = sample_std_normal(rng, 16, 2);
    const ParticleSet data = target.sample(rng, 16);
    const ParticleSet prev = g.forward(sample_std_normal(rng, 16, 2));
    const Vector theta = g.params();
    const Vector an = flowgan_loss(g, z, data, prev, kernel, FlowGradient::Exact).grad;
    const Vector fd = central_grad(
        [&](const Vector& t) { return flowgan_loss(g, t, z, data, prev, kernel).loss; }, theta, 1e-6);
    worst_flow = std::max(worst_flow, rel_err(an, fd));
  }
  int trials = 0;
  while (trials < 20) {
    const Generator g = random_mlp(rng, {2, 8, 2});
    const ParticleSet z = sample_std_normal(rng, 8, 2);
    // The mismatch is only defined where the generator Jacobian is invertible.
    bool regular = true;
    for (Eigen::Index i = 0; i < z.rows(); ++i)
      regular = regular && std::abs(g.jacobian(Vector(z.row(i).transpose())).determinant()) > 1e-2;
    if (!regular) continue;
    const Vector theta = g.params();
    const Vector an = scoregan_loss(g, z, target).grad;
    const Vector fd = central_grad([&](const Vector& t) { return scoregan_loss(g, t, z, target).loss; }, theta, 1e-6);
    worst_score = std::max(worst_score, rel_err(an, fd));
    ++trials;
  }
  return {worst_flow <= 1e-4 && worst_score <= 1e-4,
          "FloWGAN worst " + fmt(worst_flow) + ", ScoreGAN worst " + fmt(worst_score) + " (<= 1e-4)"};
}

std::vector<std::pair<fs::path, std::string>> csv_files(const fs::path& dir) {
  std::vector<std::pair<fs::path, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out.emplace_back(fs::relative(e.path(), dir), ss.str());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism() {
  struct Run {
    const char* config;
    std::function<void(ExperimentConfig&)> shrink;
  };
  const std::vector<Run> runs{
      {"gaussian2d_flowgan.json", [](ExperimentConfig& c) { c.train.iterations = 50; }},
      {"gaussian2d_scoregan.json", [](ExperimentConfig& c) { c.train.iterations = 50; }},
      {"gmm_flowgan.json",
       [](ExperimentConfig& c) {
         c.train.iterations = 50;
         c.train.metric_stride = 10;
       }},
      {"morph_disk_heart_noise.json",
       [](ExperimentConfig& c) {
         c.langevin.steps = 10;
         c.langevin.snapshot_stride = 5;
       }},
      {"quiver_gmm_score.json", [](ExperimentConfig&) {}},
      {"quiver_gmm_flow.json", [](ExperimentConfig&) {}},
  };
  std::size_t files = 0;
  std::vector<std::string> mismatched;
  for (const Run& run : runs) {
    std::vector<std::pair<fs::path, std::string>> outputs[2];
    for (int rep = 0; rep < 2; ++rep) {
      ExperimentConfig cfg = load(run.config, std::string("c10_") + run.config + "_" + std::to_string(rep));
      run.shrink(cfg);
      fs::remove_all(cfg.output_dir);
      run_experiment(cfg);
      outputs[rep] = csv_files(cfg.output_dir);
    }
    files += outputs[0].size();
    if (outputs[0].empty() || outputs[0] != outputs[1]) mismatched.emplace_back(run.config);
  }
  std::string detail = std::to_string(runs.size()) + " drivers, " + std::to_string(files) + " CSV files compared";
  for (const auto& m : mismatched) detail += "; differs: " + m;
  return {mismatched.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0: no runtime bound
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  g_out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::stoi(argv[i]));
  fs::create_directories(g_out);

  const std::vector<Criterion> criteria{
      {1, "kernel gradients vs finite differences", 5.0, kernel_gradients},
      {2, "generator score exactness", 30.0, generator_scores},
      {3, "2-D Gaussian learning", 0.0, gaussian_2d},
      {4, "128-D Gaussian W2 reduction", 600.0, gaussian_128},
      {5, "GMM mode recovery", 300.0, gmm_modes},
      {6, "shape morphing", 120.0, morphing},
      {7, "Langevin noise ablation", 120.0, langevin_noise},
      {8, "f-GAN coefficient table", 0.0, fgan_table},
      {9, "loss gradient integrity", 60.0, loss_gradients},
      {10, "driver determinism", 0.0, determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = o.pass;
    std::string timing = fmt(secs) + " s";
    if (c.budget_s > 0.0) {
      timing += " (budget " + fmt(c.budget_s) + " s)";
      if (secs > c.budget_s) pass = false;
    }
    if (!pass) ++failures;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " [" << c.name << "]: " << o.detail << "; "
              << timing << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
