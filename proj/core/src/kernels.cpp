#include "kflow/kernels.hpp"

#include <sstream>

namespace kflow {

KernelSpec KernelSpec::rbfg(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DimensionError("rbfg: sigma must be > 0");
  return KernelSpec(RbfgKernel{sigma});
}

KernelSpec KernelSpec::mog(std::vector<double> sigmas) {
  if (sigmas.empty()) throw DimensionError("mog: sigma list must be nonempty");
  for (double s : sigmas)
    if (!(s > 0.0) || !std::isfinite(s)) throw DimensionError("mog: every sigma must be > 0");
  return KernelSpec(MogKernel{std::move(sigmas)});
}

KernelSpec KernelSpec::imq(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DimensionError("imq: c must be > 0");
  return KernelSpec(ImqKernel{c});
}

KernelSpec KernelSpec::phs(int k, int ambient_dim) {
  if (ambient_dim < 1) throw DimensionError("phs: ambient dimension must be >= 1");
  const bool log_form = k >= 0 && k % 2 == 0;
  return KernelSpec(PhsKernel{k, ambient_dim, log_form});
}

double KernelSpec::orientation() const noexcept {
  const auto* phs = std::get_if<PhsKernel>(&kernel_);
  if (phs == nullptr || phs->k < 0) return 1.0;
  // (-1)^ceil(k/2) for r^k, (-1)^(k/2 + 1) for r^k ln r.
  const int exponent = phs->log_form ? phs->k / 2 + 1 : (phs->k + 1) / 2;
  return exponent % 2 == 0 ? 1.0 : -1.0;
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, RbfgKernel>) {
          os << "rbfg(sigma=" << k.sigma << ")";
        } else if constexpr (std::is_same_v<T, MogKernel>) {
          os << "mog(sigmas=";
          for (std::size_t i = 0; i < k.sigmas.size(); ++i) os << (i ? "," : "") << k.sigmas[i];
          os << ")";
        } else if constexpr (std::is_same_v<T, ImqKernel>) {
          os << "imq(c=" << k.c << ")";
        } else {
          os << "phs(k=" << k.k << ",n=" << k.ambient_dim << (k.log_form ? ",log" : "") << ")";
        }
      },
      kernel_);
  if (convention_ == GradientConvention::Tabulated) os << "[table]";
  return os.str();
}

int phs_default_exponent(int order, int ambient_dim) {
  if (order < 1 || ambient_dim < 1) throw DimensionError("phs_default_exponent: m, n must be >= 1");
  return 2 * order - ambient_dim;
}

namespace {

bool at_phs_center(const KernelSpec& k, double u) {
  return k.is_phs() && u < PhsKernel::kOriginRadius * PhsKernel::kOriginRadius;
}

}  // namespace

double kernel_eval(const KernelSpec& k, const Vector& x) {
  return k.terms(x.squaredNorm()).value;
}

KernelGradient kernel_grad(const KernelSpec& k, const Vector& x) {
  const double u = x.squaredNorm();
  if (at_phs_center(k, u)) return {Vector::Zero(x.size()), true};
  return {k.terms(u).scale * x, false};
}

Matrix kernel_hessian(const KernelSpec& k, const Vector& x) {
  const double u = x.squaredNorm();
  if (at_phs_center(k, u)) throw NumericError("kernel_hessian: PHS kernel is singular at its center");
  const RadialTerms t = k.terms(u);
  const Eigen::Index n = x.size();
  Matrix h(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) h(i, j) = h(j, i) = 2.0 * t.dscale * (x(i) * x(j));
    h(i, i) = 2.0 * t.dscale * (x(i) * x(i)) + t.scale;
  }
  return h;
}

Vector kernel_grad_fd(const KernelSpec& k, const Vector& x, double h) {
  if (!(h > 0.0)) throw DimensionError("kernel_grad_fd: step must be > 0");
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = kernel_eval(k, probe);
    probe(i) = x(i) - h;
    const double down = kernel_eval(k, probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace kflow
