#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "kflow/numkit.hpp"

namespace kflow {

/// Which gradient column the kernels follow.
///  - Exact: true derivatives of kappa (default; checked against finite differences).
///  - Tabulated: the prefactors as commonly tabulated for these kernels, which drop
///    constants (RBFG 1/sigma^2 instead of 2/sigma^2, IMQ 1/2, PHS k-2 instead of k).
enum class GradientConvention { Exact, Tabulated };

/// Radial profile of a kernel at squared radius u = |x|^2.
/// value = kappa(x); grad = scale * x; Hessian = scale * I + 2 * dscale * x x^T.
struct RadialTerms {
  double value;
  double scale;
  double dscale;  ///< d(scale)/du
};

struct RbfgKernel {
  double sigma;
  RadialTerms terms(double u, GradientConvention conv) const noexcept {
    const double inv = 1.0 / (sigma * sigma);
    const double e = std::exp(-u * inv);
    const double c = conv == GradientConvention::Exact ? 2.0 : 1.0;
    return {e, -c * inv * e, c * inv * inv * e};
  }
};

struct MogKernel {
  std::vector<double> sigmas;
  RadialTerms terms(double u, GradientConvention conv) const noexcept {
    RadialTerms sum{0.0, 0.0, 0.0};
    for (double s : sigmas) {
      const RadialTerms t = RbfgKernel{s}.terms(u, conv);
      sum.value += t.value;
      sum.scale += t.scale;
      sum.dscale += t.dscale;
    }
    return sum;
  }
};

struct ImqKernel {
  double c;
  RadialTerms terms(double u, GradientConvention conv) const noexcept {
    const double w = u + c;
    const double value = 1.0 / std::sqrt(w);
    const double f = conv == GradientConvention::Exact ? 1.0 : 0.5;
    const double w32 = value / w;
    return {value, -f * w32, 1.5 * f * w32 / w};
  }
};

/// Polyharmonic spline r^k, or r^k ln r when log_form is set.
struct PhsKernel {
  int k;
  int ambient_dim;
  bool log_form;

  /// |x| below which the PHS kernel is treated as coincident with its center.
  static constexpr double kOriginRadius = 1e-12;

  /// r^e for integer e given u = r^2.
  static double rpow(double u, int e) noexcept {
    const int half = (e < 0 ? -e : e) / 2;
    double p = 1.0;
    for (int i = 0; i < half; ++i) p *= u;
    if (e % 2 != 0) p *= std::sqrt(u);
    return e < 0 ? 1.0 / p : p;
  }

  RadialTerms terms(double u, GradientConvention conv) const noexcept {
    if (u < kOriginRadius * kOriginRadius) u += kOriginRadius * kOriginRadius;
    const double kd = static_cast<double>(k);
    const double gk = conv == GradientConvention::Exact ? kd : kd - 2.0;
    const double pk2 = rpow(u, k - 2);  // r^(k-2)
    const double pk4 = pk2 / u;                         // r^(k-4)
    if (!log_form) {
      return {pk2 * u, gk * pk2, 0.5 * gk * (kd - 2.0) * pk4};
    }
    const double ln_r = 0.5 * std::log(u);
    const double value = pk2 * u * ln_r;
    const double inner = gk * ln_r + 1.0;
    return {value, pk2 * inner, pk4 * (0.5 * (kd - 2.0) * inner + 0.5 * gk)};
  }
};

using KernelVariant = std::variant<RbfgKernel, MogKernel, ImqKernel, PhsKernel>;

class KernelSpec {
 public:
  static KernelSpec rbfg(double sigma);
  static KernelSpec mog(std::vector<double> sigmas = {0.5, 1.0, 2.0, 4.0, 8.0});
  static KernelSpec imq(double c);
  /// Polyharmonic spline with exponent k in ambient dimension n. The log form is used
  /// for even k >= 0; see README for how this relates to k = 2m - n.
  static KernelSpec phs(int k, int ambient_dim);

  const KernelVariant& variant() const noexcept { return kernel_; }
  GradientConvention convention() const noexcept { return convention_; }
  KernelSpec with_convention(GradientConvention c) const {
    KernelSpec out = *this;
    out.convention_ = c;
    return out;
  }

  bool is_phs() const noexcept { return std::holds_alternative<PhsKernel>(kernel_); }

  /// Sign that makes the kernel act as an attracting potential around data centers:
  /// +1 for the decaying kernels, the conditional-definiteness sign for PHS.
  double orientation() const noexcept;

  /// Whether the kernel is positive definite (usable for MMD).
  bool positive_definite() const noexcept { return !is_phs(); }

  RadialTerms terms(double u) const noexcept {
    return std::visit([&](const auto& k) { return k.terms(u, convention_); }, kernel_);
  }

  std::string describe() const;

 private:
  explicit KernelSpec(KernelVariant k) : kernel_(std::move(k)) {}
  KernelVariant kernel_;
  GradientConvention convention_ = GradientConvention::Exact;
};

/// Polyharmonic exponent k = 2m - n for order m in dimension n.
int phs_default_exponent(int order, int ambient_dim);

double kernel_eval(const KernelSpec& k, const Vector& x);

struct KernelGradient {
  Vector value;
  bool singular = false;  ///< PHS evaluated at its center; value is zero
};

KernelGradient kernel_grad(const KernelSpec& k, const Vector& x);

/// Throws NumericError for a PHS kernel at its center.
Matrix kernel_hessian(const KernelSpec& k, const Vector& x);

/// Central differences of kernel_eval with step h per coordinate.
Vector kernel_grad_fd(const KernelSpec& k, const Vector& x, double h);

}  // namespace kflow
