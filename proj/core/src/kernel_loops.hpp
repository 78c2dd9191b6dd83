#pragma once

// Inner loops over center sets with the kernel variant resolved once per call.

#include "kflow/kernels.hpp"

namespace kflow::detail {

template <typename Fn>
decltype(auto) with_kernel(const KernelSpec& k, Fn&& fn) {
  const GradientConvention conv = k.convention();
  return std::visit(
      [&](const auto& kk) { return fn([&kk, conv](double u) { return kk.terms(u, conv); }); }, k.variant());
}

constexpr double kPhsOrigin2 = PhsKernel::kOriginRadius * PhsKernel::kOriginRadius;

template <typename Terms, typename Centers>
double mean_value(const Terms& terms, const double* x, const Centers& c) {
  const Eigen::Index n = c.cols();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < c.rows(); ++j) {
    const double* cj = c.row(j).data();
    double u = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double d = x[k] - cj[k];
      u += d * d;
    }
    acc += terms(u).value;
  }
  return acc / static_cast<double>(c.rows());
}

// out += w * sum_j grad k(x - c_j)
template <typename Terms, typename Centers>
void accumulate_grad(const Terms& terms, bool phs, const double* x, const Centers& c, double w, double* out) {
  const Eigen::Index n = c.cols();
  for (Eigen::Index j = 0; j < c.rows(); ++j) {
    const double* cj = c.row(j).data();
    double u = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double d = x[k] - cj[k];
      u += d * d;
    }
    if (phs && u < kPhsOrigin2) continue;
    const double s = w * terms(u).scale;
    for (Eigen::Index k = 0; k < n; ++k) out[k] += s * (x[k] - cj[k]);
  }
}

// out += w * sum_j H(x - c_j) v, H(y) v = scale v + 2 dscale y (y . v)
template <typename Terms, typename Centers>
void accumulate_hvp(const Terms& terms, bool phs, const double* x, const double* v, const Centers& c, double w,
                    double* out) {
  const Eigen::Index n = c.cols();
  for (Eigen::Index j = 0; j < c.rows(); ++j) {
    const double* cj = c.row(j).data();
    double u = 0.0;
    double yv = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double d = x[k] - cj[k];
      u += d * d;
      yv += d * v[k];
    }
    if (phs && u < kPhsOrigin2) continue;
    const RadialTerms t = terms(u);
    const double a = w * t.scale;
    const double b = 2.0 * w * t.dscale * yv;
    for (Eigen::Index k = 0; k < n; ++k) out[k] += a * v[k] + b * (x[k] - cj[k]);
  }
}

}  // namespace kflow::detail
