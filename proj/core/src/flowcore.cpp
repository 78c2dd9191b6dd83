#include "kflow/flowcore.hpp"

#include <cmath>

#include "kernel_loops.hpp"

namespace kflow {

void check_particles(const ParticleSet& p, const char* what) {
  if (p.rows() < 1 || p.cols() < 1) throw DimensionError(std::string(what) + ": empty particle set");
  if (!p.allFinite()) throw DimensionError(std::string(what) + ": non-finite particle");
}

DiscriminatorField::DiscriminatorField(ParticleSet data_centers, ParticleSet gen_centers,
                                       KernelSpec kernel, double scale)
    : data_(std::move(data_centers)), gen_(std::move(gen_centers)), kernel_(std::move(kernel)), scale_(scale) {
  check_particles(data_, "DiscriminatorField data centers");
  check_particles(gen_, "DiscriminatorField gen centers");
  if (data_.cols() != gen_.cols()) throw DimensionError("DiscriminatorField: center dimensions differ");
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) throw DimensionError("DiscriminatorField: scale must be > 0");
}

double DiscriminatorField::eval(const Vector& x) const {
  if (x.size() != dim()) throw DimensionError("disc_eval: dimension mismatch");
  return detail::with_kernel(kernel_, [&](const auto& terms) {
    const double g = detail::mean_value(terms, x.data(), gen_);
    const double d = detail::mean_value(terms, x.data(), data_);
    return scale_ * kernel_.orientation() * (g - d);
  });
}

Vector DiscriminatorField::grad(const Vector& x) const {
  if (x.size() != dim()) throw DimensionError("disc_grad: dimension mismatch");
  Vector out = flow_residual(kernel_, x, data_, gen_);
  return (scale_ * kernel_.orientation()) * out;
}

PointMatrix DiscriminatorField::grad(const ParticleSet& x) const {
  if (x.cols() != dim()) throw DimensionError("disc_grad: dimension mismatch");
  PointMatrix out = flow_residual(kernel_, x, data_, gen_);
  out *= scale_ * kernel_.orientation();
  return out;
}

Vector flow_residual(const KernelSpec& kernel, const Vector& x, const ParticleSet& data,
                     const ParticleSet& prev_gen) {
  if (data.rows() < 1 || prev_gen.rows() < 1) throw DimensionError("flow_residual: empty center set");
  if (x.size() != data.cols() || x.size() != prev_gen.cols())
    throw DimensionError("flow_residual: dimension mismatch");
  Vector out = Vector::Zero(x.size());
  detail::with_kernel(kernel, [&](const auto& terms) {
    detail::accumulate_grad(terms, kernel.is_phs(), x.data(), prev_gen, 1.0 / prev_gen.rows(), out.data());
    detail::accumulate_grad(terms, kernel.is_phs(), x.data(), data, -1.0 / data.rows(), out.data());
    return 0;
  });
  return out;
}

PointMatrix flow_residual(const KernelSpec& kernel, const ParticleSet& x, const ParticleSet& data,
                          const ParticleSet& prev_gen) {
  if (data.rows() < 1 || prev_gen.rows() < 1) throw DimensionError("flow_residual: empty center set");
  if (x.cols() != data.cols() || x.cols() != prev_gen.cols())
    throw DimensionError("flow_residual: dimension mismatch");
  PointMatrix out = PointMatrix::Zero(x.rows(), x.cols());
  detail::with_kernel(kernel, [&](const auto& terms) {
    const double wg = 1.0 / prev_gen.rows();
    const double wd = -1.0 / data.rows();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      detail::accumulate_grad(terms, kernel.is_phs(), x.row(i).data(), prev_gen, wg, out.row(i).data());
      detail::accumulate_grad(terms, kernel.is_phs(), x.row(i).data(), data, wd, out.row(i).data());
    }
    return 0;
  });
  return out;
}

LossAndGrad flowgan_loss(const Generator& g, const ParticleSet& z, const ParticleSet& data,
                         const ParticleSet& prev_gen, const KernelSpec& kernel, FlowGradient mode) {
  if (z.rows() < 1 || data.rows() < 1 || prev_gen.rows() < 1) throw DimensionError("flowgan_loss: empty batch");
  const ParticleSet x = g.forward(z);
  const PointMatrix f = flow_residual(kernel, x, data, prev_gen);
  const double inv_b = 1.0 / static_cast<double>(z.rows());

  LossAndGrad out;
  out.loss = f.rowwise().squaredNorm().sum() * inv_b;

  PointMatrix upstream(x.rows(), x.cols());
  if (mode == FlowGradient::Transport) {
    upstream = (2.0 * inv_b * kernel.orientation()) * f;
  } else {
    upstream.setZero();
    detail::with_kernel(kernel, [&](const auto& terms) {
      const double wg = 1.0 / prev_gen.rows();
      const double wd = -1.0 / data.rows();
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        detail::accumulate_hvp(terms, kernel.is_phs(), x.row(i).data(), f.row(i).data(), prev_gen, wg,
                               upstream.row(i).data());
        detail::accumulate_hvp(terms, kernel.is_phs(), x.row(i).data(), f.row(i).data(), data, wd,
                               upstream.row(i).data());
      }
      return 0;
    });
    upstream *= 2.0 * inv_b;
  }
  out.grad = g.vjp(z, upstream);
  return out;
}

LossAndGrad flowgan_loss(const Generator& g, const Vector& theta, const ParticleSet& z,
                         const ParticleSet& data, const ParticleSet& prev_gen, const KernelSpec& kernel,
                         FlowGradient mode) {
  Generator local = g;
  local.set_params(theta);
  return flowgan_loss(local, z, data, prev_gen, kernel, mode);
}

double scoregan_value(const Generator& g, const ParticleSet& z, const DensityModel& target) {
  if (z.rows() < 1) throw DimensionError("scoregan_loss: empty batch");
  if (z.cols() != g.in_dim()) throw DimensionError("scoregan_loss: latent dimension mismatch");
  if (target.dim() != g.out_dim()) throw DimensionError("scoregan_loss: target dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Vector zi = z.row(i).transpose();
    const Vector x = g.forward(zi);
    acc += (generator_score(g, zi) - target.score(x)).squaredNorm();
  }
  return acc / static_cast<double>(z.rows());
}

namespace {

LossAndGrad scoregan_linear_gaussian(const LinearGenerator& lin, const ParticleSet& z, const Gaussian& target) {
  const Matrix& a = lin.weight;
  const Eigen::Index n = a.rows();
  const double inv_b = 1.0 / static_cast<double>(z.rows());
  const Matrix zc = z.transpose();
  const Matrix prec = num::solve(target.cov(), Matrix(Matrix::Identity(n, n)));
  const Matrix w = num::solve(Matrix(a.transpose()), zc);
  Matrix xc = a * zc;
  xc.colwise() += lin.bias - target.mean();
  const Matrix s = -w + prec * xc;
  const Matrix ainv_s = num::solve(a, s);

  LossAndGrad out;
  out.loss = s.colwise().squaredNorm().sum() * inv_b;
  const Matrix ga = (2.0 * inv_b) * (w * ainv_s.transpose() + prec * s * zc.transpose());
  const Vector gb = (2.0 * inv_b) * (prec * s.rowwise().sum());
  out.grad.resize(n * n + n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) out.grad(r * n + c) = ga(r, c);
  out.grad.tail(n) = gb;
  return out;
}

}  // namespace

LossAndGrad scoregan_loss(const Generator& g, const ParticleSet& z, const DensityModel& target) {
  const auto* lin = std::get_if<LinearGenerator>(&g.net());
  const auto* gauss = std::get_if<Gaussian>(&target.model());
  if (lin && gauss && g.in_dim() == g.out_dim()) {
    if (z.rows() < 1) throw DimensionError("scoregan_loss: empty batch");
    if (z.cols() != g.in_dim() || gauss->dim() != g.out_dim())
      throw DimensionError("scoregan_loss: dimension mismatch");
    return scoregan_linear_gaussian(*lin, z, *gauss);
  }

  LossAndGrad out;
  out.loss = scoregan_value(g, z, target);
  Vector theta = g.params();
  out.grad.resize(theta.size());
  Generator probe = g;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double base = theta(i);
    const double h = 1e-5 * (1.0 + std::abs(base));
    theta(i) = base + h;
    probe.set_params(theta);
    const double up = scoregan_value(probe, z, target);
    theta(i) = base - h;
    probe.set_params(theta);
    const double down = scoregan_value(probe, z, target);
    theta(i) = base;
    out.grad(i) = (up - down) / (2.0 * h);
  }
  return out;
}

LossAndGrad scoregan_loss(const Generator& g, const Vector& theta, const ParticleSet& z,
                          const DensityModel& target) {
  Generator local = g;
  local.set_params(theta);
  return scoregan_loss(local, z, target);
}

}  // namespace kflow
