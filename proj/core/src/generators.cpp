#include "kflow/generators.hpp"

#include <cmath>
#include <sstream>

namespace kflow {

std::vector<int> MlpGenerator::widths() const {
  std::vector<int> w;
  if (weights.empty()) return w;
  w.push_back(static_cast<int>(weights.front().cols()));
  for (const auto& m : weights) w.push_back(static_cast<int>(m.rows()));
  return w;
}

std::string ParamLayout::describe() const {
  std::ostringstream os;
  for (const auto& s : slices) os << s.name << " " << s.rows << " " << s.cols << " " << s.offset << "\n";
  return os.str();
}

namespace {

Matrix glorot(Eigen::Index rows, Eigen::Index cols, Prng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
  return m;
}

void validate(const LinearGenerator& g) {
  if (g.weight.rows() != g.bias.size()) throw DimensionError("LinearGenerator: A rows != b length");
  if (g.weight.size() == 0) throw DimensionError("LinearGenerator: empty weight");
  if (!g.weight.allFinite() || !g.bias.allFinite()) throw DimensionError("LinearGenerator: non-finite entry");
}

void validate(const MlpGenerator& g) {
  if (g.weights.empty()) throw DimensionError("MlpGenerator: no layers");
  if (g.weights.size() != g.biases.size()) throw DimensionError("MlpGenerator: weight/bias count mismatch");
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    if (g.weights[l].rows() != g.biases[l].size())
      throw DimensionError("MlpGenerator: bias length mismatch");
    if (l > 0 && g.weights[l].cols() != g.weights[l - 1].rows())
      throw DimensionError("MlpGenerator: incompatible consecutive widths");
  }
  if (!(g.slope > 0.0 && g.slope < 1.0)) throw DimensionError("MlpGenerator: slope must lie in (0, 1)");
}

// Copies a row-major block into/out of the flat vector.
void pack(const Matrix& m, Vector& out, Eigen::Index offset) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(offset + i * m.cols() + j) = m(i, j);
}

void unpack(Matrix& m, const Vector& in, Eigen::Index offset) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = in(offset + i * m.cols() + j);
}

struct MlpTape {
  std::vector<PointMatrix> inputs;  // activation fed into layer l
  std::vector<PointMatrix> pre;     // pre-activation of layer l
};

PointMatrix mlp_forward(const MlpGenerator& g, const PointMatrix& z, MlpTape* tape) {
  PointMatrix h = z;
  const std::size_t layers = g.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    PointMatrix pre = h * g.weights[l].transpose();
    pre.rowwise() += g.biases[l].transpose();
    if (tape) {
      tape->inputs.push_back(h);
      tape->pre.push_back(pre);
    }
    if (l + 1 < layers) {
      h = pre.unaryExpr([s = g.slope](double v) { return v >= 0.0 ? v : s * v; });
    } else {
      h = std::move(pre);
    }
  }
  return h;
}

}  // namespace

Generator::Generator(LinearGenerator g) : net_(std::move(g)) { validate(std::get<LinearGenerator>(net_)); }
Generator::Generator(MlpGenerator g) : net_(std::move(g)) { validate(std::get<MlpGenerator>(net_)); }

Generator Generator::linear(Eigen::Index in_dim, Eigen::Index out_dim, Prng& rng) {
  return Generator(LinearGenerator{glorot(out_dim, in_dim, rng), Vector::Zero(out_dim)});
}

Generator Generator::mlp(const std::vector<int>& widths, double slope, Prng& rng) {
  if (widths.size() < 2) throw DimensionError("mlp: need at least input and output widths");
  MlpGenerator g;
  g.slope = slope;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l] < 1 || widths[l + 1] < 1) throw DimensionError("mlp: widths must be positive");
    g.weights.push_back(glorot(widths[l + 1], widths[l], rng));
    g.biases.push_back(Vector::Zero(widths[l + 1]));
  }
  return Generator(std::move(g));
}

Eigen::Index Generator::in_dim() const {
  return std::visit(
      [](const auto& g) -> Eigen::Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(g)>, LinearGenerator>)
          return g.weight.cols();
        else
          return g.weights.front().cols();
      },
      net_);
}

Eigen::Index Generator::out_dim() const {
  return std::visit(
      [](const auto& g) -> Eigen::Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(g)>, LinearGenerator>)
          return g.weight.rows();
        else
          return g.weights.back().rows();
      },
      net_);
}

ParamLayout Generator::layout() const {
  ParamLayout out;
  Eigen::Index offset = 0;
  auto add = [&](std::string name, Eigen::Index r, Eigen::Index c) {
    out.slices.push_back({std::move(name), r, c, offset});
    offset += r * c;
  };
  if (const auto* lin = std::get_if<LinearGenerator>(&net_)) {
    add("A", lin->weight.rows(), lin->weight.cols());
    add("b", lin->bias.size(), 1);
  } else {
    const auto& mlp = std::get<MlpGenerator>(net_);
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
      add("W" + std::to_string(l), mlp.weights[l].rows(), mlp.weights[l].cols());
      add("b" + std::to_string(l), mlp.biases[l].size(), 1);
    }
  }
  return out;
}

Vector Generator::params() const {
  const ParamLayout lay = layout();
  Vector theta(lay.size());
  if (const auto* lin = std::get_if<LinearGenerator>(&net_)) {
    pack(lin->weight, theta, lay.slices[0].offset);
    theta.segment(lay.slices[1].offset, lin->bias.size()) = lin->bias;
  } else {
    const auto& mlp = std::get<MlpGenerator>(net_);
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
      pack(mlp.weights[l], theta, lay.slices[2 * l].offset);
      theta.segment(lay.slices[2 * l + 1].offset, mlp.biases[l].size()) = mlp.biases[l];
    }
  }
  return theta;
}

void Generator::set_params(const Vector& theta) {
  const ParamLayout lay = layout();
  if (theta.size() != lay.size()) throw DimensionError("set_params: parameter count mismatch");
  if (auto* lin = std::get_if<LinearGenerator>(&net_)) {
    unpack(lin->weight, theta, lay.slices[0].offset);
    lin->bias = theta.segment(lay.slices[1].offset, lin->bias.size());
  } else {
    auto& mlp = std::get<MlpGenerator>(net_);
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
      unpack(mlp.weights[l], theta, lay.slices[2 * l].offset);
      mlp.biases[l] = theta.segment(lay.slices[2 * l + 1].offset, mlp.biases[l].size());
    }
  }
}

Vector Generator::forward(const Vector& z) const {
  if (z.size() != in_dim()) throw DimensionError("forward: latent dimension mismatch");
  if (const auto* lin = std::get_if<LinearGenerator>(&net_)) return lin->weight * z + lin->bias;
  PointMatrix row = z.transpose();
  return mlp_forward(std::get<MlpGenerator>(net_), row, nullptr).row(0).transpose();
}

PointMatrix Generator::forward(const PointMatrix& z) const {
  if (z.cols() != in_dim()) throw DimensionError("forward: latent dimension mismatch");
  if (const auto* lin = std::get_if<LinearGenerator>(&net_)) {
    PointMatrix x = z * lin->weight.transpose();
    x.rowwise() += lin->bias.transpose();
    return x;
  }
  return mlp_forward(std::get<MlpGenerator>(net_), z, nullptr);
}

Matrix Generator::jacobian(const Vector& z) const {
  if (z.size() != in_dim()) throw DimensionError("jacobian: latent dimension mismatch");
  if (const auto* lin = std::get_if<LinearGenerator>(&net_)) return lin->weight;
  const auto& mlp = std::get<MlpGenerator>(net_);
  Vector h = z;
  Matrix j = Matrix::Identity(z.size(), z.size());
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    Vector pre = mlp.weights[l] * h + mlp.biases[l];
    j = mlp.weights[l] * j;
    if (l + 1 < mlp.weights.size()) {
      for (Eigen::Index i = 0; i < pre.size(); ++i) {
        if (pre(i) < 0.0) {
          j.row(i) *= mlp.slope;
          pre(i) *= mlp.slope;
        }
      }
    }
    h = std::move(pre);
  }
  return j;
}

Vector Generator::vjp(const PointMatrix& z, const PointMatrix& upstream) const {
  if (z.cols() != in_dim() || upstream.cols() != out_dim() || z.rows() != upstream.rows())
    throw DimensionError("vjp: batch shape mismatch");
  const ParamLayout lay = layout();
  Vector grad = Vector::Zero(lay.size());
  if (std::holds_alternative<LinearGenerator>(net_)) {
    const Matrix ga = upstream.transpose() * z;
    pack(ga, grad, lay.slices[0].offset);
    grad.segment(lay.slices[1].offset, out_dim()) = upstream.colwise().sum().transpose();
    return grad;
  }
  const auto& mlp = std::get<MlpGenerator>(net_);
  MlpTape tape;
  mlp_forward(mlp, z, &tape);
  PointMatrix g = upstream;
  for (std::size_t l = mlp.weights.size(); l-- > 0;) {
    const Matrix gw = g.transpose() * tape.inputs[l];
    pack(gw, grad, lay.slices[2 * l].offset);
    grad.segment(lay.slices[2 * l + 1].offset, mlp.biases[l].size()) = g.colwise().sum().transpose();
    if (l == 0) break;
    PointMatrix back = g * mlp.weights[l];
    const PointMatrix& pre = tape.pre[l - 1];
    for (Eigen::Index i = 0; i < back.rows(); ++i)
      for (Eigen::Index k = 0; k < back.cols(); ++k)
        if (pre(i, k) < 0.0) back(i, k) *= mlp.slope;
    g = std::move(back);
  }
  return grad;
}

Vector Generator::vjp(const Vector& z, const Vector& upstream) const {
  PointMatrix zr = z.transpose();
  PointMatrix ur = upstream.transpose();
  return vjp(zr, ur);
}

Vector logdet_grad_fd(const Generator& g, const Vector& z, double h) {
  if (g.in_dim() != g.out_dim()) throw DimensionError("logdet_grad_fd: generator must be square");
  if (g.is_linear()) return Vector::Zero(z.size());
  return logdet_grad_fd([&](const Vector& at) { return g.jacobian(at); }, z, h);
}

Vector generator_score_square(const Generator& g, const Vector& z, const Gaussian& prior) {
  if (g.in_dim() != g.out_dim()) throw DimensionError("generator_score_square: generator is not square");
  if (prior.dim() != g.in_dim()) throw DimensionError("generator_score_square: prior dimension mismatch");
  const Matrix j = g.jacobian(z);
  const Vector rhs = prior.score(z) - logdet_grad_fd(g, z);
  return num::solve(j.transpose(), rhs);
}

Vector generator_score_square(const Generator& g, const Vector& z) {
  return generator_score_square(g, z, Gaussian::standard(g.in_dim()));
}

Vector generator_score_rect(const Generator& g, const Vector& z) {
  if (g.in_dim() > g.out_dim()) throw DimensionError("generator_score_rect: generator must not be wide");
  const Matrix j = g.jacobian(z);
  Eigen::JacobiSVD<Matrix> svd(j);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) <= 1e-12 * std::max(1.0, s(0)))
    throw NumericError("generator_score_rect: Jacobian is rank deficient");

  Vector half_grad = Vector::Zero(z.size());
  if (!g.is_linear()) {
    constexpr double h = 1e-5;
    Vector probe = z;
    auto metric_logdet = [&](const Vector& at) {
      const Matrix ja = g.jacobian(at);
      const auto d = num::lu_logabsdet(ja.transpose() * ja);
      if (d.sign == 0) throw SingularMatrixError("generator_score_rect: singular metric on stencil", 0.0);
      return d.log_abs;
    };
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      probe(i) = z(i) + h;
      const double up = metric_logdet(probe);
      probe(i) = z(i) - h;
      const double down = metric_logdet(probe);
      probe(i) = z(i);
      half_grad(i) = 0.5 * (up - down) / (2.0 * h);
    }
  }
  return num::pinv(j).transpose() * (-z - half_grad);
}

Vector generator_score(const Generator& g, const Vector& z) {
  return g.in_dim() == g.out_dim() ? generator_score_square(g, z) : generator_score_rect(g, z);
}

Adam::Adam(Eigen::Index size, Options opts)
    : opts_(opts), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

void Adam::step(Vector& params, const Vector& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw DimensionError("Adam::step: shape mismatch");
  ++t_;
  m_ = opts_.beta1 * m_ + (1.0 - opts_.beta1) * grad;
  v_ = opts_.beta2 * v_ + (1.0 - opts_.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double mhat = m_(i) / c1;
    const double vhat = v_(i) / c2;
    params(i) -= opts_.learning_rate * mhat / (std::sqrt(vhat) + opts_.epsilon);
  }
}

}  // namespace kflow
