#include "kflow/numkit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>

namespace kflow {
namespace num {
namespace {

std::atomic<std::uint64_t> g_ill_conditioned{0};

constexpr double kLogDetFloor = -690.7755278982137;  // ln(1e-300)
constexpr double kConditionWarn = 1e12;

void require_square(const Matrix& m, const char* op) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << op << ": expected a square matrix, got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
}

Eigen::PartialPivLU<Matrix> checked_lu(const Matrix& m, const char* op) {
  require_square(m, op);
  Eigen::PartialPivLU<Matrix> lu(m);
  const auto& packed = lu.matrixLU();
  double log_abs = 0.0;
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    const double pivot = std::abs(packed(i, i));
    if (pivot == 0.0 || !std::isfinite(pivot)) {
      throw SingularMatrixError(std::string(op) + ": matrix is singular (zero pivot)",
                                std::numeric_limits<double>::infinity());
    }
    log_abs += std::log(pivot);
  }
  const double rcond = lu.rcond();
  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (log_abs < kLogDetFloor) {
    std::ostringstream os;
    os << op << ": matrix is numerically singular (ln|det| = " << log_abs
       << ", condition estimate " << cond << ")";
    throw SingularMatrixError(os.str(), cond);
  }
  if (cond > kConditionWarn) g_ill_conditioned.fetch_add(1, std::memory_order_relaxed);
  return lu;
}

}  // namespace

LogAbsDet lu_logabsdet(const Matrix& m) {
  require_square(m, "lu_logabsdet");
  if (m.rows() == 0) return {0.0, 1};
  Eigen::PartialPivLU<Matrix> lu(m);
  const auto& packed = lu.matrixLU();
  LogAbsDet out;
  // determinant() folds in the permutation sign; we only need its sign.
  int sign = lu.permutationP().determinant();
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    const double pivot = packed(i, i);
    if (pivot == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
    if (pivot < 0.0) sign = -sign;
    out.log_abs += std::log(std::abs(pivot));
  }
  out.sign = sign;
  return out;
}

Vector solve(const Matrix& m, const Vector& rhs) {
  if (rhs.size() != m.rows()) throw DimensionError("solve: right-hand side length mismatch");
  return checked_lu(m, "solve").solve(rhs);
}

Matrix solve(const Matrix& m, const Matrix& rhs) {
  if (rhs.rows() != m.rows()) throw DimensionError("solve: right-hand side row mismatch");
  return checked_lu(m, "solve").solve(rhs);
}

std::uint64_t ill_conditioned_solves() noexcept {
  return g_ill_conditioned.load(std::memory_order_relaxed);
}

SymmetricEigen eig_sym(const Matrix& m) {
  require_square(m, "eig_sym");
  const Eigen::Index n = m.rows();
  const double norm = m.norm();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, norm)) {
    throw NumericError("eig_sym: matrix is not symmetric");
  }

  Matrix a = 0.5 * (m + m.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double tol = 1e-12 * norm;

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && off_norm() > tol; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle zeroing a(p,q); t = tan(theta) chosen with |theta| <= pi/4.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

Matrix sqrt_spd(const Matrix& m) {
  const SymmetricEigen eig = eig_sym(m);
  Vector roots(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    const double lambda = eig.values(i);
    if (lambda < -1e-6) {
      std::ostringstream os;
      os << "sqrt_spd: matrix is not positive semidefinite (eigenvalue " << lambda << ")";
      throw NumericError(os.str());
    }
    roots(i) = std::sqrt(std::max(lambda, 0.0));
  }
  Matrix r = eig.vectors * roots.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (r + r.transpose());
}

Matrix pinv(const Matrix& m) {
  if (m.size() == 0) return Matrix(m.cols(), m.rows());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double tol = std::numeric_limits<double>::epsilon() *
                     static_cast<double>(std::max(m.rows(), m.cols())) * (s.size() ? s(0) : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace num

double Prng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Prng::uniform_index(std::size_t n) {
  if (n == 0) throw DimensionError("uniform_index: empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  // Largest multiple of bound that fits; draws at or above it are rejected.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double Prng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Vector sample_std_normal(Prng& rng, std::size_t n) {
  Vector out(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = rng.normal();
  return out;
}

PointMatrix sample_std_normal(Prng& rng, std::size_t rows, std::size_t cols) {
  PointMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = rng.normal();
  return out;
}

}  // namespace kflow
