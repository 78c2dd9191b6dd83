#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace kflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Row-per-point storage used for particle and sample sets.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised for dimension mismatches and other violated preconditions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a factorization cannot proceed (singular, indefinite, asymmetric input).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericError {
 public:
  SingularMatrixError(const std::string& what, double condition_estimate)
      : NumericError(what), condition_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_; }

 private:
  double condition_;
};

namespace num {

struct LogAbsDet {
  double log_abs = 0.0;
  int sign = 1;  ///< +1, -1, or 0 when singular
};

/// ln|det m| via LU with partial pivoting.
LogAbsDet lu_logabsdet(const Matrix& m);

/// Solves m x = rhs. Throws SingularMatrixError when |det m| underflows 1e-300 or
/// a pivot vanishes. Solves with a condition estimate above 1e12 are counted (see
/// ill_conditioned_solves()) rather than rejected.
Vector solve(const Matrix& m, const Vector& rhs);
Matrix solve(const Matrix& m, const Matrix& rhs);

/// Number of solves so far whose reciprocal-condition estimate exceeded 1e12.
std::uint64_t ill_conditioned_solves() noexcept;

struct SymmetricEigen {
  Vector values;   ///< descending
  Matrix vectors;  ///< column i pairs with values(i)
};

/// Cyclic Jacobi eigendecomposition; stops once the off-diagonal Frobenius norm drops
/// below 1e-12 * ||m||_F.
SymmetricEigen eig_sym(const Matrix& m);

/// Symmetric PSD square root. Eigenvalues in [-1e-6, 0) are clamped to zero.
Matrix sqrt_spd(const Matrix& m);

/// Moore-Penrose pseudoinverse (SVD, default rank tolerance).
Matrix pinv(const Matrix& m);

}  // namespace num

/// Seeded pseudo-random source. The bit stream is std::mt19937_64, which the C++
/// standard pins exactly; uniform and normal variates use the transforms documented
/// on the members so that results do not depend on the standard library vendor.
class Prng {
 public:
  explicit Prng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1): top 53 bits scaled by 2^-53.
  double uniform();

  /// Uniform integer in [0, n) by rejection on the 64-bit stream.
  std::size_t uniform_index(std::size_t n);

  /// Standard normal via Marsaglia's polar method (pairs cached).
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

Vector sample_std_normal(Prng& rng, std::size_t n);

/// Fills a rows x cols matrix with independent standard normal draws, row by row.
PointMatrix sample_std_normal(Prng& rng, std::size_t rows, std::size_t cols);

}  // namespace kflow
