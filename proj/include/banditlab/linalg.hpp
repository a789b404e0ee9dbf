#pragma once

// Incremental maintenance of symmetric positive definite inverses.
//
// SpdInverse holds M^{-1} for an SPD matrix M that is only ever touched
// through rank-one updates (Sherman-Morrison) or bordering by one row and
// column (Schur complement). Both run in O(dim^2). dense_spd_inverse is the
// factorization-based ground truth used by tests and by the optional
// periodic re-factorization.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace banditlab {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

/// Raised when 1 + v^T M^{-1} u vanishes in a Sherman-Morrison update.
class SingularUpdateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the Schur complement of a bordering step is not positive.
class NearSingularExtensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a dense Cholesky factorization fails, even after jitter.
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kSingularTolerance = 1e-12;

template <typename Scalar = double>
class SpdInverse {
 public:
  using MatrixType = Matrix<Scalar>;
  using VectorType = Vector<Scalar>;

  SpdInverse() = default;
  explicit SpdInverse(MatrixType inverse) : inverse_(std::move(inverse)) {
    if (inverse_.rows() != inverse_.cols()) {
      throw std::invalid_argument("SpdInverse: matrix must be square");
    }
  }

  [[nodiscard]] Index dim() const { return inverse_.rows(); }
  [[nodiscard]] const MatrixType& inverse() const { return inverse_; }

  /// In-place (M + u v^T)^{-1}. The result is symmetrized when u == v, which
  /// is the only form the bandit code uses.
  template <typename DerivedU, typename DerivedV>
  void rank_one_update(const Eigen::MatrixBase<DerivedU>& u,
                       const Eigen::MatrixBase<DerivedV>& v) {
    if (u.size() != dim() || v.size() != dim()) {
      throw std::invalid_argument("rank_one_update: vector size " + std::to_string(u.size()) +
                                  "/" + std::to_string(v.size()) + " does not match dim " +
                                  std::to_string(dim()));
    }
    const VectorType left = inverse_ * u;
    const VectorType right = inverse_.transpose() * v;
    const Scalar denom = Scalar(1) + v.dot(left);
    if (std::abs(denom) < Scalar(kSingularTolerance)) {
      throw SingularUpdateError("rank_one_update: 1 + v^T M^-1 u is numerically zero");
    }
    inverse_.noalias() -= (left / denom) * right.transpose();
    if (u.derived() == v.derived()) symmetrize();
  }

  /// In-place inverse of [[M, b], [b^T, c]]. Throws when the Schur complement
  /// c - b^T M^{-1} b does not exceed `min_schur`.
  template <typename DerivedB>
  void extend(const Eigen::MatrixBase<DerivedB>& b, Scalar c,
              Scalar min_schur = Scalar(kSingularTolerance)) {
    if (b.size() != dim()) {
      throw std::invalid_argument("extend: border size " + std::to_string(b.size()) +
                                  " does not match dim " + std::to_string(dim()));
    }
    const Index n = dim();
    const VectorType w = inverse_ * b;
    const Scalar schur = c - b.dot(w);
    if (!(schur > min_schur)) {
      throw NearSingularExtensionError("extend: Schur complement " + std::to_string(double(schur)) +
                                       " is not positive");
    }
    inverse_.conservativeResize(n + 1, n + 1);
    inverse_.topLeftCorner(n, n).noalias() += (w / schur) * w.transpose();
    inverse_.col(n).head(n) = -w / schur;
    inverse_.row(n).head(n) = inverse_.col(n).head(n).transpose();
    inverse_(n, n) = Scalar(1) / schur;
  }

  /// extend(), retrying once with `jitter` added to the new diagonal entry.
  template <typename DerivedB>
  void extend_with_jitter(const Eigen::MatrixBase<DerivedB>& b, Scalar c, Scalar jitter) {
    try {
      extend(b, c);
    } catch (const NearSingularExtensionError&) {
      extend(b, c + jitter);
    }
  }

  void symmetrize() {
    const Index n = dim();
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < j; ++i) {
        const Scalar avg = Scalar(0.5) * (inverse_(i, j) + inverse_(j, i));
        inverse_(i, j) = avg;
        inverse_(j, i) = avg;
      }
    }
  }

 private:
  MatrixType inverse_;
};

/// Value-returning form of SpdInverse::rank_one_update.
template <typename Scalar, typename DerivedU, typename DerivedV>
SpdInverse<Scalar> sherman_morrison_update(SpdInverse<Scalar> state,
                                           const Eigen::MatrixBase<DerivedU>& u,
                                           const Eigen::MatrixBase<DerivedV>& v) {
  state.rank_one_update(u, v);
  return state;
}

/// Value-returning form of SpdInverse::extend.
template <typename Scalar, typename DerivedB>
SpdInverse<Scalar> schur_extend(SpdInverse<Scalar> state, const Eigen::MatrixBase<DerivedB>& b,
                                Scalar c) {
  state.extend(b, c);
  return state;
}

/// Cholesky-based inverse of an SPD matrix. On failure `jitter` is added to
/// the diagonal and the factorization retried once.
template <typename Derived>
SpdInverse<typename Derived::Scalar> dense_spd_inverse(const Eigen::MatrixBase<Derived>& m,
                                                       typename Derived::Scalar jitter = 0) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols()) throw std::invalid_argument("dense_spd_inverse: matrix must be square");
  const Index n = m.rows();
  if (n == 0) return SpdInverse<Scalar>(Matrix<Scalar>(0, 0));
  Matrix<Scalar> sym = Scalar(0.5) * (m + m.transpose());
  Eigen::LLT<Matrix<Scalar>> llt(sym);
  if (llt.info() != Eigen::Success && jitter > 0) {
    sym.diagonal().array() += jitter;
    llt.compute(sym);
  }
  if (llt.info() != Eigen::Success) {
    throw FactorizationError("dense_spd_inverse: matrix is not positive definite");
  }
  SpdInverse<Scalar> out(llt.solve(Matrix<Scalar>::Identity(n, n)));
  out.symmetrize();
  return out;
}

/// (1/lambda) det(K_new + lambda I) / det(K_prev + lambda I), where K_new is
/// K_prev bordered by one row and column. Evaluated through the Schur
/// complement of the new diagonal block; its log is the per-step increment
/// of log det(I + K/lambda).
template <typename DerivedP, typename DerivedN>
typename DerivedN::Scalar log_det_ratio(const Eigen::MatrixBase<DerivedP>& k_prev,
                                        const Eigen::MatrixBase<DerivedN>& k_new,
                                        typename DerivedN::Scalar lambda) {
  using Scalar = typename DerivedN::Scalar;
  const Index t = k_new.rows();
  if (k_new.cols() != t || k_prev.rows() != k_prev.cols() || k_prev.rows() + 1 != t) {
    throw std::invalid_argument("log_det_ratio: k_new must border k_prev by one row/column");
  }
  if (!(lambda > 0)) throw std::invalid_argument("log_det_ratio: lambda must be positive");
  const Scalar c = k_new(t - 1, t - 1);
  if (t == 1) return (c + lambda) / lambda;
  const Vector<Scalar> b = k_new.col(t - 1).head(t - 1);
  Matrix<Scalar> regularized = k_prev;
  regularized.diagonal().array() += lambda;
  const Vector<Scalar> x = regularized.ldlt().solve(b);
  return (c + lambda - b.dot(x)) / lambda;
}

}  // namespace banditlab
