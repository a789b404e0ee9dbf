#pragma once

// Positive definite kernels on joint context-action pairs.
//
// A state s = (x, a) is stored as the concatenation [x; a] together with the
// context dimension. Gaussian and linear kernels act on the concatenated
// vector; the tensor-product family multiplies a context kernel by an action
// kernel. Batch routines take column-packed point matrices (one state per
// column) so the policies can evaluate whole action grids at once.

#include "banditlab/linalg.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace banditlab {

template <typename Scalar = double>
class StatePoint {
 public:
  StatePoint() = default;

  template <typename DerivedX, typename DerivedA>
  StatePoint(const Eigen::MatrixBase<DerivedX>& context, const Eigen::MatrixBase<DerivedA>& action)
      : joint_(context.size() + action.size()), context_dim_(context.size()) {
    joint_.head(context.size()) = context;
    joint_.tail(action.size()) = action;
    if (!joint_.allFinite()) throw std::invalid_argument("StatePoint: non-finite coordinate");
  }

  StatePoint(Vector<Scalar> joint, Index context_dim)
      : joint_(std::move(joint)), context_dim_(context_dim) {
    if (context_dim_ < 0 || context_dim_ > joint_.size()) {
      throw std::invalid_argument("StatePoint: context dimension out of range");
    }
    if (!joint_.allFinite()) throw std::invalid_argument("StatePoint: non-finite coordinate");
  }

  [[nodiscard]] const Vector<Scalar>& joint() const { return joint_; }
  [[nodiscard]] Index context_dim() const { return context_dim_; }
  [[nodiscard]] Index action_dim() const { return joint_.size() - context_dim_; }
  [[nodiscard]] auto context() const { return joint_.head(context_dim_); }
  [[nodiscard]] auto action() const { return joint_.tail(action_dim()); }

  friend bool operator==(const StatePoint& a, const StatePoint& b) {
    return a.context_dim_ == b.context_dim_ && a.joint_ == b.joint_;
  }

 private:
  Vector<Scalar> joint_;
  Index context_dim_ = 0;
};

enum class KernelFamily { gaussian, linear, tensor_product };
enum class BaseKernelFamily { gaussian, linear };

template <typename Scalar = double>
struct BaseKernel {
  BaseKernelFamily family = BaseKernelFamily::gaussian;
  Scalar bandwidth = Scalar(0.2);
};

template <typename Scalar = double>
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  Scalar bandwidth = Scalar(0.2);
  // Upper bound on sqrt(k(s, s)); exactly 1 for the gaussian family.
  Scalar kappa = Scalar(1);
  BaseKernel<Scalar> context_kernel{};
  BaseKernel<Scalar> action_kernel{};

  static KernelSpec gaussian(Scalar bandwidth) {
    KernelSpec spec;
    spec.family = KernelFamily::gaussian;
    spec.bandwidth = bandwidth;
    spec.kappa = Scalar(1);
    return spec;
  }

  static KernelSpec linear(Scalar kappa) {
    KernelSpec spec;
    spec.family = KernelFamily::linear;
    spec.kappa = kappa;
    return spec;
  }

  static KernelSpec tensor(BaseKernel<Scalar> context, BaseKernel<Scalar> action, Scalar kappa) {
    KernelSpec spec;
    spec.family = KernelFamily::tensor_product;
    spec.context_kernel = context;
    spec.action_kernel = action;
    spec.kappa = kappa;
    return spec;
  }

  void validate() const {
    if (!(kappa > 0)) throw std::invalid_argument("KernelSpec: kappa must be positive");
    if (family == KernelFamily::gaussian) {
      if (!(bandwidth > 0)) throw std::invalid_argument("KernelSpec: bandwidth must be positive");
      if (kappa != Scalar(1)) throw std::invalid_argument("KernelSpec: gaussian kappa must be 1");
    }
    if (family == KernelFamily::tensor_product) {
      for (const auto& base : {context_kernel, action_kernel}) {
        if (base.family == BaseKernelFamily::gaussian && !(base.bandwidth > 0)) {
          throw std::invalid_argument("KernelSpec: bandwidth must be positive");
        }
      }
    }
  }
};

namespace detail {

template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar base_eval(BaseKernelFamily family, Scalar bandwidth, const Eigen::MatrixBase<DerivedA>& u,
                 const Eigen::MatrixBase<DerivedB>& v) {
  if (family == BaseKernelFamily::linear) return u.dot(v);
  return std::exp(-(u - v).squaredNorm() / (Scalar(2) * bandwidth * bandwidth));
}

// Row vector of base-kernel values between the columns of `points` and `q`.
template <typename Scalar, typename DerivedP, typename DerivedQ>
Eigen::Array<Scalar, 1, Eigen::Dynamic> base_column(BaseKernelFamily family, Scalar bandwidth,
                                                    const Eigen::MatrixBase<DerivedP>& points,
                                                    const Eigen::MatrixBase<DerivedQ>& q) {
  if (family == BaseKernelFamily::linear) return (q.transpose() * points).array();
  const Scalar scale = Scalar(-1) / (Scalar(2) * bandwidth * bandwidth);
  return ((points.colwise() - q).colwise().squaredNorm().array() * scale).exp();
}

}  // namespace detail

/// k(s, s2). Throws std::invalid_argument on dimension mismatch.
template <typename Scalar>
Scalar eval(const KernelSpec<Scalar>& spec, const StatePoint<Scalar>& s,
            const StatePoint<Scalar>& s2) {
  if (s.joint().size() != s2.joint().size() || s.context_dim() != s2.context_dim()) {
    throw std::invalid_argument("kernel eval: state dimensions differ");
  }
  switch (spec.family) {
    case KernelFamily::gaussian:
      return detail::base_eval(BaseKernelFamily::gaussian, spec.bandwidth, s.joint(), s2.joint());
    case KernelFamily::linear:
      return s.joint().dot(s2.joint());
    case KernelFamily::tensor_product:
      return detail::base_eval(spec.context_kernel.family, spec.context_kernel.bandwidth,
                               s.context(), s2.context()) *
             detail::base_eval(spec.action_kernel.family, spec.action_kernel.bandwidth, s.action(),
                               s2.action());
  }
  throw std::logic_error("kernel eval: unknown family");
}

/// Kernel matrix between two column-packed point sets (one state per column,
/// the first `context_dim` rows holding the context).
template <typename Scalar, typename DerivedA, typename DerivedB>
Matrix<Scalar> gram(const KernelSpec<Scalar>& spec, const Eigen::MatrixBase<DerivedA>& rows,
                    const Eigen::MatrixBase<DerivedB>& cols, Index context_dim) {
  if (rows.rows() != cols.rows() && rows.cols() > 0 && cols.cols() > 0) {
    throw std::invalid_argument("gram: point dimensions differ");
  }
  Matrix<Scalar> out(rows.cols(), cols.cols());
  const Index d = rows.rows();
  for (Index j = 0; j < cols.cols(); ++j) {
    switch (spec.family) {
      case KernelFamily::gaussian:
        out.col(j) = detail::base_column(BaseKernelFamily::gaussian, spec.bandwidth, rows,
                                         cols.col(j))
                         .transpose();
        break;
      case KernelFamily::linear:
        out.col(j).noalias() = rows.transpose() * cols.col(j);
        break;
      case KernelFamily::tensor_product:
        out.col(j) = (detail::base_column(spec.context_kernel.family, spec.context_kernel.bandwidth,
                                          rows.topRows(context_dim),
                                          cols.col(j).head(context_dim)) *
                      detail::base_column(spec.action_kernel.family, spec.action_kernel.bandwidth,
                                          rows.bottomRows(d - context_dim),
                                          cols.col(j).tail(d - context_dim)))
                         .transpose();
        break;
    }
  }
  return out;
}

/// k(s, s) for every column of a packed point set.
template <typename Scalar, typename Derived>
Vector<Scalar> self_kernel(const KernelSpec<Scalar>& spec, const Eigen::MatrixBase<Derived>& points,
                           Index context_dim) {
  const Index d = points.rows();
  switch (spec.family) {
    case KernelFamily::gaussian:
      return Vector<Scalar>::Ones(points.cols());
    case KernelFamily::linear:
      return points.colwise().squaredNorm().transpose();
    case KernelFamily::tensor_product: {
      auto side = [](const BaseKernel<Scalar>& base, const auto& block) -> Vector<Scalar> {
        if (base.family == BaseKernelFamily::gaussian) return Vector<Scalar>::Ones(block.cols());
        return block.colwise().squaredNorm().transpose();
      };
      return side(spec.context_kernel, points.topRows(context_dim))
          .cwiseProduct(side(spec.action_kernel, points.bottomRows(d - context_dim)));
    }
  }
  throw std::logic_error("self_kernel: unknown family");
}

/// Growable column-packed storage for a sequence of states.
template <typename Scalar = double>
class StateBuffer {
 public:
  StateBuffer() = default;
  explicit StateBuffer(Index context_dim, Index joint_dim = 0)
      : context_dim_(context_dim), data_(joint_dim, 0) {}

  void push_back(const StatePoint<Scalar>& s) {
    if (size_ == 0 && data_.cols() == 0) {
      data_.resize(s.joint().size(), 16);
      context_dim_ = s.context_dim();
    }
    if (s.joint().size() != data_.rows() || s.context_dim() != context_dim_) {
      throw std::invalid_argument("StateBuffer: state dimension mismatch");
    }
    if (size_ == data_.cols()) data_.conservativeResize(Eigen::NoChange, 2 * data_.cols() + 1);
    data_.col(size_++) = s.joint();
  }

  [[nodiscard]] Index size() const { return size_; }
  [[nodiscard]] bool empty() const { return size_ == 0; }
  [[nodiscard]] Index context_dim() const { return context_dim_; }
  [[nodiscard]] Index joint_dim() const { return data_.rows(); }
  [[nodiscard]] auto matrix() const { return data_.leftCols(size_); }
  [[nodiscard]] StatePoint<Scalar> point(Index i) const {
    return StatePoint<Scalar>(Vector<Scalar>(data_.col(i)), context_dim_);
  }

 private:
  Index context_dim_ = 0;
  Matrix<Scalar> data_;
  Index size_ = 0;
};

template <typename Scalar>
Matrix<Scalar> pack(std::span<const StatePoint<Scalar>> points) {
  if (points.empty()) return Matrix<Scalar>(0, 0);
  Matrix<Scalar> out(points.front().joint().size(), Index(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].joint().size() != out.rows() ||
        points[i].context_dim() != points.front().context_dim()) {
      throw std::invalid_argument("gram: point dimensions differ");
    }
    out.col(Index(i)) = points[i].joint();
  }
  return out;
}

/// Kernel matrix over lists of states: entry (i, j) = k(rows[i], cols[j]).
template <typename Scalar>
Matrix<Scalar> gram(const KernelSpec<Scalar>& spec, std::span<const StatePoint<Scalar>> rows,
                    std::span<const StatePoint<Scalar>> cols) {
  if (rows.empty() || cols.empty()) return Matrix<Scalar>(Index(rows.size()), Index(cols.size()));
  if (rows.front().context_dim() != cols.front().context_dim()) {
    throw std::invalid_argument("gram: point dimensions differ");
  }
  return gram(spec, pack(rows), pack(cols), rows.front().context_dim());
}

template <typename Scalar>
Matrix<Scalar> gram(const KernelSpec<Scalar>& spec, const std::vector<StatePoint<Scalar>>& rows,
                    const std::vector<StatePoint<Scalar>>& cols) {
  return gram(spec, std::span<const StatePoint<Scalar>>(rows),
              std::span<const StatePoint<Scalar>>(cols));
}

/// K_S(s): kernel column between every stored state and `s`.
template <typename Scalar>
Vector<Scalar> kernel_column(const KernelSpec<Scalar>& spec, const StateBuffer<Scalar>& states,
                             const StatePoint<Scalar>& s) {
  if (states.empty()) return Vector<Scalar>(0);
  if (states.joint_dim() != s.joint().size() || states.context_dim() != s.context_dim()) {
    throw std::invalid_argument("kernel_column: state dimensions differ");
  }
  return gram(spec, states.matrix(), s.joint(), s.context_dim());
}

/// Candidate states (x, a) for every column `a` of `actions`, packed by column.
template <typename Scalar, typename DerivedX, typename DerivedA>
Matrix<Scalar> candidate_states(const Eigen::MatrixBase<DerivedX>& context,
                                const Eigen::MatrixBase<DerivedA>& actions) {
  Matrix<Scalar> out(context.size() + actions.rows(), actions.cols());
  out.topRows(context.size()) = context.replicate(1, actions.cols());
  out.bottomRows(actions.rows()) = actions;
  return out;
}

}  // namespace banditlab
