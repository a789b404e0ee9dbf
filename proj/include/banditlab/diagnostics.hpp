#pragma once

// Offline complexity measures of a Gram matrix K_t, all computed from its
// spectrum:
//   d_eff(lambda)  = sum_i l_i / (l_i + lambda)
//   info_gain      = 1/2 sum_i log(1 + l_i / lambda)
//   valko_d        = min{ j : j lambda log T >= sum_{k>j} l_k }
// plus the log-det bound sum_k log(1 + l_k/lambda) <= log(e + e t kappa^2/lambda) d_eff.

#include "banditlab/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace banditlab {

/// Eigenvalues of a symmetric matrix in decreasing order, negative round-off
/// clamped to zero. Throws std::invalid_argument on non-square or
/// non-symmetric input.
template <typename Derived>
Vector<typename Derived::Scalar> gram_spectrum(const Eigen::MatrixBase<Derived>& k) {
  using Scalar = typename Derived::Scalar;
  if (k.rows() != k.cols()) throw std::invalid_argument("gram_spectrum: matrix is not square");
  if (k.size() == 0) return Vector<Scalar>(0);
  const Scalar scale = Scalar(1) + k.cwiseAbs().maxCoeff();
  if ((k - k.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * scale) {
    throw std::invalid_argument("gram_spectrum: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(k.eval(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw FactorizationError("gram_spectrum: eigensolver failed");
  Vector<Scalar> values = solver.eigenvalues().reverse().cwiseMax(Scalar(0));
  return values;
}

template <typename Scalar>
Scalar effective_dimension_from_spectrum(const Vector<Scalar>& spectrum, Scalar lambda) {
  return (spectrum.array() / (spectrum.array() + lambda)).sum();
}

template <typename Scalar>
Scalar information_gain_from_spectrum(const Vector<Scalar>& spectrum, Scalar lambda) {
  return Scalar(0.5) * (spectrum.array() / lambda).log1p().sum();
}

template <typename Scalar>
Index valko_dimension_from_spectrum(const Vector<Scalar>& spectrum, Scalar lambda, Index horizon) {
  const Scalar step = lambda * std::log(Scalar(horizon));
  Scalar tail = spectrum.sum();
  for (Index j = 0; j < spectrum.size(); ++j) {
    if (Scalar(j) * step >= tail) return j;
    tail -= spectrum(j);
  }
  return spectrum.size();
}

template <typename Derived>
typename Derived::Scalar effective_dimension(const Eigen::MatrixBase<Derived>& k,
                                             typename Derived::Scalar lambda) {
  if (!(lambda > 0)) throw std::invalid_argument("effective_dimension: lambda must be positive");
  return effective_dimension_from_spectrum(gram_spectrum(k), lambda);
}

template <typename Derived>
typename Derived::Scalar information_gain(const Eigen::MatrixBase<Derived>& k,
                                          typename Derived::Scalar lambda) {
  if (!(lambda > 0)) throw std::invalid_argument("information_gain: lambda must be positive");
  return information_gain_from_spectrum(gram_spectrum(k), lambda);
}

template <typename Derived>
Index valko_dimension(const Eigen::MatrixBase<Derived>& k, typename Derived::Scalar lambda,
                      Index horizon) {
  if (!(lambda > 0)) throw std::invalid_argument("valko_dimension: lambda must be positive");
  if (horizon < 2) throw std::invalid_argument("valko_dimension: horizon must be >= 2");
  return valko_dimension_from_spectrum(gram_spectrum(k), lambda, horizon);
}

template <typename Scalar>
struct BoundSides {
  Scalar lhs = 0;
  Scalar rhs = 0;
};

template <typename Scalar>
BoundSides<Scalar> prop1_from_spectrum(const Vector<Scalar>& spectrum, Scalar lambda, Scalar kappa,
                                       Index t) {
  constexpr Scalar e = std::numbers::e_v<Scalar>;
  BoundSides<Scalar> out;
  out.lhs = (spectrum.array() / lambda).log1p().sum();
  out.rhs = std::log(e + e * Scalar(t) * kappa * kappa / lambda) *
            effective_dimension_from_spectrum(spectrum, lambda);
  return out;
}

/// Both sides of sum_k log(1 + l_k/lambda) <= log(e + e t kappa^2/lambda) d_eff.
template <typename Derived>
BoundSides<typename Derived::Scalar> prop1_bound_check(const Eigen::MatrixBase<Derived>& k,
                                                       typename Derived::Scalar lambda,
                                                       typename Derived::Scalar kappa, Index t) {
  if (!(lambda > 0)) throw std::invalid_argument("prop1_bound_check: lambda must be positive");
  return prop1_from_spectrum(gram_spectrum(k), lambda, kappa, t);
}

/// Both sides of 2 info_gain <= valko_d (log T + log(1 + t kappa^2/lambda)).
/// Head eigenvalues are at most Tr K <= t kappa^2, the tail after valko_d sums
/// to at most valko_d lambda log T.
template <typename Scalar>
BoundSides<Scalar> valko_chain_from_spectrum(const Vector<Scalar>& spectrum, Scalar lambda,
                                             Scalar kappa, Index t, Index horizon) {
  BoundSides<Scalar> out;
  out.lhs = Scalar(2) * information_gain_from_spectrum(spectrum, lambda);
  const Index d = valko_dimension_from_spectrum(spectrum, lambda, horizon);
  out.rhs = Scalar(d) * (std::log(Scalar(horizon)) +
                         std::log1p(Scalar(t) * kappa * kappa / lambda));
  return out;
}

template <typename Scalar = double>
struct ComplexityReport {
  Index t = 0;
  Scalar lambda = 0;
  Scalar d_eff = 0;
  Scalar info_gain = 0;
  Index valko_d = 0;
  // log det(I + K/lambda)
  Scalar log_det_term = 0;
  Scalar prop1_lhs = 0;
  Scalar prop1_rhs = 0;
  Scalar chain_lhs = 0;
  Scalar chain_rhs = 0;
};

/// Every measure above from one eigendecomposition. `horizon` defaults to t.
template <typename Derived>
ComplexityReport<typename Derived::Scalar> complexity_report(const Eigen::MatrixBase<Derived>& k,
                                                             typename Derived::Scalar lambda,
                                                             typename Derived::Scalar kappa,
                                                             Index horizon = 0) {
  using Scalar = typename Derived::Scalar;
  if (!(lambda > 0)) throw std::invalid_argument("complexity_report: lambda must be positive");
  const Vector<Scalar> spectrum = gram_spectrum(k);
  ComplexityReport<Scalar> r;
  r.t = k.rows();
  r.lambda = lambda;
  const Index big_t = std::max<Index>(horizon > 0 ? horizon : r.t, 2);
  r.d_eff = effective_dimension_from_spectrum(spectrum, lambda);
  r.info_gain = information_gain_from_spectrum(spectrum, lambda);
  r.valko_d = valko_dimension_from_spectrum(spectrum, lambda, big_t);
  r.log_det_term = Scalar(2) * r.info_gain;
  const auto p1 = prop1_from_spectrum(spectrum, lambda, kappa, r.t);
  r.prop1_lhs = p1.lhs;
  r.prop1_rhs = p1.rhs;
  const auto chain = valko_chain_from_spectrum(spectrum, lambda, kappa, r.t, big_t);
  r.chain_lhs = chain.lhs;
  r.chain_rhs = chain.rhs;
  return r;
}

}  // namespace banditlab
