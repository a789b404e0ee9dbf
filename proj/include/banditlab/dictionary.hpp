#pragma once

// Incremental Nystrom dictionary built by Kernel Online Row Sampling (KORS).
//
// Each arriving state gets an estimated ridge leverage score computed against
// the current anchors plus the state itself at weight 1. The state is kept
// with probability min(gamma * score, 1). Anchors are never removed.
//
// Two inverses are maintained by Schur bordering:
//   kzz_inverse  K_ZZ^{-1}, consumed by the EK-UCB posterior;
//   rls_inverse  (S K_ZZ S + mu I)^{-1} with S = diag(1/sqrt(p_i)), which makes
//                every leverage score an O(m^2) computation.

#include "banditlab/kernels.hpp"
#include "banditlab/linalg.hpp"
#include "banditlab/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace banditlab {

enum class InclusionOverride { none, always, never };

template <typename Scalar = double>
struct KorsParams {
  Scalar mu = Scalar(1);
  Scalar epsilon = Scalar(0.5);
  Scalar gamma = Scalar(1);
  Scalar delta = Scalar(0.01);
  // A state whose Nystrom residual k(s,s) - K_Z(s)^T K_ZZ^{-1} K_Z(s) is at
  // most residual_floor * k(s,s) counts as a near duplicate and is not added.
  // This bounds the conditioning of K_ZZ and of Lambda.
  Scalar residual_floor = Scalar(1e-4);
  // Test and diagnostic hook: force every coin flip to succeed or fail.
  InclusionOverride inclusion = InclusionOverride::none;

  /// delta = 1/T^2 and gamma = 12 log(T / delta).
  static KorsParams with_default_budget(Scalar mu, Index horizon) {
    KorsParams params;
    params.mu = mu;
    const Scalar t = Scalar(std::max<Index>(horizon, 2));
    params.delta = Scalar(1) / (t * t);
    params.gamma = Scalar(12) * std::log(t / params.delta);
    return params;
  }

  void validate() const {
    if (!(mu > 0)) throw std::invalid_argument("KorsParams: mu must be positive");
    if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("KorsParams: epsilon in (0,1)");
    if (!(gamma > 0)) throw std::invalid_argument("KorsParams: gamma must be positive");
    if (!(delta > 0 && delta < 1)) throw std::invalid_argument("KorsParams: delta in (0,1)");
    if (!(residual_floor >= 0 && residual_floor < 1)) {
      throw std::invalid_argument("KorsParams: residual_floor in [0,1)");
    }
  }
};

template <typename Scalar = double>
class Dictionary {
 public:
  explicit Dictionary(std::uint64_t seed = 0) : rng_(make_stream(seed, StreamTag::kors)) {}

  [[nodiscard]] Index size() const { return anchors_.size(); }
  [[nodiscard]] bool empty() const { return anchors_.empty(); }
  [[nodiscard]] const StateBuffer<Scalar>& anchors() const { return anchors_; }
  [[nodiscard]] const std::vector<Scalar>& probs() const { return probs_; }
  [[nodiscard]] const std::vector<Index>& inclusion_times() const { return times_; }
  [[nodiscard]] const SpdInverse<Scalar>& kzz_inverse() const { return kzz_inverse_; }
  [[nodiscard]] std::size_t rejected_duplicates() const { return rejected_; }
  Rng& rng() { return rng_; }

  /// Appends `s`, sampled with probability `prob` at time `time`. `kz` is
  /// K_Z(s) against the current anchors and `kss` is k(s, s). Returns false,
  /// leaving the dictionary untouched, when the K_ZZ bordering is singular
  /// (an exact or near duplicate of an existing anchor): its Schur complement
  /// is at most max(1e-12, residual_floor * kss).
  template <typename DerivedK>
  bool append(const StatePoint<Scalar>& s, Scalar prob, Index time,
              const Eigen::MatrixBase<DerivedK>& kz, Scalar kss, Scalar mu,
              Scalar residual_floor = Scalar(0)) {
    if (!(prob > 0 && prob <= 1)) throw std::invalid_argument("Dictionary: prob must be in (0,1]");
    if (kz.size() != size()) throw std::invalid_argument("Dictionary: kz size mismatch");
    sync_rls(mu);
    SpdInverse<Scalar> next_kzz = kzz_inverse_;
    try {
      next_kzz.extend(kz, kss, std::max(Scalar(kSingularTolerance), residual_floor * kss));
    } catch (const NearSingularExtensionError&) {
      ++rejected_;
      return false;
    }
    const Vector<Scalar> scaled = kz.cwiseQuotient(scale_vector()) / std::sqrt(prob);
    rls_inverse_.extend_with_jitter(scaled, kss / prob + mu, Scalar(1e-10));
    kzz_inverse_ = std::move(next_kzz);
    anchors_.push_back(s);
    probs_.push_back(prob);
    times_.push_back(time);
    return true;
  }

  /// g = b^T (S K_ZZ S + mu I)^{-1} b with b = S kz.
  template <typename DerivedK>
  Scalar regularized_projection(const Eigen::MatrixBase<DerivedK>& kz, Scalar mu) {
    if (empty()) return Scalar(0);
    sync_rls(mu);
    const Vector<Scalar> b = kz.cwiseQuotient(scale_vector());
    return b.dot(rls_inverse_.inverse() * b);
  }

  /// Replace the maintained K_ZZ^{-1} with a dense re-factorization.
  void refactor(const KernelSpec<Scalar>& spec, Scalar jitter) {
    if (empty()) return;
    const Matrix<Scalar> kzz =
        gram(spec, anchors_.matrix(), anchors_.matrix(), anchors_.context_dim());
    kzz_inverse_ = dense_spd_inverse(kzz, jitter);
  }

  /// Build a dictionary from scratch over the given anchors (dense inverses).
  static Dictionary from_anchors(const KernelSpec<Scalar>& spec, const StateBuffer<Scalar>& anchors,
                                 std::vector<Scalar> probs, std::vector<Index> times, Rng rng,
                                 Scalar jitter) {
    Dictionary dict;
    dict.rng_ = std::move(rng);
    dict.anchors_ = anchors;
    dict.probs_ = std::move(probs);
    dict.times_ = std::move(times);
    if (!anchors.empty()) {
      const Matrix<Scalar> kzz =
          gram(spec, anchors.matrix(), anchors.matrix(), anchors.context_dim());
      dict.kzz_inverse_ = dense_spd_inverse(kzz, jitter);
    }
    return dict;
  }

 private:
  Vector<Scalar> scale_vector() const {
    return Eigen::Map<const Vector<Scalar>>(probs_.data(), Index(probs_.size())).cwiseSqrt();
  }

  // Rebuild (S K_ZZ S + mu I)^{-1} densely when mu changes or after from_anchors.
  void sync_rls(Scalar mu) {
    if (rls_mu_ && *rls_mu_ == mu && rls_inverse_.dim() == size()) return;
    if (empty()) {
      rls_inverse_ = SpdInverse<Scalar>(Matrix<Scalar>(0, 0));
    } else {
      const Matrix<Scalar> kzz = kzz_inverse_.inverse().ldlt().solve(
          Matrix<Scalar>::Identity(size(), size()));
      const Vector<Scalar> inv_scale = scale_vector().cwiseInverse();
      Matrix<Scalar> m = inv_scale.asDiagonal() * kzz * inv_scale.asDiagonal();
      m.diagonal().array() += mu;
      rls_inverse_ = dense_spd_inverse(m, Scalar(1e-10));
    }
    rls_mu_ = mu;
  }

  Rng rng_;
  StateBuffer<Scalar> anchors_;
  std::vector<Scalar> probs_;
  std::vector<Index> times_;
  SpdInverse<Scalar> kzz_inverse_{Matrix<Scalar>(0, 0)};
  SpdInverse<Scalar> rls_inverse_{Matrix<Scalar>(0, 0)};
  std::optional<Scalar> rls_mu_;
  std::size_t rejected_ = 0;
};

/// Ridge leverage score estimate from a precomputed K_Z(s) and k(s, s).
///
/// With the state appended at weight 1 the augmented solve collapses, through
/// the Schur complement of the new block, to
///   tau = (1 + eps) * r / (r + mu),  r = k(s,s) - b^T (S K_ZZ S + mu I)^{-1} b,
/// which equals (1+eps)/mu * (k(s,s) - q^T (S* K S* + mu I)^{-1} q) exactly.
template <typename Scalar, typename DerivedK>
Scalar leverage_score_from(Dictionary<Scalar>& dict, const Eigen::MatrixBase<DerivedK>& kz,
                           Scalar kss, const KorsParams<Scalar>& params) {
  const Scalar residual = std::max(kss - dict.regularized_projection(kz, params.mu), Scalar(0));
  return (Scalar(1) + params.epsilon) * residual / (residual + params.mu);
}

template <typename Scalar>
Scalar leverage_score(Dictionary<Scalar>& dict, const StatePoint<Scalar>& s,
                      const KorsParams<Scalar>& params, const KernelSpec<Scalar>& spec) {
  const Vector<Scalar> kz = kernel_column(spec, dict.anchors(), s);
  return leverage_score_from(dict, kz, eval(spec, s, s), params);
}

template <typename Scalar>
struct KorsDecision {
  bool added = false;
  Scalar score = 0;
  Scalar prob = 0;
};

/// One KORS step with K_Z(s) and k(s, s) already available. A coin is drawn
/// from the dictionary stream on every call so the stream position only
/// depends on the number of steps taken.
template <typename Scalar, typename DerivedK>
KorsDecision<Scalar> kors_step_from(Dictionary<Scalar>& dict, Index t, const StatePoint<Scalar>& s,
                                    const Eigen::MatrixBase<DerivedK>& kz, Scalar kss,
                                    const KorsParams<Scalar>& params) {
  if (t < 1) throw std::invalid_argument("kors_step: t must be >= 1");
  KorsDecision<Scalar> out;
  out.score = leverage_score_from(dict, kz, kss, params);
  switch (params.inclusion) {
    case InclusionOverride::none:
      out.prob = std::min(params.gamma * out.score, Scalar(1));
      break;
    case InclusionOverride::always:
      out.prob = Scalar(1);
      break;
    case InclusionOverride::never:
      out.prob = Scalar(0);
      break;
  }
  const double coin = uniform01(dict.rng());
  if (coin < double(out.prob)) {
    const Scalar floor =
        params.inclusion == InclusionOverride::none ? params.residual_floor : Scalar(0);
    out.added = dict.append(s, out.prob, t, kz, kss, params.mu, floor);
  }
  return out;
}

template <typename Scalar>
KorsDecision<Scalar> kors_step(Dictionary<Scalar>& dict, Index t, const StatePoint<Scalar>& s,
                               const KorsParams<Scalar>& params, const KernelSpec<Scalar>& spec) {
  const Vector<Scalar> kz = kernel_column(spec, dict.anchors(), s);
  return kors_step_from(dict, t, s, kz, eval(spec, s, s), params);
}

/// Largest eigenvalue of K_SS - K_SZ K_ZZ^{-1} K_ZS, i.e. ||(I - P) F^{1/2}||^2.
/// Offline diagnostic: O(t^2 m + t^3).
template <typename Scalar>
Scalar projection_error(const Dictionary<Scalar>& dict, const StateBuffer<Scalar>& history,
                        const KernelSpec<Scalar>& spec) {
  if (history.empty()) return Scalar(0);
  const Index cd = history.context_dim();
  Matrix<Scalar> residual = gram(spec, history.matrix(), history.matrix(), cd);
  if (!dict.empty()) {
    const Matrix<Scalar> ksz = gram(spec, history.matrix(), dict.anchors().matrix(), cd);
    residual.noalias() -= ksz * dict.kzz_inverse().inverse() * ksz.transpose();
  }
  residual = Scalar(0.5) * (residual + residual.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(residual, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

/// 9 d_eff log(2T/delta)^2, the high-probability bound on the final size.
template <typename Scalar>
Scalar kors_size_bound(Scalar d_eff, Index horizon, Scalar delta) {
  const Scalar l = std::log(Scalar(2) * Scalar(horizon) / delta);
  return Scalar(9) * d_eff * l * l;
}

}  // namespace banditlab
