#pragma once

// Kernel UCB agents over joint context-action states.
//
//   K-UCB    exact kernel ridge posterior, (K + lambda I)^{-1} grown by Schur
//            bordering, O(t^2) per step.
//   EK-UCB   posterior restricted to the span of a KORS dictionary Z; only
//            m x m quantities are touched per step:
//              Lambda = (K_ZS K_SZ + lambda K_ZZ)^{-1},  Gamma = K_ZS Y,
//              mean   = K_Z(s)^T Lambda Gamma,
//              var    = k(s,s)/lambda + K_Z(s)^T (Lambda - K_ZZ^{-1}/lambda) K_Z(s).
//   CBBKB    same projected posterior, but the dictionary is frozen between
//            resparsifications that resample it from every past state.
//   random   uniform control.
//
// The state structs and free functions are the algorithmic core; the Policy
// classes at the bottom wrap them with bootstrap and stream handling for the
// experiment runner.

#include "banditlab/dictionary.hpp"
#include "banditlab/kernels.hpp"
#include "banditlab/linalg.hpp"
#include "banditlab/random.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace banditlab {

/// Raised when a projected variance is negative beyond round-off, which
/// means the maintained inverses have drifted.
class NumericalInconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kVarianceDriftThreshold = -1e-6;

enum class ScheduleMode { fixed, theoretical };
enum class RadiusKind { exact, projected };

template <typename Scalar = double>
struct ExplorationSchedule {
  ScheduleMode mode = ScheduleMode::fixed;
  Scalar beta = Scalar(1);
  Scalar norm_bound = Scalar(1);
  Scalar delta = Scalar(0.01);
  Scalar kappa = Scalar(1);

  static ExplorationSchedule fixed(Scalar beta) {
    if (!(beta >= 0)) throw std::invalid_argument("ExplorationSchedule: beta must be >= 0");
    ExplorationSchedule s;
    s.beta = beta;
    return s;
  }

  static ExplorationSchedule theoretical(Scalar norm_bound, Scalar delta, Scalar kappa) {
    if (!(norm_bound > 0) || !(delta > 0 && delta < 1) || !(kappa > 0)) {
      throw std::invalid_argument("ExplorationSchedule: invalid theoretical parameters");
    }
    ExplorationSchedule s;
    s.mode = ScheduleMode::theoretical;
    s.norm_bound = norm_bound;
    s.delta = delta;
    s.kappa = kappa;
    return s;
  }
};

/// Confidence radius after t observations.
///   exact:     sqrt(lambda) B + sqrt(2 log(1/delta) + log(e + e t kappa^2/lambda) d_eff)
///   projected: (sqrt(lambda) + sqrt(mu)) B
///              + sqrt(4 log(1/delta) + 2 log(e + e t kappa^2/lambda) d_eff)
template <typename Scalar>
Scalar theoretical_beta(RadiusKind kind, Scalar t, Scalar lambda, Scalar mu, Scalar norm_bound,
                        Scalar delta, Scalar kappa, Scalar d_eff) {
  constexpr Scalar e = std::numbers::e_v<Scalar>;
  const Scalar log_term = std::log(e + e * t * kappa * kappa / lambda);
  const Scalar log_delta = std::log(Scalar(1) / delta);
  if (kind == RadiusKind::exact) {
    return std::sqrt(lambda) * norm_bound + std::sqrt(Scalar(2) * log_delta + log_term * d_eff);
  }
  return (std::sqrt(lambda) + std::sqrt(mu)) * norm_bound +
         std::sqrt(Scalar(4) * log_delta + Scalar(2) * log_term * d_eff);
}

template <typename Scalar>
Scalar schedule_beta(const ExplorationSchedule<Scalar>& schedule, RadiusKind kind, Scalar t,
                     Scalar lambda, Scalar mu, Scalar d_eff) {
  if (schedule.mode == ScheduleMode::fixed) return schedule.beta;
  return theoretical_beta(kind, t, lambda, mu, schedule.norm_bound, schedule.delta, schedule.kappa,
                          d_eff);
}

template <typename Scalar = double>
struct Score {
  Scalar mean = 0;
  Scalar variance = 0;
};

template <typename Scalar = double>
struct BatchScores {
  Vector<Scalar> mean;
  Vector<Scalar> variance;
};

/// argmax of mean + beta sqrt(variance); ties go to the lowest index.
template <typename Scalar>
Index ucb_argmax(const BatchScores<Scalar>& scores, Scalar beta) {
  if (scores.mean.size() == 0) throw std::invalid_argument("ucb_argmax: empty action set");
  Index best = 0;
  Scalar best_value = -std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < scores.mean.size(); ++i) {
    const Scalar value = scores.mean(i) + beta * std::sqrt(scores.variance(i));
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// K-UCB

template <typename Scalar = double>
struct KUcbState {
  StateBuffer<Scalar> history;
  std::vector<Scalar> rewards;
  SpdInverse<Scalar> k_lambda_inverse{Matrix<Scalar>(0, 0)};
  Scalar lambda = Scalar(1);
  ExplorationSchedule<Scalar> beta{};

  KUcbState() = default;
  KUcbState(Scalar lambda_, ExplorationSchedule<Scalar> beta_) : lambda(lambda_), beta(beta_) {
    if (!(lambda > 0)) throw std::invalid_argument("KUcbState: lambda must be positive");
  }

  [[nodiscard]] Index size() const { return history.size(); }
  [[nodiscard]] auto reward_vector() const {
    return Eigen::Map<const Vector<Scalar>>(rewards.data(), Index(rewards.size()));
  }
  /// Tr(K (K + lambda I)^{-1}) = t - lambda Tr((K + lambda I)^{-1}), exact.
  [[nodiscard]] Scalar effective_dimension() const {
    return Scalar(size()) - lambda * k_lambda_inverse.inverse().trace();
  }
};

/// Exact posterior mean and squared weighted norm for every column of
/// `candidates` (packed joint states).
template <typename Scalar, typename Derived>
BatchScores<Scalar> kucb_scores(const KUcbState<Scalar>& state,
                                const Eigen::MatrixBase<Derived>& candidates, Index context_dim,
                                const KernelSpec<Scalar>& spec) {
  BatchScores<Scalar> out;
  const Vector<Scalar> kss = self_kernel(spec, candidates, context_dim);
  if (state.size() == 0) {
    out.mean = Vector<Scalar>::Zero(candidates.cols());
    out.variance = kss / state.lambda;
    return out;
  }
  const Matrix<Scalar> ks = gram(spec, state.history.matrix(), candidates, context_dim);
  const Matrix<Scalar>& inv = state.k_lambda_inverse.inverse();
  const Vector<Scalar> alpha = inv * state.reward_vector();
  Matrix<Scalar> projected(inv.rows(), ks.cols());
  projected.noalias() = inv.template selfadjointView<Eigen::Lower>() * ks;
  out.mean = ks.transpose() * alpha;
  out.variance = (kss - ks.cwiseProduct(projected).colwise().sum().transpose()) / state.lambda;
  out.variance = out.variance.cwiseMax(Scalar(0));
  return out;
}

template <typename Scalar>
Score<Scalar> kucb_score(const KUcbState<Scalar>& state, const StatePoint<Scalar>& s,
                         const KernelSpec<Scalar>& spec) {
  const auto batch = kucb_scores(state, s.joint(), s.context_dim(), spec);
  return {batch.mean(0), batch.variance(0)};
}

template <typename Scalar>
Scalar kucb_beta(const KUcbState<Scalar>& state) {
  return schedule_beta(state.beta, RadiusKind::exact, Scalar(state.size()), state.lambda,
                       state.lambda,
                       state.size() == 0 ? Scalar(0) : state.effective_dimension());
}

template <typename Scalar, typename DerivedX, typename DerivedA>
Index kucb_choose(const KUcbState<Scalar>& state, const Eigen::MatrixBase<DerivedX>& context,
                  const Eigen::MatrixBase<DerivedA>& actions, const KernelSpec<Scalar>& spec) {
  if (actions.cols() == 0) throw std::invalid_argument("kucb_choose: empty action set");
  const Matrix<Scalar> candidates = candidate_states<Scalar>(context, actions);
  return ucb_argmax(kucb_scores(state, candidates, context.size(), spec), kucb_beta(state));
}

/// Appends (s, reward) and borders (K + lambda I)^{-1} with K_S(s) and
/// k(s,s) + lambda. O(t^2).
template <typename Scalar>
void kucb_update(KUcbState<Scalar>& state, const StatePoint<Scalar>& s, Scalar reward,
                 const KernelSpec<Scalar>& spec) {
  const Vector<Scalar> ks = kernel_column(spec, state.history, s);
  const Scalar c = eval(spec, s, s) + state.lambda;
  state.k_lambda_inverse.extend_with_jitter(ks, c, Scalar(1e-10) * spec.kappa * spec.kappa);
  state.history.push_back(s);
  state.rewards.push_back(reward);
}

template <typename Scalar>
void kucb_refactor(KUcbState<Scalar>& state, const KernelSpec<Scalar>& spec) {
  if (state.size() == 0) return;
  Matrix<Scalar> k = gram(spec, state.history.matrix(), state.history.matrix(),
                          state.history.context_dim());
  k.diagonal().array() += state.lambda;
  state.k_lambda_inverse = dense_spd_inverse(k, Scalar(1e-10) * spec.kappa * spec.kappa);
}

// ---------------------------------------------------------------------------
// EK-UCB

template <typename Scalar = double>
struct EkUcbState {
  Dictionary<Scalar> dict;
  StateBuffer<Scalar> history;
  std::vector<Scalar> rewards;
  SpdInverse<Scalar> lambda_mat_inverse{Matrix<Scalar>(0, 0)};
  Vector<Scalar> gamma_vec = Vector<Scalar>(0);
  Scalar lambda = Scalar(1);
  KorsParams<Scalar> kors{};
  ExplorationSchedule<Scalar> beta{};

  EkUcbState() = default;
  EkUcbState(Scalar lambda_, KorsParams<Scalar> kors_, ExplorationSchedule<Scalar> beta_,
             std::uint64_t dictionary_seed)
      : dict(dictionary_seed), lambda(lambda_), kors(kors_), beta(beta_) {
    if (!(lambda > 0)) throw std::invalid_argument("EkUcbState: lambda must be positive");
    kors.validate();
  }

  /// K_ZS, m x t.
  [[nodiscard]] auto cross() const { return cross_rows(dict.size()); }
  /// First `m` rows of K_ZS over the whole history.
  [[nodiscard]] auto cross_rows(Index m) const { return cross_.topLeftCorner(m, history.size()); }
  [[nodiscard]] auto reward_vector() const {
    return Eigen::Map<const Vector<Scalar>>(rewards.data(), Index(rewards.size()));
  }

  template <typename Derived>
  void append_cross_column(const Eigen::MatrixBase<Derived>& column) {
    const Index t = history.size();
    reserve(dict.size(), t);
    cross_.col(t - 1).head(dict.size()) = column;
  }

  template <typename Derived>
  void append_cross_row(const Eigen::MatrixBase<Derived>& row) {
    const Index m = dict.size();
    reserve(m, history.size());
    cross_.row(m - 1).head(history.size()) = row.transpose();
  }

  void reset_cross(Matrix<Scalar> cross) {
    cross_ = std::move(cross);
  }

 private:
  void reserve(Index rows, Index cols) {
    if (rows <= cross_.rows() && cols <= cross_.cols()) return;
    const Index new_rows = rows > cross_.rows() ? std::max<Index>(2 * cross_.rows(), rows) : cross_.rows();
    const Index new_cols = cols > cross_.cols() ? std::max<Index>(2 * cross_.cols(), cols) : cross_.cols();
    cross_.conservativeResize(new_rows, new_cols);
  }

  Matrix<Scalar> cross_;
};

template <typename Scalar, typename Derived>
BatchScores<Scalar> ekucb_scores(const EkUcbState<Scalar>& state,
                                 const Eigen::MatrixBase<Derived>& candidates, Index context_dim,
                                 const KernelSpec<Scalar>& spec) {
  if (state.dict.empty()) throw std::logic_error("ekucb_scores: dictionary is empty");
  BatchScores<Scalar> out;
  const Vector<Scalar> kss = self_kernel(spec, candidates, context_dim);
  const Matrix<Scalar> kz = gram(spec, state.dict.anchors().matrix(), candidates, context_dim);
  const Matrix<Scalar>& lam = state.lambda_mat_inverse.inverse();
  const Vector<Scalar> weights = lam * state.gamma_vec;
  const Matrix<Scalar> middle = lam - state.dict.kzz_inverse().inverse() / state.lambda;
  Matrix<Scalar> projected(middle.rows(), kz.cols());
  projected.noalias() = middle * kz;
  out.mean = kz.transpose() * weights;
  out.variance = kss / state.lambda + kz.cwiseProduct(projected).colwise().sum().transpose();
  const Scalar lowest = out.variance.minCoeff();
  if (lowest < Scalar(kVarianceDriftThreshold)) {
    throw NumericalInconsistencyError("ekucb_scores: variance " + std::to_string(double(lowest)) +
                                      " is below the drift threshold");
  }
  out.variance = out.variance.cwiseMax(Scalar(0));
  return out;
}

template <typename Scalar>
Score<Scalar> ekucb_score(const EkUcbState<Scalar>& state, const StatePoint<Scalar>& s,
                          const KernelSpec<Scalar>& spec) {
  const auto batch = ekucb_scores(state, s.joint(), s.context_dim(), spec);
  return {batch.mean(0), batch.variance(0)};
}

template <typename Scalar>
Scalar ekucb_beta(const EkUcbState<Scalar>& state) {
  return schedule_beta(state.beta, RadiusKind::projected, Scalar(state.history.size()),
                       state.lambda, state.kors.mu, Scalar(state.dict.size()));
}

template <typename Scalar, typename DerivedX, typename DerivedA>
Index ekucb_choose(const EkUcbState<Scalar>& state, const Eigen::MatrixBase<DerivedX>& context,
                   const Eigen::MatrixBase<DerivedA>& actions, const KernelSpec<Scalar>& spec) {
  if (actions.cols() == 0) throw std::invalid_argument("ekucb_choose: empty action set");
  const Matrix<Scalar> candidates = candidate_states<Scalar>(context, actions);
  return ucb_argmax(ekucb_scores(state, candidates, context.size(), spec), ekucb_beta(state));
}

namespace detail {

// State-side update shared by EK-UCB and CBBKB: record (s, r), append the
// K_Z(s) column, Lambda^{-1} += K_Z(s) K_Z(s)^T and Gamma += r K_Z(s).
template <typename Scalar, typename DerivedK>
void ek_append_state(EkUcbState<Scalar>& state, const StatePoint<Scalar>& s, Scalar reward,
                     const Eigen::MatrixBase<DerivedK>& kz) {
  state.history.push_back(s);
  state.rewards.push_back(reward);
  state.append_cross_column(kz);
  if (state.dict.size() > 0) {
    state.lambda_mat_inverse.rank_one_update(kz, kz);
    state.gamma_vec += reward * kz;
  }
}

// Border Lambda and Gamma after `dict` gained the anchor z, the most recent
// state. `kz` is K_{Z_old}(z); cross() still has only the old anchors' rows.
template <typename Scalar, typename DerivedK>
void ek_border_anchor(EkUcbState<Scalar>& state, const StatePoint<Scalar>& z,
                      const Eigen::MatrixBase<DerivedK>& kz, Scalar kzz,
                      const KernelSpec<Scalar>& spec) {
  const Index m_old = kz.size();
  const Vector<Scalar> ksz = kernel_column(spec, state.history, z);
  const auto old_cross = state.cross_rows(m_old);
  const Vector<Scalar> border = old_cross * ksz + state.lambda * kz;
  const Scalar corner = ksz.squaredNorm() + state.lambda * kzz;
  state.lambda_mat_inverse.extend_with_jitter(border, corner,
                                              Scalar(1e-10) * spec.kappa * spec.kappa);
  state.append_cross_row(ksz);
  state.gamma_vec.conservativeResize(m_old + 1);
  state.gamma_vec(m_old) = ksz.dot(state.reward_vector());
}

}  // namespace detail

/// One EK-UCB observation at round t. Returns the KORS decision; the first
/// observed state always seeds the dictionary.
template <typename Scalar>
KorsDecision<Scalar> ekucb_update(EkUcbState<Scalar>& state, Index t, const StatePoint<Scalar>& s,
                                  Scalar reward, const KernelSpec<Scalar>& spec) {
  const Vector<Scalar> kz = kernel_column(spec, state.dict.anchors(), s);
  const Scalar kss = eval(spec, s, s);
  detail::ek_append_state(state, s, reward, kz);
  KorsDecision<Scalar> decision;
  if (state.dict.empty()) {
    decision.prob = Scalar(1);
    decision.score = leverage_score_from(state.dict, kz, kss, state.kors);
    uniform01(state.dict.rng());
    decision.added = state.dict.append(s, Scalar(1), t, kz, kss, state.kors.mu);
  } else {
    decision = kors_step_from(state.dict, t, s, kz, kss, state.kors);
  }
  if (decision.added) detail::ek_border_anchor(state, s, kz, kss, spec);
  return decision;
}

template <typename Scalar>
void ekucb_rebuild(EkUcbState<Scalar>& state, const KernelSpec<Scalar>& spec) {
  const Index m = state.dict.size();
  if (m == 0) return;
  const Index cd = state.history.context_dim();
  Matrix<Scalar> cross = gram(spec, state.dict.anchors().matrix(), state.history.matrix(), cd);
  Matrix<Scalar> base = cross * cross.transpose();
  base.noalias() +=
      state.lambda * gram(spec, state.dict.anchors().matrix(), state.dict.anchors().matrix(), cd);
  state.lambda_mat_inverse = dense_spd_inverse(base, Scalar(1e-10) * spec.kappa * spec.kappa);
  state.gamma_vec = cross * state.reward_vector();
  state.reset_cross(std::move(cross));
}

/// Dense re-factorization of K_ZZ^{-1}, Lambda and Gamma.
template <typename Scalar>
void ekucb_refactor(EkUcbState<Scalar>& state, const KernelSpec<Scalar>& spec) {
  state.dict.refactor(spec, Scalar(1e-10) * spec.kappa * spec.kappa);
  ekucb_rebuild(state, spec);
}

// ---------------------------------------------------------------------------
// CBBKB / CBKB

template <typename Scalar = double>
struct CbbkbParams {
  // Resparsify once 1 + (variance accumulated since the last resample)
  // exceeds this; 1 resamples every step (CBKB).
  Scalar accumulation_threshold = Scalar(10);

  void validate() const {
    if (!(accumulation_threshold >= 1)) {
      throw std::invalid_argument("CbbkbParams: accumulation_threshold must be >= 1");
    }
  }
};

template <typename Scalar = double>
struct CbbkbState {
  EkUcbState<Scalar> posterior;
  CbbkbParams<Scalar> params;
  Rng resample_rng;
  Scalar accumulated = 0;
  std::size_t resamples = 0;

  CbbkbState(Scalar lambda, KorsParams<Scalar> kors, ExplorationSchedule<Scalar> beta,
             CbbkbParams<Scalar> params_, std::uint64_t seed)
      : posterior(lambda, kors, beta, seed),
        params(params_),
        resample_rng(make_stream(seed, StreamTag::resample)) {
    params.validate();
  }
};

/// Redraw the dictionary from every past state with probabilities
/// min(gamma * sigma^2(s_i), 1) under the current posterior, then rebuild
/// K_ZS, Lambda, Gamma from scratch. Drawn states are appended one at a time
/// so near duplicates are screened exactly as in KORS. O(t m^2).
template <typename Scalar>
void cbbkb_resample(CbbkbState<Scalar>& state, const KernelSpec<Scalar>& spec) {
  auto& post = state.posterior;
  const Index t = post.history.size();
  const auto scores = ekucb_scores(post, post.history.matrix(), post.history.context_dim(), spec);
  auto fresh = Dictionary<Scalar>::from_anchors(
      spec, StateBuffer<Scalar>(post.history.context_dim(), post.history.joint_dim()), {}, {},
      post.dict.rng(), Scalar(0));
  auto include = [&](Index i, Scalar p) {
    const StatePoint<Scalar> s = post.history.point(i);
    const Vector<Scalar> kz = kernel_column(spec, fresh.anchors(), s);
    fresh.append(s, p, i + 1, kz, eval(spec, s, s), post.kors.mu, post.kors.residual_floor);
  };
  Index fallback = 0;
  Scalar fallback_p = Scalar(-1);
  for (Index i = 0; i < t; ++i) {
    const Scalar p = std::min(post.kors.gamma * scores.variance(i), Scalar(1));
    if (p > fallback_p) {
      fallback = i;
      fallback_p = p;
    }
    if (uniform01(state.resample_rng) < double(p)) include(i, p);
  }
  if (fresh.empty()) include(fallback, Scalar(1));
  post.dict = std::move(fresh);
  ekucb_rebuild(post, spec);
  state.accumulated = 0;
  ++state.resamples;
}

/// One CBBKB observation. `chosen_variance` is sigma^2 of the played action
/// at choice time. Returns true when the dictionary was resampled.
template <typename Scalar>
bool cbbkb_step(CbbkbState<Scalar>& state, Index t, const StatePoint<Scalar>& s, Scalar reward,
                Scalar chosen_variance, const KernelSpec<Scalar>& spec) {
  auto& post = state.posterior;
  if (post.dict.empty()) {
    ekucb_update(post, t, s, reward, spec);
    return false;
  }
  const Vector<Scalar> kz = kernel_column(spec, post.dict.anchors(), s);
  detail::ek_append_state(post, s, reward, kz);
  state.accumulated += chosen_variance;
  const Scalar threshold = state.params.accumulation_threshold;
  if (threshold <= Scalar(1) || Scalar(1) + state.accumulated > threshold) {
    cbbkb_resample(state, spec);
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Random control

inline Index random_policy_choose(Index n_actions, Rng& rng) {
  if (n_actions <= 0) throw std::invalid_argument("random_policy_choose: empty action set");
  return Index(uniform_index(rng, std::size_t(n_actions)));
}

// ---------------------------------------------------------------------------
// Runtime-polymorphic agents used by the experiment runner.

template <typename Scalar = double>
class Policy {
 public:
  virtual ~Policy() = default;
  /// Index of the chosen column of `actions` (one action per column).
  virtual Index choose(const Vector<Scalar>& context, const Matrix<Scalar>& actions) = 0;
  virtual void observe(const StatePoint<Scalar>& s, Scalar reward) = 0;
  [[nodiscard]] virtual Index dictionary_size() const { return 0; }
  [[nodiscard]] virtual const Dictionary<Scalar>* dictionary() const { return nullptr; }
  virtual void refactor() {}
  [[nodiscard]] virtual std::string name() const = 0;
};

template <typename Scalar = double>
class KUcbPolicy final : public Policy<Scalar> {
 public:
  KUcbPolicy(KernelSpec<Scalar> spec, Scalar lambda, ExplorationSchedule<Scalar> beta,
             std::uint64_t seed)
      : spec_(spec), state_(lambda, beta), rng_(make_stream(seed, StreamTag::policy)) {}

  Index choose(const Vector<Scalar>& context, const Matrix<Scalar>& actions) override {
    if (state_.size() == 0) return random_policy_choose(actions.cols(), rng_);
    return kucb_choose(state_, context, actions, spec_);
  }
  void observe(const StatePoint<Scalar>& s, Scalar reward) override {
    kucb_update(state_, s, reward, spec_);
  }
  void refactor() override { kucb_refactor(state_, spec_); }
  // The exact posterior keeps every past state.
  [[nodiscard]] Index dictionary_size() const override { return state_.size(); }
  [[nodiscard]] std::string name() const override { return "kucb"; }
  [[nodiscard]] const KUcbState<Scalar>& state() const { return state_; }

 private:
  KernelSpec<Scalar> spec_;
  KUcbState<Scalar> state_;
  Rng rng_;
};

template <typename Scalar = double>
class EkUcbPolicy final : public Policy<Scalar> {
 public:
  EkUcbPolicy(KernelSpec<Scalar> spec, Scalar lambda, KorsParams<Scalar> kors,
              ExplorationSchedule<Scalar> beta, std::uint64_t seed)
      : spec_(spec), state_(lambda, kors, beta, seed), rng_(make_stream(seed, StreamTag::policy)) {}

  Index choose(const Vector<Scalar>& context, const Matrix<Scalar>& actions) override {
    if (state_.dict.empty()) return random_policy_choose(actions.cols(), rng_);
    return ekucb_choose(state_, context, actions, spec_);
  }
  void observe(const StatePoint<Scalar>& s, Scalar reward) override {
    ekucb_update(state_, ++t_, s, reward, spec_);
  }
  void refactor() override { ekucb_refactor(state_, spec_); }
  [[nodiscard]] Index dictionary_size() const override { return state_.dict.size(); }
  [[nodiscard]] const Dictionary<Scalar>* dictionary() const override { return &state_.dict; }
  [[nodiscard]] std::string name() const override { return "ekucb"; }
  [[nodiscard]] const EkUcbState<Scalar>& state() const { return state_; }

 private:
  KernelSpec<Scalar> spec_;
  EkUcbState<Scalar> state_;
  Rng rng_;
  Index t_ = 0;
};

template <typename Scalar = double>
class CbbkbPolicy final : public Policy<Scalar> {
 public:
  CbbkbPolicy(KernelSpec<Scalar> spec, Scalar lambda, KorsParams<Scalar> kors,
              ExplorationSchedule<Scalar> beta, CbbkbParams<Scalar> params, std::uint64_t seed)
      : spec_(spec), state_(lambda, kors, beta, params, seed),
        rng_(make_stream(seed, StreamTag::policy)) {}

  Index choose(const Vector<Scalar>& context, const Matrix<Scalar>& actions) override {
    if (state_.posterior.dict.empty()) {
      last_variance_ = Scalar(0);
      return random_policy_choose(actions.cols(), rng_);
    }
    const Matrix<Scalar> candidates = candidate_states<Scalar>(context, actions);
    const auto scores = ekucb_scores(state_.posterior, candidates, context.size(), spec_);
    const Index best = ucb_argmax(scores, ekucb_beta(state_.posterior));
    last_variance_ = scores.variance(best);
    return best;
  }
  void observe(const StatePoint<Scalar>& s, Scalar reward) override {
    cbbkb_step(state_, ++t_, s, reward, last_variance_, spec_);
  }
  void refactor() override { ekucb_refactor(state_.posterior, spec_); }
  [[nodiscard]] Index dictionary_size() const override { return state_.posterior.dict.size(); }
  [[nodiscard]] const Dictionary<Scalar>* dictionary() const override {
    return &state_.posterior.dict;
  }
  [[nodiscard]] std::string name() const override {
    return state_.params.accumulation_threshold <= Scalar(1) ? "cbkb" : "cbbkb";
  }
  [[nodiscard]] const CbbkbState<Scalar>& state() const { return state_; }

 private:
  KernelSpec<Scalar> spec_;
  CbbkbState<Scalar> state_;
  Rng rng_;
  Index t_ = 0;
  Scalar last_variance_ = 0;
};

template <typename Scalar = double>
class RandomPolicy final : public Policy<Scalar> {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(make_stream(seed, StreamTag::policy)) {}
  Index choose(const Vector<Scalar>&, const Matrix<Scalar>& actions) override {
    return random_policy_choose(actions.cols(), rng_);
  }
  void observe(const StatePoint<Scalar>&, Scalar) override {}
  [[nodiscard]] std::string name() const override { return "random"; }

 private:
  Rng rng_;
};

}  // namespace banditlab
