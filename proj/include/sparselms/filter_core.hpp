#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace sparselms {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Weight/regressor length mismatch.
class dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An update produced (or was fed) a non-finite weight.
class divergence_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sign of the leaky term: plus selects (1 + mu*gamma), minus selects (1 - mu*gamma).
enum class LeakSign { plus, minus };

/// Hyperparameters shared by the four update rules. rho_p is the primary
/// penalty step; gamma_p, when supplied, must satisfy rho_p = mu * gamma_p.
template <typename Scalar>
struct FilterParams {
  Scalar mu{};
  Scalar gamma{0};
  Scalar rho_p{0};
  Scalar epsilon_p{0};
  Scalar p{Scalar(1) / 2};
  LeakSign leak_sign{LeakSign::plus};
  std::optional<Scalar> gamma_p{};

  friend bool operator==(const FilterParams&, const FilterParams&) = default;
};

template <typename Scalar>
struct UpdateResult {
  Vector<Scalar> weights;
  Scalar error{};
  Scalar prediction{};
};

/// Sign function with sgn(0) = 0.
template <typename Scalar>
  requires std::is_arithmetic_v<Scalar>
inline Scalar sgn(Scalar v) {
  return Scalar((Scalar(0) < v) - (v < Scalar(0)));
}

/// Element-wise sign of a vector.
template <typename Derived>
Vector<typename Derived::Scalar> sgn(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  return v.derived().unaryExpr([](S a) { return sgn<S>(a); });
}

namespace detail {

// |v|^e, with a sqrt fast path for the common e = 1/2.
template <typename Scalar>
inline Scalar pow_abs(Scalar v, Scalar e) {
  const Scalar a = std::abs(v);
  if (e == Scalar(1) / 2) return std::sqrt(a);
  return std::pow(a, e);
}

template <typename Scalar>
inline void require_norm_exponent(Scalar p) {
  if (!(p > Scalar(0) && p < Scalar(1))) {
    throw std::invalid_argument("norm exponent p must lie in (0,1), got " +
                                std::to_string(static_cast<double>(p)));
  }
}

template <typename DerivedW, typename DerivedX>
inline void require_same_length(const Eigen::MatrixBase<DerivedW>& w,
                                const Eigen::MatrixBase<DerivedX>& x) {
  if (w.size() != x.size()) {
    throw dimension_error("length mismatch: weights have " + std::to_string(w.size()) +
                          " taps, regressor has " + std::to_string(x.size()));
  }
}

template <typename Scalar>
inline void require_step_size(const FilterParams<Scalar>& prm) {
  if (!(prm.mu > Scalar(0))) throw std::invalid_argument("step size mu must be positive");
}

template <typename Scalar>
inline void require_penalty_params(const FilterParams<Scalar>& prm) {
  if (prm.rho_p < Scalar(0)) throw std::invalid_argument("rho_p must be non-negative");
  if (prm.rho_p > Scalar(0)) {
    require_norm_exponent(prm.p);
    if (prm.epsilon_p < Scalar(0)) throw std::invalid_argument("epsilon_p must be non-negative");
  }
  if (prm.gamma_p) {
    const Scalar expected = prm.mu * *prm.gamma_p;
    const Scalar tol = Scalar(1e-9) * std::max(Scalar(1), std::abs(expected));
    if (std::abs(prm.rho_p - expected) > tol) {
      throw std::invalid_argument("inconsistent penalty parameters: rho_p must equal mu * gamma_p");
    }
  }
}

}  // namespace detail

/// Inner product of the weights with the regressor.
template <typename DerivedW, typename DerivedX>
typename DerivedW::Scalar predict(const Eigen::MatrixBase<DerivedW>& w,
                                  const Eigen::MatrixBase<DerivedX>& x) {
  detail::require_same_length(w, x);
  return w.derived().dot(x.derived());
}

/// p-norm (sum_i |w_i|^p)^(1/p) for 0 < p < 1; zero for the all-zero vector.
template <typename Derived>
typename Derived::Scalar lp_norm(const Eigen::MatrixBase<Derived>& w,
                                 typename Derived::Scalar p) {
  using S = typename Derived::Scalar;
  detail::require_norm_exponent(p);
  const S acc = w.derived().unaryExpr([p](S a) { return detail::pow_abs(a, p); }).sum();
  if (acc == S(0)) return S(0);
  if (p == S(1) / 2) return acc * acc;
  return std::pow(acc, S(1) / p);
}

/// Unscaled shrinkage direction g with
///   g_i = ||w||_p^(1-p) * sgn(w_i) / (epsilon_p + |w_i|^(1-p)),
/// and g_i = 0 wherever w_i = 0 (the sgn(0) = 0 rule wins over 0/0).
template <typename Derived>
Vector<typename Derived::Scalar> lp_penalty_gradient(const Eigen::MatrixBase<Derived>& w,
                                                     typename Derived::Scalar p,
                                                     typename Derived::Scalar epsilon_p) {
  using S = typename Derived::Scalar;
  detail::require_norm_exponent(p);
  if (epsilon_p < S(0)) throw std::invalid_argument("epsilon_p must be non-negative");
  if (!w.allFinite()) throw divergence_error("non-finite weight vector in penalty gradient");
  const S one_minus_p = S(1) - p;
  const S scale = detail::pow_abs(lp_norm(w, p), one_minus_p);
  return w.derived().unaryExpr([=](S wi) {
    if (wi == S(0)) return S(0);
    return scale * sgn(wi) / (epsilon_p + detail::pow_abs(wi, one_minus_p));
  });
}

namespace detail {

// Common kernel: w' = leak_factor*w + mu*e*x - rho_p*g(w). All four update
// rules route through here so that the reduction identities (gamma = 0,
// rho_p = 0) hold bit-for-bit.
template <typename DerivedW, typename DerivedX, typename Scalar>
UpdateResult<Scalar> gradient_step(const Eigen::MatrixBase<DerivedW>& w,
                                   const Eigen::MatrixBase<DerivedX>& x, Scalar desired,
                                   Scalar leak_factor, const FilterParams<Scalar>& prm,
                                   Scalar rho_p) {
  require_same_length(w, x);
  UpdateResult<Scalar> out;
  out.prediction = w.derived().dot(x.derived());
  out.error = desired - out.prediction;
  out.weights = leak_factor * w.derived() + (prm.mu * out.error) * x.derived();
  if (rho_p > Scalar(0)) {
    out.weights -= rho_p * lp_penalty_gradient(w, prm.p, prm.epsilon_p);
  }
  if (!out.weights.allFinite()) {
    throw divergence_error("filter update produced a non-finite weight");
  }
  return out;
}

}  // namespace detail

/// Plain stochastic-gradient step: w' = w + mu*e*x.
template <typename DerivedW, typename DerivedX, typename Scalar = typename DerivedW::Scalar>
UpdateResult<Scalar> lms_update(const Eigen::MatrixBase<DerivedW>& w,
                                const Eigen::MatrixBase<DerivedX>& x, Scalar desired,
                                const FilterParams<Scalar>& prm) {
  detail::require_step_size(prm);
  return detail::gradient_step(w, x, desired, Scalar(1), prm, Scalar(0));
}

/// Leaky step: w' = (1 - mu*gamma)*w + mu*e*x, 0 <= gamma < 1.
template <typename DerivedW, typename DerivedX, typename Scalar = typename DerivedW::Scalar>
UpdateResult<Scalar> llms_update(const Eigen::MatrixBase<DerivedW>& w,
                                 const Eigen::MatrixBase<DerivedX>& x, Scalar desired,
                                 const FilterParams<Scalar>& prm) {
  detail::require_step_size(prm);
  if (!(prm.gamma >= Scalar(0) && prm.gamma < Scalar(1))) {
    throw std::invalid_argument("leakage factor gamma must lie in [0,1)");
  }
  return detail::gradient_step(w, x, desired, Scalar(1) - prm.mu * prm.gamma, prm, Scalar(0));
}

/// Sparsity-penalized step: w' = w + mu*e*x - rho_p*g(w).
template <typename DerivedW, typename DerivedX, typename Scalar = typename DerivedW::Scalar>
UpdateResult<Scalar> lp_lms_update(const Eigen::MatrixBase<DerivedW>& w,
                                   const Eigen::MatrixBase<DerivedX>& x, Scalar desired,
                                   const FilterParams<Scalar>& prm) {
  detail::require_step_size(prm);
  detail::require_penalty_params(prm);
  return detail::gradient_step(w, x, desired, Scalar(1), prm, prm.rho_p);
}

/// Leaky sparsity-penalized step: w' = (1 +/- mu*gamma)*w + mu*e*x - rho_p*g(w).
/// The sign is picked by prm.leak_sign; plus (growth) is the default.
template <typename DerivedW, typename DerivedX, typename Scalar = typename DerivedW::Scalar>
UpdateResult<Scalar> lp_llms_update(const Eigen::MatrixBase<DerivedW>& w,
                                    const Eigen::MatrixBase<DerivedX>& x, Scalar desired,
                                    const FilterParams<Scalar>& prm) {
  detail::require_step_size(prm);
  detail::require_penalty_params(prm);
  if (!(prm.gamma >= Scalar(0))) throw std::invalid_argument("leakage factor gamma must be non-negative");
  const Scalar leak = prm.leak_sign == LeakSign::plus ? Scalar(1) + prm.mu * prm.gamma
                                                      : Scalar(1) - prm.mu * prm.gamma;
  return detail::gradient_step(w, x, desired, leak, prm, prm.rho_p);
}

}  // namespace sparselms
