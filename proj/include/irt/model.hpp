#pragma once

#include <cmath>
#include <limits>

namespace irt {

/// Item parameters of the three-parameter logistic model.
/// alpha > 0 is discrimination, beta is difficulty on the ability scale,
/// gamma in (0,1) is the guessing floor.
template <typename Scalar>
struct ItemParams {
  Scalar alpha{1};
  Scalar beta{0};
  Scalar gamma{Scalar(0.5)};
};

using ItemParameters = ItemParams<double>;

/// Probability clamp used by the response log-likelihood.
inline constexpr double kProbClamp = 1e-7;

/// Logistic function, branching on sign so exp never overflows.
template <typename Scalar>
inline Scalar sigmoid(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) {
    return Scalar(1) / (Scalar(1) + exp(-x));
  }
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
inline Scalar logit(Scalar p) {
  using std::log;
  return log(p) - log1p(-p);
}

/// p(theta) = gamma + (1 - gamma) * sigmoid(alpha * (theta - beta)).
template <typename Scalar>
inline Scalar icc_prob(Scalar theta, const ItemParams<Scalar>& item) {
  const Scalar s = sigmoid(item.alpha * (theta - item.beta));
  return item.gamma + (Scalar(1) - item.gamma) * s;
}

/// dp/dtheta of icc_prob.
template <typename Scalar>
inline Scalar icc_slope(Scalar theta, const ItemParams<Scalar>& item) {
  const Scalar z = item.alpha * (theta - item.beta);
  const Scalar s = sigmoid(z);
  // 1 - s computed from the mirrored argument keeps precision on the upper plateau.
  const Scalar t = sigmoid(-z);
  return (Scalar(1) - item.gamma) * item.alpha * s * t;
}

/// Bernoulli log-likelihood of one binary response with p clamped into
/// [kProbClamp, 1 - kProbClamp].
template <typename Scalar>
inline Scalar response_loglik(bool correct, Scalar theta, const ItemParams<Scalar>& item) {
  using std::log;
  const Scalar z = item.alpha * (theta - item.beta);
  const Scalar lo = Scalar(kProbClamp);
  const Scalar hi = Scalar(1) - Scalar(kProbClamp);
  if (correct) {
    Scalar p = item.gamma + (Scalar(1) - item.gamma) * sigmoid(z);
    p = p < lo ? lo : (p > hi ? hi : p);
    return log(p);
  }
  Scalar q = (Scalar(1) - item.gamma) * sigmoid(-z);
  q = q < lo ? lo : (q > hi ? hi : q);
  return log(q);
}

/// Locally estimated headroom: ICC slope at the strongest responder's ability.
template <typename Scalar>
inline Scalar leh_score(const ItemParams<Scalar>& item, Scalar theta_star) {
  return icc_slope(theta_star, item);
}

}  // namespace irt
