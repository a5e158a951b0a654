#pragma once

// Scalar densities and link functions used by every model family. All
// log-densities return -infinity (never throw) outside their support so they
// can sit inside Metropolis acceptance ratios.

#include <cmath>
#include <limits>
#include <numbers>

namespace hcea::math {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double expit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

/// log(1 + exp(x)) without overflow.
inline double log1p_exp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double lbeta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double normal_lpdf(double x, double mean, double sd) {
  if (!(sd > 0.0)) return kNegInf;
  const double z = (x - mean) / sd;
  return -kLogSqrt2Pi - std::log(sd) - 0.5 * z * z;
}

/// Beta log-density with log(x) and log(1 - x) supplied by the caller.
inline double beta_lpdf_logs(double log_x, double log1m_x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) return kNegInf;
  return (a - 1.0) * log_x + (b - 1.0) * log1m_x - lbeta(a, b);
}

inline double beta_lpdf(double x, double a, double b) {
  if (!(x > 0.0) || !(x < 1.0)) return kNegInf;
  return beta_lpdf_logs(std::log(x), std::log1p(-x), a, b);
}

/// Shape/rate parameterisation.
inline double gamma_lpdf(double x, double shape, double rate) {
  if (!(x > 0.0) || !(shape > 0.0) || !(rate > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double logistic_lpdf(double x, double location, double scale) {
  if (!(scale > 0.0)) return kNegInf;
  const double z = (x - location) / scale;
  return -z - std::log(scale) - 2.0 * log1p_exp(-z);
}

/// Half-Cauchy on [0, inf).
inline double half_cauchy_lpdf(double x, double scale) {
  if (!(x >= 0.0) || !(scale > 0.0)) return kNegInf;
  const double z = x / scale;
  return std::log(2.0 / std::numbers::pi) - std::log(scale) - std::log1p(z * z);
}

inline double uniform_lpdf(double x, double lower, double upper) {
  if (!(x > lower) || !(x < upper)) return kNegInf;
  return -std::log(upper - lower);
}

/// Bernoulli log-pmf with the success probability given on the logit scale.
inline double bernoulli_logit_lpmf(bool d, double linear_predictor) {
  return d ? -log1p_exp(-linear_predictor) : -log1p_exp(linear_predictor);
}

/// Beta shape parameters from a mean/standard-deviation pair.
/// `scale` is a + b; it is non-positive when sd^2 >= mean (1 - mean).
struct BetaShape {
  double a = 0.0;
  double b = 0.0;
  double scale = 0.0;
  bool valid() const { return scale > 0.0; }
};

inline BetaShape beta_shape_from_mean_sd(double mean, double sd) {
  const double scale = mean * (1.0 - mean) / (sd * sd) - 1.0;
  return {mean * scale, (1.0 - mean) * scale, scale};
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

inline MeanSd beta_mean_sd_from_shape(double a, double b) {
  const double s = a + b;
  return {a / s, std::sqrt(a * b / (s * s * (s + 1.0)))};
}

/// Gamma parameters whose mean is `mean` and standard deviation `sd`.
struct GammaShapeRate {
  double shape = 0.0;
  double rate = 0.0;
};

inline GammaShapeRate gamma_from_mean_sd(double mean, double sd) {
  const double rate = mean / (sd * sd);
  return {mean * rate, rate};
}

}  // namespace hcea::math
