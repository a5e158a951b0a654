#pragma once

// Per-record likelihood terms of the three joint model families:
//   effectiveness  e | u0        Normal (identity link) or Beta (logit link, mean/SD form)
//   costs          c | e         Normal (identity link) or Gamma (log link, mean/SD form)
//   structural     d | covariates Bernoulli with logit link (hurdle only)
// The kernels return -infinity outside the support; the public wrappers throw.

#include <cmath>
#include <span>
#include <string>

#include "hcea/error.hpp"
#include "hcea/math.hpp"
#include "hcea/model_spec.hpp"

namespace hcea {

struct EffectModelParams {
  double alpha0 = 0.0;   // intercept, link scale
  double alpha1 = 0.0;   // slope on centred baseline utility
  double sigma_e = 0.1;  // marginal SD
};

struct CostModelParams {
  double beta0 = 0.0;    // intercept, link scale
  double beta1 = 0.0;    // slope on (e - mu_e)
  double sigma_c = 1.0;  // marginal SD
};

/// The ones component of the QALY (or baseline-utility) hurdle.
struct OnesComponent {
  bool exact = true;
  double mean = 1.0;
  double mean_logit = std::numeric_limits<double>::infinity();
  double sd = 0.0;
  math::BetaShape shape;  // DegenerateBeta only

  /// Log-density of a structural one. The exact point mass contributes log(1);
  /// the near-degenerate Beta is evaluated at its own mean, the location that
  /// stands in for an observed 1 on the open interval.
  double log_density_of_one() const {
    if (exact) return 0.0;
    return math::beta_lpdf(mean, shape.a, shape.b);
  }
};

inline OnesComponent degenerate_ones_component(const PointMassMode& mode) {
  OnesComponent ones;
  if (mode.is_exact()) return ones;
  const double s = mode.sigma1;
  ones.exact = false;
  ones.mean = kDegenerateOnesMean;
  ones.mean_logit = math::logit(kDegenerateOnesMean);
  ones.sd = s;
  ones.shape = math::beta_shape_from_mean_sd(kDegenerateOnesMean, s);
  if (!(s > 0.0 && s <= 1e-3) || !ones.shape.valid()) {
    throw InputError("degenerate ones component needs sigma1 in (0, 1e-3] with sigma1^2 < 0.999999 * 1e-6");
  }
  return ones;
}

/// Mixture mean of the hurdle QALYs: (1 - pi) mu_nonone + pi.
inline double marginal_mean_qalys(double pi_bar, double mu_nonone) {
  return (1.0 - pi_bar) * mu_nonone + pi_bar;
}

namespace kernel {

inline double effect_normal(double e, double location, double sigma_e) {
  return math::normal_lpdf(e, location, sigma_e);
}

/// Beta with mean `phi` and SD `sigma`; scale phi (1 - phi) / sigma^2 - 1 must be positive.
inline double effect_beta(double log_e, double log1m_e, double phi, double sigma) {
  const auto s = math::beta_shape_from_mean_sd(phi, sigma);
  if (!s.valid()) return math::kNegInf;
  return math::beta_lpdf_logs(log_e, log1m_e, s.a, s.b);
}

/// Normal conditional cost: mean beta0 + beta1 (e - mu_e), variance sigma_c^2 - sigma_e^2 beta1^2.
inline double cost_normal(double c, double e, double mu_e, double beta0, double beta1, double sigma_c,
                          double sigma_e) {
  const double tau2 = sigma_c * sigma_c - sigma_e * sigma_e * beta1 * beta1;
  if (!(tau2 > 0.0)) return math::kNegInf;
  return math::normal_lpdf(c, beta0 + beta1 * (e - mu_e), std::sqrt(tau2));
}

/// Gamma conditional cost: log mean beta0 + beta1 (e - mu_e), rate mean / sigma_c^2,
/// shape mean * rate.
inline double cost_gamma(double c, double log_c, double e, double mu_e, double beta0, double beta1,
                         double sigma_c) {
  if (!(c > 0.0) || !(sigma_c > 0.0)) return math::kNegInf;
  const double mean = std::exp(beta0 + beta1 * (e - mu_e));
  const double rate = mean / (sigma_c * sigma_c);
  const double shape = mean * rate;
  if (!(shape > 0.0) || !std::isfinite(shape)) return math::kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * log_c - rate * c;
}

}  // namespace kernel

/// One record's view for the effectiveness term.
struct EffectObservation {
  double e = 0.0;
  double u0_centered = 0.0;
  int d = 0;  // structural-one indicator (hurdle only)
};

/// Log-density of e given the effect parameters. BetaGamma needs e in (0, 1)
/// (boundary values already rescaled); the hurdle routes d = 1 to the ones
/// component and needs e < 1 otherwise.
inline double log_likelihood_effect(const EffectModelParams& p, Family family, const EffectObservation& obs,
                                    const OnesComponent& ones = {}) {
  const double lp = p.alpha0 + p.alpha1 * obs.u0_centered;
  if (!(p.sigma_e > 0.0)) throw SupportError("sigma_e must be positive");
  switch (family) {
    case Family::BivariateNormal: return kernel::effect_normal(obs.e, lp, p.sigma_e);
    case Family::Hurdle:
      if (obs.d == 1) {
        if (obs.e != 1.0) throw SupportError("structural one with e != 1");
        return ones.log_density_of_one();
      }
      if (!(obs.e < 1.0)) throw SupportError("non-structural QALY must be below 1");
      [[fallthrough]];
    case Family::BetaGamma: {
      if (!(obs.e > 0.0 && obs.e < 1.0)) throw SupportError("Beta QALY outside (0, 1): " + std::to_string(obs.e));
      const double phi = math::expit(lp);
      if (!math::beta_shape_from_mean_sd(phi, p.sigma_e).valid()) {
        throw SupportError("non-positive Beta scale: sigma_e^2 >= phi (1 - phi)");
      }
      return kernel::effect_beta(std::log(obs.e), std::log1p(-obs.e), phi, p.sigma_e);
    }
  }
  return math::kNegInf;
}

struct CostObservation {
  double c = 0.0;
  double e = 0.0;
  double mu_e = 0.0;
};

/// Log-density of c given e. `sigma_e` enters the Normal conditional variance.
inline double log_likelihood_cost(const CostModelParams& p, Family family, const CostObservation& obs,
                                  double sigma_e = 0.0) {
  if (family == Family::BivariateNormal) {
    const double r = kernel::cost_normal(obs.c, obs.e, obs.mu_e, p.beta0, p.beta1, p.sigma_c, sigma_e);
    if (r == math::kNegInf) throw SupportError("conditional cost variance sigma_c^2 - sigma_e^2 beta1^2 is not positive");
    return r;
  }
  if (!(obs.c > 0.0)) throw SupportError("Gamma cost must be positive (rescale zeros by epsilon)");
  if (!(p.sigma_c > 0.0)) throw SupportError("sigma_c must be positive");
  return kernel::cost_gamma(obs.c, std::log(obs.c), obs.e, obs.mu_e, p.beta0, p.beta1, p.sigma_c);
}

/// Conditional variance of the Normal cost model.
inline double conditional_cost_variance(const CostModelParams& p, double sigma_e) {
  return p.sigma_c * p.sigma_c - sigma_e * sigma_e * p.beta1 * p.beta1;
}

/// Bernoulli log-pmf for one structural indicator with logit-linear predictor
/// coefficients . design_row.
inline double log_likelihood_structural(std::span<const double> coefficients, std::span<const double> design_row,
                                        int d) {
  if (coefficients.size() != design_row.size()) throw InputError("coefficient / design length mismatch");
  double lp = 0.0;
  for (std::size_t k = 0; k < coefficients.size(); ++k) lp += coefficients[k] * design_row[k];
  return math::bernoulli_logit_lpmf(d == 1, lp);
}

/// Sum over records; `design` is row-major with one row per indicator.
inline double log_likelihood_structural(std::span<const double> coefficients, std::span<const double> design,
                                        std::span<const int> d) {
  const std::size_t p = coefficients.size();
  if (design.size() != p * d.size()) throw InputError("design matrix shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double lp = 0.0;
    for (std::size_t k = 0; k < p; ++k) lp += coefficients[k] * design[i * p + k];
    total += math::bernoulli_logit_lpmf(d[i] == 1, lp);
  }
  return total;
}

}  // namespace hcea
