#pragma once

// Deviance information criterion over the observed-data terms that every
// family shares: observed QALYs, observed costs and observed baseline
// utilities. The structural-indicator modules are left out.

#include <vector>

#include "hcea/diagnostics.hpp"
#include "hcea/model.hpp"
#include "hcea/sampler.hpp"

namespace hcea {

/// Deviance at posterior-mean parameters (natural scale). Latent values that
/// observed terms condition on (a missing QALY under an observed cost, a
/// missing baseline utility under an observed QALY) enter at their posterior
/// means.
inline double deviance_at_posterior_mean(const PosteriorDraws& draws, const PreparedModel& pm) {
  const double total = static_cast<double>(draws.retained * draws.chains.size());
  double loglik = 0.0;
  for (std::size_t a = 0; a < 2; ++a) {
    const ArmModel& m = pm.arms[a];
    std::vector<double> p(draws.parameter_count[a], 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const auto v = draws.pooled(draws.parameter_offset[a] + k);
      double s = 0.0;
      for (double x : v) s += x;
      p[k] = s / static_cast<double>(v.size());
    }
    ArmLatent L = m.initial_latent();
    for (std::size_t i = 0; i < m.n(); ++i) {
      double e_sum = 0.0, u_sum = 0.0;
      for (const auto& ch : draws.chains) {
        e_sum += ch.e_sum[a][i];
        u_sum += ch.u0_sum[a][i];
      }
      if (!m.e_observed(i)) m.set_e(L, i, e_sum / total, L.d[i]);
      if (!m.u0_observed(i)) m.set_u0(L, i, u_sum / total, 0);
    }
    loglik += m.observed_log_likelihood(p, L);
  }
  return -2.0 * loglik;
}

inline DicResult dic(const PosteriorDraws& draws, const TrialDataset& data, const ModelSpec& spec) {
  const auto pm = prepare_model(data, spec);
  std::size_t terms = 0;
  for (const auto& m : pm.arms) terms += m.observed_term_count();
  const auto dev = draws.deviance_pooled();
  return dic_from_deviances(dev, deviance_at_posterior_mean(draws, pm), terms);
}

inline DicResult dic(const PosteriorDraws& draws, const TrialDataset& data) { return dic(draws, data, draws.spec); }

}  // namespace hcea
