#pragma once

// Convergence diagnostics and posterior interval summaries.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hcea/error.hpp"

namespace hcea {

namespace diag_detail {

inline double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

inline bool constant(const std::vector<std::vector<double>>& chains) {
  const double first = chains.front().front();
  for (const auto& c : chains) {
    for (double v : c) {
      if (v != first) return false;
    }
  }
  return true;
}

}  // namespace diag_detail

/// Gelman-Rubin potential scale reduction factor. With `split` each chain is
/// halved first. Uses the pooled variance W (n-1)/n + B/n, which never falls
/// below W (n-1)/n, and reports sqrt(max(var+ / W, 1)) so the value is at
/// least 1. Returns nullopt for a parameter that is constant everywhere.
inline std::optional<double> rhat(const std::vector<std::vector<double>>& chains, bool split = true) {
  if (chains.size() < 2) throw InputError("rhat needs at least 2 chains");
  std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw InputError("rhat needs chains of equal length");
  }
  if (n < 10) throw InputError("rhat needs at least 10 draws per chain");
  if (diag_detail::constant(chains)) return std::nullopt;
  std::vector<std::span<const double>> parts;
  if (split) {
    const std::size_t h = n / 2;
    for (const auto& c : chains) {
      parts.emplace_back(c.data(), h);
      parts.emplace_back(c.data() + (n - h), h);
    }
    n = h;
  } else {
    for (const auto& c : chains) parts.emplace_back(c.data(), n);
  }
  const double m = static_cast<double>(parts.size());
  const double nn = static_cast<double>(n);
  std::vector<double> means, vars;
  for (auto p : parts) {
    means.push_back(diag_detail::mean(p));
    vars.push_back(diag_detail::variance(p));
  }
  const double W = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double B = 0.0;
  for (double mu : means) B += (mu - grand) * (mu - grand);
  B *= nn / (m - 1.0);
  if (!(W > 0.0)) return std::numeric_limits<double>::infinity();
  const double var_plus = (nn - 1.0) / nn * W + B / nn;
  return std::sqrt(std::max(var_plus / W, 1.0));
}

/// Effective sample size from the multi-chain autocorrelation with Geyer's
/// initial positive sequence truncation. Capped at the total number of draws.
/// Returns nullopt for a constant series.
inline std::optional<double> ess(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw InputError("ess needs at least one chain");
  const std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw InputError("ess needs chains of equal length");
  }
  if (n < 2) throw InputError("ess needs at least 2 draws");
  if (diag_detail::constant(chains)) return std::nullopt;
  const double m = static_cast<double>(chains.size());
  const double nn = static_cast<double>(n);

  std::vector<double> means;
  for (const auto& c : chains) means.push_back(diag_detail::mean(c));
  // Autocovariance at lag t, summed over chains; computed only for the lags the
  // truncation rule visits.
  auto acov_sum = [&](std::size_t t) {
    double total = 0.0;
    for (std::size_t k = 0; k < chains.size(); ++k) {
      const auto& c = chains[k];
      double s = 0.0;
      for (std::size_t i = 0; i + t < n; ++i) s += (c[i] - means[k]) * (c[i + t] - means[k]);
      total += s / nn;
    }
    return total;
  };
  const double g0 = acov_sum(0);
  const double W = g0 / m * nn / (nn - 1.0);
  double B = 0.0;
  if (chains.size() > 1) {
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
    for (double mu : means) B += (mu - grand) * (mu - grand);
    B *= nn / (m - 1.0);
  }
  const double var_plus = (nn - 1.0) / nn * W + B / nn;
  if (!(var_plus > 0.0)) return std::nullopt;
  auto rho = [&](std::size_t t) { return 1.0 - (W - (t == 0 ? g0 : acov_sum(t)) / m) / var_plus; };
  // Geyer: sum pairs rho(2k) + rho(2k+1) while positive, enforcing monotonicity.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  if (tau <= 0.0) tau = 1.0 / std::log10(m * nn);
  return std::min(m * nn / tau, m * nn);
}

inline std::optional<double> ess(std::span<const double> draws) {
  return ess(std::vector<std::vector<double>>{std::vector<double>(draws.begin(), draws.end())});
}

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
  bool contains(double x) const { return x >= lower && x <= upper; }
};

/// Shortest window holding ceil(mass * n) of the sorted draws (unimodal posteriors).
inline Interval hpd_interval(std::span<const double> draws, double mass = 0.90) {
  if (!(mass > 0.0 && mass < 1.0)) throw InputError("HPD mass must lie in (0, 1)");
  if (draws.size() < 50) throw InputError("HPD interval needs at least 50 draws");
  std::vector<double> x(draws.begin(), draws.end());
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  const std::size_t k = std::min(n, static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9)));
  Interval best{x.front(), x[k - 1]};
  for (std::size_t i = 1; i + k <= n; ++i) {
    if (x[i + k - 1] - x[i] < best.width()) best = {x[i], x[i + k - 1]};
  }
  return best;
}

struct DicResult {
  double mean_deviance = 0.0;        // D-bar
  double deviance_at_mean = 0.0;     // D(theta-bar)
  double effective_parameters = 0.0; // pD
  double dic = 0.0;
  std::size_t term_count = 0;
  const char* scope = "observed_common_modules";
};

/// D-bar from per-draw deviances, pD = D-bar - D(theta-bar), DIC = D-bar + pD.
inline DicResult dic_from_deviances(std::span<const double> draw_deviances, double deviance_at_mean,
                                    std::size_t term_count) {
  if (draw_deviances.empty()) throw InputError("DIC needs at least one draw");
  DicResult r;
  r.mean_deviance = diag_detail::mean(draw_deviances);
  r.deviance_at_mean = deviance_at_mean;
  r.effective_parameters = r.mean_deviance - deviance_at_mean;
  r.dic = r.mean_deviance + r.effective_parameters;
  r.term_count = term_count;
  return r;
}

}  // namespace hcea
