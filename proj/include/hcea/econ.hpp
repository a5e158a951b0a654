#pragma once

// Decision-analytic summaries of the incremental draws (delta_e, delta_c):
// ICER, cost-effectiveness plane quadrants and the acceptability curve.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "hcea/error.hpp"

namespace hcea {

/// Willingness-to-pay values start, start + step, ..., up to and including max.
struct WtpGrid {
  double start = 0.0;
  double max = 30000.0;
  double step = 100.0;

  std::vector<double> values() const {
    if (!(start >= 0.0) || !(step > 0.0) || !(max >= start)) {
      throw InputError("willingness-to-pay grid must be non-negative with a positive step");
    }
    std::vector<double> k;
    const auto n = static_cast<std::size_t>(std::floor((max - start) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) k.push_back(start + static_cast<double>(i) * step);
    return k;
  }
};

struct IcerResult {
  std::optional<double> value;  // nullopt: undefined, |E[delta_e]| < 1e-12
  double mean_delta_e = 0.0;
  double mean_delta_c = 0.0;
};

inline void check_pairs(std::span<const double> de, std::span<const double> dc) {
  if (de.size() != dc.size()) throw InputError("delta_e and delta_c draw counts differ");
  if (de.empty()) throw InputError("no incremental draws");
}

/// Ratio of posterior means E[delta_c] / E[delta_e].
inline IcerResult icer(std::span<const double> de, std::span<const double> dc) {
  check_pairs(de, dc);
  IcerResult r;
  for (std::size_t i = 0; i < de.size(); ++i) {
    r.mean_delta_e += de[i];
    r.mean_delta_c += dc[i];
  }
  r.mean_delta_e /= static_cast<double>(de.size());
  r.mean_delta_c /= static_cast<double>(dc.size());
  if (std::abs(r.mean_delta_e) >= 1e-12) r.value = r.mean_delta_c / r.mean_delta_e;
  return r;
}

/// The cost-effectiveness predicate k delta_e - delta_c > 0; a tie is not cost-effective.
inline bool cost_effective(double k, double de, double dc) { return k * de - dc > 0.0; }

struct CeacPoint {
  double k = 0.0;
  double probability = 0.0;
};

/// P(k delta_e - delta_c > 0) for each k, accumulated in one pass over the draws.
inline std::vector<CeacPoint> ceac(std::span<const double> de, std::span<const double> dc, const std::vector<double>& k) {
  check_pairs(de, dc);
  if (k.empty()) throw InputError("empty willingness-to-pay grid");
  if (de.size() < 100) throw InputError("the acceptability curve needs at least 100 draws");
  std::vector<std::size_t> count(k.size(), 0);
  for (std::size_t i = 0; i < de.size(); ++i) {
    for (std::size_t j = 0; j < k.size(); ++j) count[j] += cost_effective(k[j], de[i], dc[i]);
  }
  std::vector<CeacPoint> out;
  for (std::size_t j = 0; j < k.size(); ++j) {
    out.push_back({k[j], static_cast<double>(count[j]) / static_cast<double>(de.size())});
  }
  return out;
}

inline std::vector<CeacPoint> ceac(std::span<const double> de, std::span<const double> dc, const WtpGrid& grid) {
  return ceac(de, dc, grid.values());
}

struct CepSummary {
  double k_ref = 20000.0;
  double north_east = 0.0;  // more effective, more costly
  double north_west = 0.0;  // not more effective, more costly
  double south_west = 0.0;  // not more effective, not more costly
  double south_east = 0.0;  // more effective, not more costly
  double sustainability = 0.0;  // fraction cost-effective at k_ref
  double mean_net_benefit = 0.0;  // E[k_ref delta_e - delta_c]
};

inline CepSummary cep_summary(std::span<const double> de, std::span<const double> dc, double k_ref = 20000.0) {
  check_pairs(de, dc);
  if (!(k_ref >= 0.0)) throw InputError("reference willingness to pay must be non-negative");
  CepSummary s;
  s.k_ref = k_ref;
  const double n = static_cast<double>(de.size());
  for (std::size_t i = 0; i < de.size(); ++i) {
    const bool east = de[i] > 0.0;
    const bool north = dc[i] > 0.0;
    (north ? (east ? s.north_east : s.north_west) : (east ? s.south_east : s.south_west)) += 1.0;
    s.sustainability += cost_effective(k_ref, de[i], dc[i]);
    s.mean_net_benefit += k_ref * de[i] - dc[i];
  }
  for (double* f : {&s.north_east, &s.north_west, &s.south_west, &s.south_east, &s.sustainability, &s.mean_net_benefit}) {
    *f /= n;
  }
  return s;
}

struct CeaResult {
  IcerResult icer;
  CepSummary cep;
  std::vector<CeacPoint> ceac;
};

inline CeaResult evaluate_cost_effectiveness(std::span<const double> de, std::span<const double> dc,
                                             const WtpGrid& grid = {}, double k_ref = 20000.0) {
  return {icer(de, dc), cep_summary(de, dc, k_ref), ceac(de, dc, grid)};
}

}  // namespace hcea
