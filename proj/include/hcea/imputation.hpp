#pragma once

// Posterior summaries of imputed QALYs and costs.

#include <optional>
#include <string>
#include <vector>

#include "hcea/diagnostics.hpp"
#include "hcea/error.hpp"
#include "hcea/sampler.hpp"

namespace hcea {

struct ImputationSummary {
  std::string record_id;
  int arm = kControlArm;
  ImputedQuantity quantity = ImputedQuantity::Qaly;
  bool baseline_observed = true;
  double mean = 0.0;
  Interval hpd90;
  bool no_discernible_interval = false;  // HPD narrower than 1e-6
  std::optional<double> structural_one_probability;  // ambiguous hurdle records
  double max_draw = 0.0;
};

/// One row per imputed QALY and per imputed cost, baseline-observed records first.
inline std::vector<ImputationSummary> imputation_summaries(const PosteriorDraws& draws) {
  const auto& series = draws.imputed_series;
  std::vector<ImputationSummary> rows;
  if (series.empty()) return rows;
  for (const auto& ch : draws.chains) {
    if (ch.imputed.empty()) throw InputError("imputed draws were not stored (store_imputations = false)");
  }
  for (int pass = 0; pass < 2; ++pass) {
    const bool want_observed = pass == 0;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const auto& info = series[s];
      if (info.baseline_observed != want_observed) continue;
      if (info.quantity != ImputedQuantity::Qaly && info.quantity != ImputedQuantity::Cost) continue;
      const auto v = draws.imputed_pooled(s);
      ImputationSummary r;
      r.record_id = info.record_id;
      r.arm = info.arm;
      r.quantity = info.quantity;
      r.baseline_observed = info.baseline_observed;
      double sum = 0.0, mx = v.front();
      for (double x : v) {
        sum += x;
        mx = std::max(mx, x);
      }
      r.mean = sum / static_cast<double>(v.size());
      r.max_draw = mx;
      r.hpd90 = v.size() >= 50 ? hpd_interval(v, 0.90) : Interval{r.mean, r.mean};
      r.no_discernible_interval = r.hpd90.width() < 1e-6;
      if (info.quantity == ImputedQuantity::Qaly) {
        for (std::size_t t = 0; t < series.size(); ++t) {
          if (series[t].quantity == ImputedQuantity::StructuralOne && series[t].record_index == info.record_index) {
            const auto d = draws.imputed_pooled(t);
            double ones = 0.0;
            for (double x : d) ones += x;
            r.structural_one_probability = ones / static_cast<double>(d.size());
          }
        }
      }
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

}  // namespace hcea
