#pragma once

// Individual-level trial records, QALY / total-cost aggregation and
// structural-one classification.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcea/error.hpp"

namespace hcea {

inline constexpr int kControlArm = 1;
inline constexpr int kInterventionArm = 2;

/// Measurement times (months, baseline first at 0) and the time unit used to
/// turn intervals into fractions of a year.
class TimeGrid {
 public:
  TimeGrid() : TimeGrid({0.0, 3.0, 6.0, 12.0}, 12.0) {}

  TimeGrid(std::vector<double> times, double time_unit = 12.0)
      : times_(std::move(times)), unit_(time_unit) {
    if (times_.size() < 2) throw InputError("time grid needs a baseline and at least one follow-up");
    if (times_.front() != 0.0) throw InputError("time grid must start at 0 (baseline)");
    if (!(unit_ > 0.0)) throw InputError("time unit must be positive");
    for (std::size_t j = 1; j < times_.size(); ++j) {
      if (!(times_[j] > times_[j - 1])) throw InputError("time grid must be strictly increasing");
    }
  }

  const std::vector<double>& times() const { return times_; }
  double time_unit() const { return unit_; }

  /// Number of utility measurements, J + 1.
  std::size_t size() const { return times_.size(); }
  /// Number of follow-up intervals (and cost measurements), J.
  std::size_t intervals() const { return times_.size() - 1; }

  /// Interval weight for follow-up j in [1, J].
  double weight(std::size_t j) const { return (times_[j] - times_[j - 1]) / unit_; }

  std::vector<double> weights() const {
    std::vector<double> w(intervals());
    for (std::size_t j = 1; j < times_.size(); ++j) w[j - 1] = weight(j);
    return w;
  }

  /// Sum of the interval weights, i.e. the QALY of a perfect-health trajectory.
  double horizon() const { return (times_.back() - times_.front()) / unit_; }

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> times_;
  double unit_;
};

struct IndividualRecord {
  std::string id;
  int arm = kControlArm;
  std::vector<std::optional<double>> utilities;  // J + 1 values, baseline first
  std::vector<std::optional<double>> costs;      // J values, no baseline cost
  std::optional<double> age;
  std::optional<int> ethnicity;   // 1 = reference level
  std::optional<int> employment;  // 1 = reference level

  bool operator==(const IndividualRecord&) const = default;
};

struct TrialDataset {
  TimeGrid grid;
  std::vector<IndividualRecord> records;

  bool operator==(const TrialDataset&) const = default;
};

enum class StructuralStatus { Known1, Known0, Ambiguous };

inline const char* to_string(StructuralStatus s) {
  switch (s) {
    case StructuralStatus::Known1: return "known1";
    case StructuralStatus::Known0: return "known0";
    case StructuralStatus::Ambiguous: return "ambiguous";
  }
  return "?";
}

struct AggregatedOutcomes {
  std::optional<double> qaly;
  std::optional<double> total_cost;
  StructuralStatus structural_status = StructuralStatus::Ambiguous;
};

/// Area under the utility curve: sum over follow-ups of
/// (u_j + u_{j-1}) * weight_j / 2.
inline double compute_qaly(std::span<const double> utilities, const TimeGrid& grid) {
  if (utilities.size() != grid.size()) {
    throw InputError("utility trajectory has " + std::to_string(utilities.size()) +
                     " values, time grid has " + std::to_string(grid.size()));
  }
  for (double u : utilities) {
    if (!(u >= 0.0 && u <= 1.0)) throw InputError("utility " + std::to_string(u) + " outside [0, 1]");
  }
  double qaly = 0.0;
  for (std::size_t j = 1; j < utilities.size(); ++j) {
    qaly += (utilities[j] + utilities[j - 1]) * grid.weight(j) / 2.0;
  }
  return qaly;
}

inline double compute_total_cost(std::span<const double> costs) {
  double total = 0.0;
  for (double c : costs) {
    if (!(c >= 0.0)) throw InputError("negative or non-numeric cost " + std::to_string(c));
    total += c;
  }
  return total;
}

/// Known0 if any observed utility is below 1, Known1 if every utility is
/// observed and equal to 1, Ambiguous otherwise (all observed values are 1 and
/// at least one is missing, including the all-missing case).
inline StructuralStatus classify_structural_status(std::span<const std::optional<double>> utilities) {
  bool any_missing = false;
  for (const auto& u : utilities) {
    if (!u) {
      any_missing = true;
    } else if (*u < 1.0) {
      return StructuralStatus::Known0;
    }
  }
  return any_missing ? StructuralStatus::Ambiguous : StructuralStatus::Known1;
}

/// Checks the per-record invariants against the grid; throws InputError.
inline void validate_record(const IndividualRecord& r, const TimeGrid& grid) {
  const std::string who = "record '" + r.id + "'";
  if (r.arm != kControlArm && r.arm != kInterventionArm) {
    throw InputError(who + ": arm must be 1 or 2");
  }
  if (r.utilities.size() != grid.size()) {
    throw InputError(who + ": expected " + std::to_string(grid.size()) + " utilities");
  }
  if (r.costs.size() != grid.intervals()) {
    throw InputError(who + ": expected " + std::to_string(grid.intervals()) + " costs");
  }
  for (const auto& u : r.utilities) {
    if (u && !(*u >= 0.0 && *u <= 1.0)) throw InputError(who + ": utility outside [0, 1]");
  }
  for (const auto& c : r.costs) {
    if (c && !(*c >= 0.0)) throw InputError(who + ": negative cost");
  }
  if (r.ethnicity && *r.ethnicity < 1) throw InputError(who + ": ethnicity code must be >= 1");
  if (r.employment && *r.employment < 1) throw InputError(who + ": employment code must be >= 1");
}

inline AggregatedOutcomes aggregate(const IndividualRecord& record, const TimeGrid& grid) {
  validate_record(record, grid);
  AggregatedOutcomes out;
  out.structural_status = classify_structural_status(record.utilities);
  const bool utilities_complete =
      std::all_of(record.utilities.begin(), record.utilities.end(), [](const auto& u) { return u.has_value(); });
  if (utilities_complete) {
    std::vector<double> u(record.utilities.size());
    std::transform(record.utilities.begin(), record.utilities.end(), u.begin(), [](const auto& v) { return *v; });
    // A perfect-health trajectory maps to exactly the horizon.
    out.qaly = out.structural_status == StructuralStatus::Known1 ? grid.horizon() : compute_qaly(u, grid);
  }
  const bool costs_complete =
      std::all_of(record.costs.begin(), record.costs.end(), [](const auto& c) { return c.has_value(); });
  if (costs_complete) {
    std::vector<double> c(record.costs.size());
    std::transform(record.costs.begin(), record.costs.end(), c.begin(), [](const auto& v) { return *v; });
    out.total_cost = compute_total_cost(c);
  }
  return out;
}

inline std::vector<AggregatedOutcomes> aggregate(const TrialDataset& data) {
  std::vector<AggregatedOutcomes> out;
  out.reserve(data.records.size());
  for (const auto& r : data.records) out.push_back(aggregate(r, data.grid));
  return out;
}

inline void validate(const TrialDataset& data) {
  for (const auto& r : data.records) validate_record(r, data.grid);
}

/// Per-arm observed counts at each time point, in the layout of a
/// "number of observed cases" table.
struct ArmCounts {
  std::size_t n = 0;
  std::size_t baseline_observed = 0;
  std::vector<std::size_t> followup_observed;  // utility and cost both present, per follow-up
  std::size_t complete = 0;                    // every utility and cost present
  std::size_t ambiguous = 0;
  std::size_t known1 = 0;
};

inline std::array<ArmCounts, 2> observed_counts(const TrialDataset& data) {
  std::array<ArmCounts, 2> counts;
  for (auto& c : counts) c.followup_observed.assign(data.grid.intervals(), 0);
  for (const auto& r : data.records) {
    validate_record(r, data.grid);
    auto& c = counts[static_cast<std::size_t>(r.arm - 1)];
    ++c.n;
    if (r.utilities[0]) ++c.baseline_observed;
    bool complete = r.utilities[0].has_value();
    for (std::size_t j = 1; j < r.utilities.size(); ++j) {
      const bool obs = r.utilities[j].has_value() && r.costs[j - 1].has_value();
      if (obs) ++c.followup_observed[j - 1];
      complete = complete && r.utilities[j].has_value() && r.costs[j - 1].has_value();
    }
    if (complete) ++c.complete;
    const auto status = classify_structural_status(r.utilities);
    if (status == StructuralStatus::Ambiguous) ++c.ambiguous;
    if (status == StructuralStatus::Known1) ++c.known1;
  }
  return counts;
}

/// Records whose QALY and total cost are both observed.
inline TrialDataset complete_cases(const TrialDataset& data) {
  TrialDataset out{data.grid, {}};
  for (const auto& r : data.records) {
    const auto agg = aggregate(r, data.grid);
    if (agg.qaly && agg.total_cost) out.records.push_back(r);
  }
  return out;
}

}  // namespace hcea
