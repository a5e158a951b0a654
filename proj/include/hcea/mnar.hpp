#pragma once

// Structural-one indicators implied by the data, and the missing-not-at-random
// scenarios that pin the indicators of the ambiguous records.

#include <array>
#include <map>
#include <string>
#include <vector>

#include "hcea/error.hpp"
#include "hcea/model_spec.hpp"
#include "hcea/trial_data.hpp"

namespace hcea {

inline constexpr int kSampledIndicator = -1;

/// Per-record structural indicator: 1, 0, or kSampledIndicator when the sampler
/// draws it from its full conditional.
struct StructuralAssignment {
  std::vector<StructuralStatus> status;
  std::vector<int> arm;
  std::vector<int> d;

  std::array<std::size_t, 2> ambiguous_counts() const {
    std::array<std::size_t, 2> n{0, 0};
    for (std::size_t i = 0; i < status.size(); ++i) {
      if (status[i] == StructuralStatus::Ambiguous) ++n[static_cast<std::size_t>(arm[i] - 1)];
    }
    return n;
  }
};

/// Indicators under MAR: known statuses fixed, ambiguous records sampled.
inline StructuralAssignment structural_assignment(const TrialDataset& data) {
  StructuralAssignment a;
  for (const auto& r : data.records) {
    const auto s = classify_structural_status(r.utilities);
    a.status.push_back(s);
    a.arm.push_back(r.arm);
    a.d.push_back(s == StructuralStatus::Known1 ? 1 : s == StructuralStatus::Known0 ? 0 : kSampledIndicator);
  }
  return a;
}

/// Applies a scenario to the ambiguous records only. Scenario values per arm
/// (control, intervention): MNAR1 (1, 1), MNAR2 (0, 0), MNAR3 (1, 0), MNAR4 (0, 1).
/// Custom pins individual ambiguous records by id; pinning a known record is an error.
inline StructuralAssignment apply_mnar_scenario(StructuralAssignment a, const std::vector<std::string>& ids,
                                                MnarScenario scenario,
                                                const std::map<std::string, int>& custom = {}) {
  if (ids.size() != a.status.size()) throw InputError("id list does not match the assignment");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
  for (std::size_t i = 0; i < a.status.size(); ++i) {
    if (a.status[i] != StructuralStatus::Ambiguous) continue;
    const bool control = a.arm[i] == kControlArm;
    switch (scenario) {
      case MnarScenario::MAR:
      case MnarScenario::Custom: a.d[i] = kSampledIndicator; break;
      case MnarScenario::MNAR1: a.d[i] = 1; break;
      case MnarScenario::MNAR2: a.d[i] = 0; break;
      case MnarScenario::MNAR3: a.d[i] = control ? 1 : 0; break;
      case MnarScenario::MNAR4: a.d[i] = control ? 0 : 1; break;
    }
  }
  if (scenario == MnarScenario::Custom) {
    for (const auto& [id, d] : custom) {
      auto it = index.find(id);
      if (it == index.end()) throw InputError("custom assignment names unknown record '" + id + "'");
      if (a.status[it->second] != StructuralStatus::Ambiguous) {
        throw InputError("custom assignment touches record '" + id + "' whose structural status is known");
      }
      if (d != 0 && d != 1) throw InputError("custom assignment for '" + id + "' must be 0 or 1");
      a.d[it->second] = d;
    }
  }
  return a;
}

inline StructuralAssignment apply_mnar_scenario(const TrialDataset& data, MnarScenario scenario,
                                                const std::map<std::string, int>& custom = {}) {
  std::vector<std::string> ids;
  ids.reserve(data.records.size());
  for (const auto& r : data.records) ids.push_back(r.id);
  return apply_mnar_scenario(structural_assignment(data), ids, scenario, custom);
}

}  // namespace hcea
