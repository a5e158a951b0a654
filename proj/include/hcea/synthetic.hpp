#pragma once

// Synthetic two-arm trials drawn from the hurdle data-generating process:
// Bernoulli structural ones, Beta non-one QALYs, Gamma costs conditional on
// QALYs, and a baseline-utility hurdle. Utility trajectories are constructed
// so that their area under the curve reproduces the drawn QALY exactly.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcea/error.hpp"
#include "hcea/math.hpp"
#include "hcea/rng.hpp"
#include "hcea/trial_data.hpp"

namespace hcea {

struct ArmTruth {
  int n = 100;
  double pi_e = 0.35;             // probability of a structural one in the QALYs
  double mu_e_nonone = 0.75;      // Beta mean of the non-one QALYs
  double sigma_e_nonone = 0.10;   // Beta SD of the non-one QALYs
  double alpha1 = 0.0;            // logit-scale slope of non-one QALYs on centred baseline utility
  double mu_c = 200.0;            // marginal mean total cost
  double sigma_c = 100.0;         // Gamma SD at the marginal mean
  double beta1 = 0.5;             // log-scale slope of costs on (e - mu_e)
  double pi_u = 0.2;              // P(baseline utility = 1) among non-one QALYs
  double mu_u = 0.75;             // Beta mean of non-unit baseline utilities
  double sigma_u = 0.15;
};

enum class MissingMechanism { MCAR, MAR, MNAR };

struct MissingnessConfig {
  MissingMechanism mechanism = MissingMechanism::MCAR;
  std::array<double, 2> outcome_rate{0.0, 0.0};   // P(record has missing follow-up), per arm
  std::array<double, 2> baseline_rate{0.0, 0.0};  // P(baseline utility missing), per arm
  double followup_missing_prob = 0.5;  // per follow-up, given the record is incomplete
  bool whole_record = false;           // incomplete records lose every utility and cost
  double mar_slope_u0 = 0.0;           // log-odds per unit (u0 - 0.5)
  double mar_slope_age = 0.0;          // log-odds per SD of age
  double mnar_slope = 0.0;             // log-odds per unit (e - mu_e)
  double mnar_ones_shift = 0.0;        // extra log-odds for structural ones
};

struct SyntheticTrialConfig {
  std::uint64_t seed = 1;
  TimeGrid grid;
  std::array<ArmTruth, 2> arms;
  MissingnessConfig missingness;
  double age_mean = 30.0;
  double age_sd = 8.0;
  int ethnicity_levels = 3;
  int employment_levels = 3;

  /// Marginal mean QALY implied by the truth for arm index 0 or 1.
  double mu_e(std::size_t arm) const {
    const auto& a = arms[arm];
    return (1.0 - a.pi_e) * a.mu_e_nonone + a.pi_e;
  }
};

inline void validate(const SyntheticTrialConfig& cfg) {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError(std::string(what) + " must lie in [0, 1]");
  };
  if (std::abs(cfg.grid.horizon() - 1.0) > 1e-12) {
    throw InputError("synthetic trials need a time grid spanning exactly one time unit");
  }
  for (const auto& a : cfg.arms) {
    if (a.n < 2) throw InputError("per-arm sample size must be at least 2");
    prob(a.pi_e, "pi_e");
    prob(a.pi_u, "pi_u");
    if (!(a.mu_e_nonone > 0.0 && a.mu_e_nonone < 1.0)) throw InputError("mu_e_nonone must lie in (0, 1)");
    if (!math::beta_shape_from_mean_sd(a.mu_e_nonone, a.sigma_e_nonone).valid()) {
      throw InputError("sigma_e_nonone too large for mu_e_nonone");
    }
    if (!(a.mu_u > 0.0 && a.mu_u < 1.0) || !math::beta_shape_from_mean_sd(a.mu_u, a.sigma_u).valid()) {
      throw InputError("invalid baseline utility mean/SD");
    }
    if (!(a.mu_c > 0.0) || !(a.sigma_c > 0.0)) throw InputError("cost mean and SD must be positive");
  }
  for (int t = 0; t < 2; ++t) {
    prob(cfg.missingness.outcome_rate[static_cast<std::size_t>(t)], "outcome missingness rate");
    prob(cfg.missingness.baseline_rate[static_cast<std::size_t>(t)], "baseline missingness rate");
  }
  prob(cfg.missingness.followup_missing_prob, "followup_missing_prob");
  if (cfg.ethnicity_levels < 1 || cfg.employment_levels < 1) throw InputError("need at least one level");
}

namespace synthetic_detail {

inline double missing_probability(double rate, double logit_shift) {
  if (rate <= 0.0) return 0.0;
  if (rate >= 1.0) return 1.0;
  return math::expit(math::logit(rate) + logit_shift);
}

}  // namespace synthetic_detail

/// Per-record truth retained alongside the generated data (for tests).
struct SyntheticTruth {
  std::vector<double> qaly;
  std::vector<double> total_cost;
  std::vector<int> structural_one;
};

inline TrialDataset generate_synthetic_trial(const SyntheticTrialConfig& cfg, SyntheticTruth* truth = nullptr) {
  validate(cfg);
  Rng rng(cfg.seed);
  TrialDataset data{cfg.grid, {}};
  const std::size_t J = cfg.grid.intervals();
  const double w1 = cfg.grid.weight(1);
  const auto& miss = cfg.missingness;
  if (truth) *truth = {};

  for (int t = 0; t < 2; ++t) {
    const ArmTruth& a = cfg.arms[static_cast<std::size_t>(t)];
    const auto e_shape = math::beta_shape_from_mean_sd(a.mu_e_nonone, a.sigma_e_nonone);
    const auto u_shape = math::beta_shape_from_mean_sd(a.mu_u, a.sigma_u);
    const double mu_e = cfg.mu_e(static_cast<std::size_t>(t));
    const double baseline_mean = a.pi_e + (1.0 - a.pi_e) * (a.pi_u + (1.0 - a.pi_u) * a.mu_u);

    for (int i = 0; i < a.n; ++i) {
      IndividualRecord r;
      r.id = (t == 0 ? "c" : "t") + std::to_string(i + 1);
      r.arm = t + 1;
      const double age = draw::normal(rng, cfg.age_mean, cfg.age_sd);
      r.age = std::round(std::max(16.0, age) * 10.0) / 10.0;
      r.ethnicity = 1 + static_cast<int>(draw::uniform01(rng) * cfg.ethnicity_levels);
      r.employment = 1 + static_cast<int>(draw::uniform01(rng) * cfg.employment_levels);

      const bool one = draw::bernoulli(rng, a.pi_e);
      double u0 = 1.0;
      double e = 1.0;
      std::vector<double> u(J + 1, 1.0);
      if (!one) {
        auto draw_u0 = [&] { return draw::bernoulli(rng, a.pi_u) ? 1.0 : draw::beta(rng, u_shape.a, u_shape.b); };
        u0 = draw_u0();
        const double phi = math::expit(math::logit(a.mu_e_nonone) + a.alpha1 * (u0 - baseline_mean));
        const auto shape = math::beta_shape_from_mean_sd(phi, a.sigma_e_nonone);
        e = draw::beta(rng, shape.a, shape.b);
        // Follow-up utilities share one level v so that the AUC equals e:
        // e = u0 w1 / 2 + v (1 - w1 / 2). Redraw the baseline when v leaves [0, 1).
        double v = (e - u0 * w1 / 2.0) / (1.0 - w1 / 2.0);
        for (int attempt = 0; attempt < 1000 && !(v >= 0.0 && v < 1.0); ++attempt) {
          u0 = draw_u0();
          v = (e - u0 * w1 / 2.0) / (1.0 - w1 / 2.0);
        }
        if (!(v >= 0.0 && v < 1.0)) {
          u0 = a.mu_u;
          e = e_shape.a / e_shape.scale;
          v = (e - u0 * w1 / 2.0) / (1.0 - w1 / 2.0);
        }
        u[0] = u0;
        for (std::size_t j = 1; j <= J; ++j) u[j] = v;
        e = compute_qaly(u, cfg.grid);
      }

      const double phi_c = a.mu_c * std::exp(a.beta1 * (e - mu_e));
      const auto g = math::gamma_from_mean_sd(phi_c, a.sigma_c);
      const double total = draw::gamma(rng, g.shape, g.rate);
      // Split the total across follow-ups with flat Dirichlet proportions.
      std::vector<double> parts(J);
      double psum = 0.0;
      for (auto& p : parts) {
        p = draw::gamma(rng, 1.0, 1.0);
        psum += p;
      }
      for (std::size_t j = 0; j < J; ++j) r.costs.emplace_back(total * parts[j] / psum);
      for (double uj : u) r.utilities.emplace_back(uj);

      // Missingness
      double shift = 0.0;
      if (miss.mechanism != MissingMechanism::MCAR) {
        shift += miss.mar_slope_u0 * (u0 - 0.5) + miss.mar_slope_age * (age - cfg.age_mean) / cfg.age_sd;
      }
      if (miss.mechanism == MissingMechanism::MNAR) {
        shift += miss.mnar_slope * (e - mu_e) + (one ? miss.mnar_ones_shift : 0.0);
      }
      const double p_out = synthetic_detail::missing_probability(miss.outcome_rate[static_cast<std::size_t>(t)], shift);
      if (draw::bernoulli(rng, p_out)) {
        std::vector<bool> gone(J, true);
        if (!miss.whole_record) {
          bool any = false;
          while (!any) {
            for (std::size_t j = 0; j < J; ++j) {
              gone[j] = draw::bernoulli(rng, miss.followup_missing_prob);
              any = any || gone[j];
            }
          }
        }
        for (std::size_t j = 0; j < J; ++j) {
          if (gone[j]) {
            r.utilities[j + 1].reset();
            r.costs[j].reset();
          }
        }
        if (miss.whole_record) r.utilities[0].reset();
      }
      if (draw::bernoulli(rng, miss.baseline_rate[static_cast<std::size_t>(t)])) r.utilities[0].reset();

      if (truth) {
        truth->qaly.push_back(e);
        truth->total_cost.push_back(total);
        truth->structural_one.push_back(one ? 1 : 0);
      }
      data.records.push_back(std::move(r));
    }
  }
  return data;
}

// JSON form of the generator configuration (all keys optional, defaults above).

inline void to_json(nlohmann::json& j, const ArmTruth& a) {
  j = {{"n", a.n},           {"pi_e", a.pi_e},       {"mu_e_nonone", a.mu_e_nonone},
       {"sigma_e_nonone", a.sigma_e_nonone},       {"alpha1", a.alpha1},
       {"mu_c", a.mu_c},     {"sigma_c", a.sigma_c}, {"beta1", a.beta1},
       {"pi_u", a.pi_u},     {"mu_u", a.mu_u},       {"sigma_u", a.sigma_u}};
}

inline void from_json(const nlohmann::json& j, ArmTruth& a) {
  a.n = j.value("n", a.n);
  a.pi_e = j.value("pi_e", a.pi_e);
  a.mu_e_nonone = j.value("mu_e_nonone", a.mu_e_nonone);
  a.sigma_e_nonone = j.value("sigma_e_nonone", a.sigma_e_nonone);
  a.alpha1 = j.value("alpha1", a.alpha1);
  a.mu_c = j.value("mu_c", a.mu_c);
  a.sigma_c = j.value("sigma_c", a.sigma_c);
  a.beta1 = j.value("beta1", a.beta1);
  a.pi_u = j.value("pi_u", a.pi_u);
  a.mu_u = j.value("mu_u", a.mu_u);
  a.sigma_u = j.value("sigma_u", a.sigma_u);
}

NLOHMANN_JSON_SERIALIZE_ENUM(MissingMechanism, {{MissingMechanism::MCAR, "mcar"},
                                                {MissingMechanism::MAR, "mar"},
                                                {MissingMechanism::MNAR, "mnar"}})

inline void to_json(nlohmann::json& j, const MissingnessConfig& m) {
  j = {{"mechanism", m.mechanism},
       {"outcome_rate", m.outcome_rate},
       {"baseline_rate", m.baseline_rate},
       {"followup_missing_prob", m.followup_missing_prob},
       {"whole_record", m.whole_record},
       {"mar_slope_u0", m.mar_slope_u0},
       {"mar_slope_age", m.mar_slope_age},
       {"mnar_slope", m.mnar_slope},
       {"mnar_ones_shift", m.mnar_ones_shift}};
}

inline void from_json(const nlohmann::json& j, MissingnessConfig& m) {
  m.mechanism = j.value("mechanism", m.mechanism);
  m.outcome_rate = j.value("outcome_rate", m.outcome_rate);
  m.baseline_rate = j.value("baseline_rate", m.baseline_rate);
  m.followup_missing_prob = j.value("followup_missing_prob", m.followup_missing_prob);
  m.whole_record = j.value("whole_record", m.whole_record);
  m.mar_slope_u0 = j.value("mar_slope_u0", m.mar_slope_u0);
  m.mar_slope_age = j.value("mar_slope_age", m.mar_slope_age);
  m.mnar_slope = j.value("mnar_slope", m.mnar_slope);
  m.mnar_ones_shift = j.value("mnar_ones_shift", m.mnar_ones_shift);
}

inline nlohmann::json to_json(const SyntheticTrialConfig& c) {
  return {{"seed", c.seed},
          {"times_months", c.grid.times()},
          {"time_unit", c.grid.time_unit()},
          {"control", c.arms[0]},
          {"intervention", c.arms[1]},
          {"missingness", c.missingness},
          {"age_mean", c.age_mean},
          {"age_sd", c.age_sd},
          {"ethnicity_levels", c.ethnicity_levels},
          {"employment_levels", c.employment_levels}};
}

inline SyntheticTrialConfig synthetic_config_from_json(const nlohmann::json& j) {
  SyntheticTrialConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("times_months")) {
      c.grid = TimeGrid(j.at("times_months").get<std::vector<double>>(), j.value("time_unit", 12.0));
    }
    if (j.contains("control")) c.arms[0] = j.at("control").get<ArmTruth>();
    if (j.contains("intervention")) c.arms[1] = j.at("intervention").get<ArmTruth>();
    if (j.contains("missingness")) c.missingness = j.at("missingness").get<MissingnessConfig>();
    c.age_mean = j.value("age_mean", c.age_mean);
    c.age_sd = j.value("age_sd", c.age_sd);
    c.ethnicity_levels = j.value("ethnicity_levels", c.ethnicity_levels);
    c.employment_levels = j.value("employment_levels", c.employment_levels);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("synthetic config: ") + e.what());
  }
  validate(c);
  return c;
}

/// Trial shaped like a small pilot: 75 / 84 participants, baseline utilities
/// observed for about 96% / 86%, and a third to a half of follow-up missing.
inline SyntheticTrialConfig pilot_shaped_config(std::uint64_t seed = 1) {
  SyntheticTrialConfig c;
  c.seed = seed;
  c.arms[0].n = 75;
  c.arms[1].n = 84;
  c.arms[0].pi_e = 0.33;
  c.arms[1].pi_e = 0.42;
  c.arms[0].mu_c = 250.0;
  c.arms[1].mu_c = 220.0;
  c.missingness.mechanism = MissingMechanism::MCAR;
  c.missingness.outcome_rate = {0.55, 0.75};
  c.missingness.baseline_rate = {0.04, 0.14};
  c.missingness.followup_missing_prob = 0.6;
  return c;
}

}  // namespace hcea
