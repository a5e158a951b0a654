#pragma once

// Model configuration: family, boundary handling, structural-one covariates,
// prior table and missingness scenario. Serialises to and from JSON.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcea/error.hpp"
#include "hcea/math.hpp"

namespace hcea {

enum class Family { BivariateNormal, BetaGamma, Hurdle };

inline const char* short_name(Family f) {
  switch (f) {
    case Family::BivariateNormal: return "bn";
    case Family::BetaGamma: return "bg";
    case Family::Hurdle: return "hurdle";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  if (s == "bn" || s == "bivariate_normal") return Family::BivariateNormal;
  if (s == "bg" || s == "beta_gamma") return Family::BetaGamma;
  if (s == "hurdle") return Family::Hurdle;
  throw InputError("unknown model family '" + s + "' (expected bn, bg or hurdle)");
}

/// How the structural-one component of the hurdle is represented.
struct PointMassMode {
  enum class Kind { Exact, DegenerateBeta };
  Kind kind = Kind::Exact;
  double sigma1 = 1e-5;  // SD of the near-degenerate Beta, DegenerateBeta only

  static PointMassMode exact() { return {}; }
  static PointMassMode degenerate_beta(double sd) { return {Kind::DegenerateBeta, sd}; }
  bool is_exact() const { return kind == Kind::Exact; }
  bool operator==(const PointMassMode&) const = default;
};

/// Fixed mean of the near-degenerate ones component.
inline constexpr double kDegenerateOnesMean = 0.999999;

enum class MnarScenario { MAR, MNAR1, MNAR2, MNAR3, MNAR4, Custom };

inline const char* short_name(MnarScenario s) {
  switch (s) {
    case MnarScenario::MAR: return "mar";
    case MnarScenario::MNAR1: return "mnar1";
    case MnarScenario::MNAR2: return "mnar2";
    case MnarScenario::MNAR3: return "mnar3";
    case MnarScenario::MNAR4: return "mnar4";
    case MnarScenario::Custom: return "custom";
  }
  return "?";
}

inline MnarScenario parse_scenario(const std::string& s) {
  for (auto sc : {MnarScenario::MAR, MnarScenario::MNAR1, MnarScenario::MNAR2, MnarScenario::MNAR3,
                  MnarScenario::MNAR4, MnarScenario::Custom}) {
    if (s == short_name(sc)) return sc;
  }
  throw InputError("unknown missingness scenario '" + s + "' (expected mar, mnar1..mnar4)");
}

/// One prior density. Parameters by family:
///   Normal(a = mean, b = sd), Logistic(a = location, b = scale),
///   Uniform(a = lower, b = upper), HalfCauchy(b = scale),
///   BetaSdBound: Uniform(0, sqrt(mu (1 - mu))) for a Beta standard deviation.
struct Prior {
  enum class Kind { Normal, Logistic, Uniform, HalfCauchy, BetaSdBound };
  Kind kind = Kind::Normal;
  double a = 0.0;
  double b = 1.0;

  static Prior normal(double mean, double sd) { return {Kind::Normal, mean, sd}; }
  static Prior logistic(double loc, double scale) { return {Kind::Logistic, loc, scale}; }
  static Prior uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static Prior half_cauchy(double scale) { return {Kind::HalfCauchy, 0.0, scale}; }
  static Prior beta_sd_bound() { return {Kind::BetaSdBound, 0.0, 0.0}; }

  /// Log-density at x; `beta_mean` is only used by BetaSdBound.
  double log_density(double x, double beta_mean = 0.5) const {
    switch (kind) {
      case Kind::Normal: return math::normal_lpdf(x, a, b);
      case Kind::Logistic: return math::logistic_lpdf(x, a, b);
      case Kind::Uniform: return math::uniform_lpdf(x, a, b);
      case Kind::HalfCauchy: return math::half_cauchy_lpdf(x, b);
      case Kind::BetaSdBound: {
        const double v = beta_mean * (1.0 - beta_mean);
        if (!(v > 0.0)) return math::kNegInf;
        return math::uniform_lpdf(x, 0.0, std::sqrt(v));
      }
    }
    return math::kNegInf;
  }

  bool operator==(const Prior&) const = default;
};

/// Regression coefficients default to Normal with precision 1e-5.
inline constexpr double kVagueCoefficientSd = 316.22776601683796;  // 1 / sqrt(1e-5)

/// Prior table keyed by parameter group name. Recognised names:
/// alpha0 alpha1 sigma_e beta0 beta1 sigma_c delta0 sigma_u
/// gamma0 gamma1 gamma2 gamma3 gamma4 eta0 eta1 eta2 eta3
class PriorConfig {
 public:
  PriorConfig() = default;

  static const std::vector<std::string>& names() {
    static const std::vector<std::string> n{"alpha0", "alpha1", "sigma_e", "beta0",  "beta1",  "sigma_c",
                                            "delta0", "sigma_u", "gamma0", "gamma1", "gamma2", "gamma3",
                                            "gamma4", "eta0",    "eta1",   "eta2",   "eta3"};
    return n;
  }

  /// Default prior for `name` under `family`.
  static Prior default_for(const std::string& name, Family family) {
    const bool beta_like = family != Family::BivariateNormal;
    if (name == "sigma_c") return Prior::uniform(0.0, 1000.0);
    if (name == "sigma_e" || name == "sigma_u") {
      return beta_like ? Prior::beta_sd_bound() : Prior::uniform(0.0, 10.0);
    }
    if (name == "gamma0" || name == "eta0") return Prior::logistic(0.0, 1.0);
    return Prior::normal(0.0, kVagueCoefficientSd);
  }

  Prior get(const std::string& name, Family family) const {
    auto it = overrides_.find(name);
    return it == overrides_.end() ? default_for(name, family) : it->second;
  }

  void set(const std::string& name, Prior p) {
    bool known = false;
    for (const auto& n : names()) known = known || n == name;
    if (!known) throw InputError("unknown prior name '" + name + "'");
    overrides_[name] = p;
  }

  const std::map<std::string, Prior>& overrides() const { return overrides_; }
  bool operator==(const PriorConfig&) const = default;

 private:
  std::map<std::string, Prior> overrides_;
};

/// Which terms enter the logistic predictor of the QALY structural ones.
struct StructuralCovariates {
  bool baseline_utility = false;
  bool age = true;
  bool ethnicity = true;
  bool employment = true;
  bool operator==(const StructuralCovariates&) const = default;
};

/// Which terms enter the logistic predictor of the baseline-utility ones.
struct BaselineCovariates {
  bool age = true;
  bool ethnicity = true;
  bool employment = true;
  bool operator==(const BaselineCovariates&) const = default;
};

struct ModelSpec {
  Family family = Family::Hurdle;
  double epsilon = 1e-4;
  PriorConfig priors;
  StructuralCovariates hurdle_covariates;
  BaselineCovariates baseline_covariates;
  PointMassMode point_mass;
  MnarScenario scenario = MnarScenario::MAR;
  std::map<std::string, int> custom_assignment;  // record id -> d, Custom scenario only

  bool operator==(const ModelSpec&) const = default;
};

inline void validate(const ModelSpec& spec) {
  if (!(spec.epsilon > 0.0 && spec.epsilon < 0.5)) throw InputError("epsilon must lie in (0, 0.5)");
  if (!spec.point_mass.is_exact()) {
    const double s = spec.point_mass.sigma1;
    if (!(s > 0.0 && s <= 1e-3)) throw InputError("sigma1 must lie in (0, 1e-3]");
    if (!math::beta_shape_from_mean_sd(kDegenerateOnesMean, s).valid()) {
      throw InputError("sigma1 too large for a Beta with mean 0.999999 (needs sigma1^2 < mean (1 - mean))");
    }
  }
  if (spec.scenario != MnarScenario::MAR && spec.family != Family::Hurdle) {
    throw InputError("missingness scenarios other than MAR are defined for the hurdle family only");
  }
  for (const auto& [id, d] : spec.custom_assignment) {
    if (d != 0 && d != 1) throw InputError("custom assignment for '" + id + "' must be 0 or 1");
  }
}

// --- JSON ------------------------------------------------------------------

inline nlohmann::json prior_to_json(const Prior& p) {
  switch (p.kind) {
    case Prior::Kind::Normal: return {{"family", "normal"}, {"mean", p.a}, {"sd", p.b}};
    case Prior::Kind::Logistic: return {{"family", "logistic"}, {"location", p.a}, {"scale", p.b}};
    case Prior::Kind::Uniform: return {{"family", "uniform"}, {"lower", p.a}, {"upper", p.b}};
    case Prior::Kind::HalfCauchy: return {{"family", "half_cauchy"}, {"scale", p.b}};
    case Prior::Kind::BetaSdBound: return {{"family", "beta_sd_bound"}};
  }
  return {};
}

inline Prior prior_from_json(const nlohmann::json& j) {
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "normal") {
    if (j.contains("precision")) return Prior::normal(j.value("mean", 0.0), 1.0 / std::sqrt(j.at("precision").get<double>()));
    return Prior::normal(j.value("mean", 0.0), j.at("sd").get<double>());
  }
  if (fam == "logistic") return Prior::logistic(j.value("location", 0.0), j.value("scale", 1.0));
  if (fam == "uniform") return Prior::uniform(j.value("lower", 0.0), j.at("upper").get<double>());
  if (fam == "half_cauchy") return Prior::half_cauchy(j.value("scale", 2.5));
  if (fam == "beta_sd_bound") return Prior::beta_sd_bound();
  throw InputError("unknown prior family '" + fam + "'");
}

inline nlohmann::json to_json(const ModelSpec& s) {
  nlohmann::json priors = nlohmann::json::object();
  for (const auto& [name, p] : s.priors.overrides()) priors[name] = prior_to_json(p);
  nlohmann::json pm = s.point_mass.is_exact()
                          ? nlohmann::json{{"mode", "exact"}}
                          : nlohmann::json{{"mode", "degenerate_beta"}, {"sigma1", s.point_mass.sigma1}};
  nlohmann::json j{{"family", short_name(s.family)},
                   {"epsilon", s.epsilon},
                   {"point_mass_mode", pm},
                   {"mnar_scenario", short_name(s.scenario)},
                   {"hurdle_covariates",
                    {{"baseline_utility", s.hurdle_covariates.baseline_utility},
                     {"age", s.hurdle_covariates.age},
                     {"ethnicity", s.hurdle_covariates.ethnicity},
                     {"employment", s.hurdle_covariates.employment}}},
                   {"baseline_covariates",
                    {{"age", s.baseline_covariates.age},
                     {"ethnicity", s.baseline_covariates.ethnicity},
                     {"employment", s.baseline_covariates.employment}}},
                   {"priors", priors}};
  if (s.scenario == MnarScenario::Custom) j["custom_assignment"] = s.custom_assignment;
  return j;
}

/// Missing keys take their defaults.
inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  try {
    if (j.contains("family")) s.family = parse_family(j.at("family").get<std::string>());
    s.epsilon = j.value("epsilon", s.epsilon);
    if (j.contains("point_mass_mode")) {
      const auto& pm = j.at("point_mass_mode");
      const std::string mode = pm.is_string() ? pm.get<std::string>() : pm.value("mode", std::string("exact"));
      if (mode == "exact") {
        s.point_mass = PointMassMode::exact();
      } else if (mode == "degenerate_beta") {
        s.point_mass = PointMassMode::degenerate_beta(pm.is_object() ? pm.value("sigma1", 1e-5) : 1e-5);
      } else {
        throw InputError("unknown point_mass_mode '" + mode + "'");
      }
    }
    if (j.contains("mnar_scenario")) s.scenario = parse_scenario(j.at("mnar_scenario").get<std::string>());
    if (j.contains("custom_assignment")) {
      s.custom_assignment = j.at("custom_assignment").get<std::map<std::string, int>>();
    }
    if (j.contains("hurdle_covariates")) {
      const auto& h = j.at("hurdle_covariates");
      s.hurdle_covariates.baseline_utility = h.value("baseline_utility", false);
      s.hurdle_covariates.age = h.value("age", true);
      s.hurdle_covariates.ethnicity = h.value("ethnicity", true);
      s.hurdle_covariates.employment = h.value("employment", true);
    }
    if (j.contains("baseline_covariates")) {
      const auto& b = j.at("baseline_covariates");
      s.baseline_covariates.age = b.value("age", true);
      s.baseline_covariates.ethnicity = b.value("ethnicity", true);
      s.baseline_covariates.employment = b.value("employment", true);
    }
    if (j.contains("priors")) {
      for (const auto& [name, p] : j.at("priors").items()) s.priors.set(name, prior_from_json(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model spec: ") + e.what());
  }
  validate(s);
  return s;
}

}  // namespace hcea
