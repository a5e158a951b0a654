#pragma once

// One treatment arm of a joint model: prepared data, latent state (imputed
// outcomes, baseline utilities and structural indicators), module log-density
// sums, priors, and the full-conditional updates for the latent values.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "hcea/error.hpp"
#include "hcea/likelihood.hpp"
#include "hcea/math.hpp"
#include "hcea/mnar.hpp"
#include "hcea/model_spec.hpp"
#include "hcea/rng.hpp"
#include "hcea/trial_data.hpp"

namespace hcea {

/// Model modules. Parameter blocks declare which modules they touch so that
/// only those sums are recomputed.
enum Module : unsigned {
  kEffectModule = 1u,
  kCostModule = 2u,
  kBaselineModule = 4u,
  kStructuralModule = 8u,
  kBaselineStructuralModule = 16u,
};
inline constexpr std::size_t kModuleCount = 5;

/// Positions of the fixed parameters in an arm's flat parameter vector. The
/// hurdle logistic coefficients follow: gamma, then eta.
namespace pidx {
inline constexpr std::size_t alpha0 = 0, alpha1 = 1, sigma_e = 2, beta0 = 3, beta1 = 4, sigma_c = 5, delta0 = 6,
                             sigma_u = 7, fixed_count = 8;
}

struct ArmLayout {
  Family family = Family::Hurdle;
  bool gamma_u0 = false;
  bool gamma_age = false;
  int gamma_eth = 0;  // non-reference levels
  int gamma_emp = 0;
  bool eta_age = false;
  int eta_eth = 0;
  int eta_emp = 0;

  bool hurdle() const { return family == Family::Hurdle; }
  std::size_t n_gamma() const {
    return hurdle() ? 1 + gamma_u0 + gamma_age + static_cast<std::size_t>(gamma_eth + gamma_emp) : 0;
  }
  std::size_t n_eta() const {
    return hurdle() ? 1 + eta_age + static_cast<std::size_t>(eta_eth + eta_emp) : 0;
  }
  std::size_t gamma_offset() const { return pidx::fixed_count; }
  std::size_t eta_offset() const { return pidx::fixed_count + n_gamma(); }
  std::size_t size() const { return pidx::fixed_count + n_gamma() + n_eta(); }
};

/// Latent and observed values of every record in one arm, in the forms the
/// modules consume.
struct ArmLatent {
  std::vector<double> e_raw, e_eff, log_e, log1m_e, e_cost;
  std::vector<double> c_eff, log_c;
  std::vector<double> u0_raw, u0_eff, log_u0, log1m_u0;
  std::vector<int> d, du;
};

struct HurdleParams {
  std::vector<double> gamma;
  std::vector<double> eta;
  double delta0 = 0.0;
  double sigma_u = 0.1;
  double ones_mean_logit = 0.0;
  double ones_sd = 0.0;
};

class ArmModel {
 public:
  ArmModel(const TrialDataset& data, const StructuralAssignment& assignment, const ModelSpec& spec, int arm)
      : arm_(arm), family_(spec.family), epsilon_(spec.epsilon), ones_(degenerate_ones_component(spec.point_mass)) {
    layout_.family = spec.family;
    const auto& grid = data.grid;
    double u0_sum = 0.0, age_sum = 0.0;
    std::size_t u0_n = 0, age_n = 0;
    int eth_max = 1, emp_max = 1;
    for (std::size_t r = 0; r < data.records.size(); ++r) {
      const auto& rec = data.records[r];
      if (rec.arm != arm) continue;
      record_.push_back(r);
      ids_.push_back(rec.id);
      const auto agg = aggregate(rec, grid);
      e_obs_.push_back(agg.qaly.has_value());
      e_value_.push_back(agg.qaly.value_or(0.0));
      c_obs_.push_back(agg.total_cost.has_value());
      c_value_.push_back(agg.total_cost.value_or(0.0));
      u0_obs_.push_back(rec.utilities[0].has_value());
      u0_value_.push_back(rec.utilities[0].value_or(0.0));
      d_fixed_.push_back(spec.family == Family::Hurdle ? assignment.d[r] : 0);
      if (rec.utilities[0]) {
        u0_sum += *rec.utilities[0];
        ++u0_n;
      }
      if (rec.age) {
        age_sum += *rec.age;
        ++age_n;
      }
      age_raw_.push_back(rec.age);
      eth_.push_back(rec.ethnicity.value_or(1));
      emp_.push_back(rec.employment.value_or(1));
      eth_max = std::max(eth_max, eth_.back());
      emp_max = std::max(emp_max, emp_.back());
    }
    if (record_.empty()) throw InputError("arm " + std::to_string(arm) + " has no records");
    for (std::size_t i = 0; i < record_.size(); ++i) {
      const bool free_d = !layout_.hurdle() || d_fixed_[i] == kSampledIndicator;
      const bool outcome_missing = !e_obs_[i] && !c_obs_[i];
      unsigned m = 0u;
      if (outcome_missing) m = kEffectModule | kCostModule | (free_d ? kStructuralModule : 0u);
      if (outcome_missing && !u0_obs_[i]) m |= kBaselineModule | kBaselineStructuralModule;
      marginal_.push_back(m);
    }
    u0_center_ = u0_n ? u0_sum / static_cast<double>(u0_n) : 0.0;
    const double age_mean = age_n ? age_sum / static_cast<double>(age_n) : 0.0;
    for (const auto& a : age_raw_) age_c_.push_back(a ? *a - age_mean : 0.0);
    eth_levels_ = static_cast<std::size_t>(eth_max - 1);
    emp_levels_ = static_cast<std::size_t>(emp_max - 1);
    eth_dummy_ = centred_dummies(eth_, eth_levels_);
    emp_dummy_ = centred_dummies(emp_, emp_levels_);

    if (layout_.hurdle()) {
      const auto& hc = spec.hurdle_covariates;
      const auto& bc = spec.baseline_covariates;
      layout_.gamma_u0 = hc.baseline_utility;
      layout_.gamma_age = hc.age;
      layout_.gamma_eth = hc.ethnicity ? eth_max - 1 : 0;
      layout_.gamma_emp = hc.employment ? emp_max - 1 : 0;
      layout_.eta_age = bc.age;
      layout_.eta_eth = bc.ethnicity ? eth_max - 1 : 0;
      layout_.eta_emp = bc.employment ? emp_max - 1 : 0;
    }
    build_names_and_priors(spec);
    check_support();
  }

  int arm() const { return arm_; }
  Family family() const { return family_; }
  const ArmLayout& layout() const { return layout_; }
  const OnesComponent& ones() const { return ones_; }
  std::size_t n() const { return record_.size(); }
  std::size_t record_index(std::size_t i) const { return record_[i]; }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  bool e_observed(std::size_t i) const { return e_obs_[i]; }
  bool c_observed(std::size_t i) const { return c_obs_[i]; }
  bool u0_observed(std::size_t i) const { return u0_obs_[i]; }
  int d_fixed(std::size_t i) const { return d_fixed_[i]; }
  /// Modules whose terms for record i integrate to one over its missing values;
  /// those terms are left out of the parameter updates.
  unsigned marginalised(std::size_t i) const { return marginal_[i]; }
  double u0_center() const { return u0_center_; }

  /// Parameter names without the arm suffix, in flat-vector order.
  const std::vector<std::string>& parameter_names() const { return names_; }
  const std::vector<bool>& positive_parameters() const { return positive_; }

  // ---- derived quantities ------------------------------------------------

  double pi_e(const std::vector<double>& p) const {
    return layout_.hurdle() ? math::expit(p[layout_.gamma_offset()]) : 0.0;
  }
  double mu_e_nonone(const std::vector<double>& p) const {
    return family_ == Family::BivariateNormal ? p[pidx::alpha0] : math::expit(p[pidx::alpha0]);
  }
  double mu_e(const std::vector<double>& p) const {
    if (layout_.hurdle()) return marginal_mean_qalys(pi_e(p), mu_e_nonone(p));
    return mu_e_nonone(p);
  }
  double mu_c(const std::vector<double>& p) const {
    return family_ == Family::BivariateNormal ? p[pidx::beta0] : std::exp(p[pidx::beta0]);
  }

  EffectModelParams effect_params(const std::vector<double>& p) const {
    return {p[pidx::alpha0], p[pidx::alpha1], p[pidx::sigma_e]};
  }
  CostModelParams cost_params(const std::vector<double>& p) const {
    return {p[pidx::beta0], p[pidx::beta1], p[pidx::sigma_c]};
  }
  HurdleParams hurdle_params(const std::vector<double>& p) const {
    HurdleParams h;
    h.gamma.assign(p.begin() + static_cast<std::ptrdiff_t>(layout_.gamma_offset()),
                   p.begin() + static_cast<std::ptrdiff_t>(layout_.eta_offset()));
    h.eta.assign(p.begin() + static_cast<std::ptrdiff_t>(layout_.eta_offset()), p.end());
    h.delta0 = p[pidx::delta0];
    h.sigma_u = p[pidx::sigma_u];
    h.ones_mean_logit = ones_.mean_logit;
    h.ones_sd = ones_.sd;
    return h;
  }

  // ---- latent value setters -----------------------------------------------

  void set_e(ArmLatent& L, std::size_t i, double raw, int d) const {
    double eff = raw;
    L.d[i] = d;
    switch (family_) {
      case Family::BivariateNormal: break;
      case Family::BetaGamma: eff = raw >= 1.0 ? 1.0 - epsilon_ : raw <= 0.0 ? epsilon_ : raw; break;
      case Family::Hurdle:
        if (d == 1) {
          eff = ones_.exact ? 1.0 : (raw >= 1.0 ? kDegenerateOnesMean : raw);
        } else {
          eff = raw <= 0.0 ? epsilon_ : raw;
        }
        break;
    }
    L.e_raw[i] = raw;
    L.e_eff[i] = eff;
    const bool interior = eff > 0.0 && eff < 1.0;
    L.log_e[i] = interior ? std::log(eff) : math::kNegInf;
    L.log1m_e[i] = interior ? std::log1p(-eff) : math::kNegInf;
    L.e_cost[i] = family_ == Family::BetaGamma ? eff : raw;
  }

  void set_c(ArmLatent& L, std::size_t i, double raw) const {
    double eff = raw;
    if (family_ != Family::BivariateNormal && !(raw > 0.0)) eff = raw == 0.0 ? epsilon_ : raw;
    L.c_eff[i] = eff;
    L.log_c[i] = eff > 0.0 ? std::log(eff) : math::kNegInf;
  }

  void set_u0(ArmLatent& L, std::size_t i, double raw, int du) const {
    double eff = raw;
    L.du[i] = du;
    switch (family_) {
      case Family::BivariateNormal: break;
      case Family::BetaGamma: eff = raw >= 1.0 ? 1.0 - epsilon_ : raw <= 0.0 ? epsilon_ : raw; break;
      case Family::Hurdle:
        if (du == 1) {
          eff = ones_.exact ? 1.0 : (raw >= 1.0 ? kDegenerateOnesMean : raw);
        } else {
          eff = raw <= 0.0 ? epsilon_ : raw;
        }
        break;
    }
    L.u0_raw[i] = raw;
    L.u0_eff[i] = eff;
    const bool interior = eff > 0.0 && eff < 1.0;
    L.log_u0[i] = interior ? std::log(eff) : math::kNegInf;
    L.log1m_u0[i] = interior ? std::log1p(-eff) : math::kNegInf;
  }

  // ---- per-record terms ---------------------------------------------------

  double effect_term(const std::vector<double>& p, const ArmLatent& L, std::size_t i) const {
    const double lp = p[pidx::alpha0] + p[pidx::alpha1] * (L.u0_raw[i] - u0_center_);
    switch (family_) {
      case Family::BivariateNormal: return math::normal_lpdf(L.e_eff[i], lp, p[pidx::sigma_e]);
      case Family::Hurdle:
        if (L.d[i] == 1) return ones_term(L.log_e[i], L.log1m_e[i]);
        [[fallthrough]];
      case Family::BetaGamma:
        return kernel::effect_beta(L.log_e[i], L.log1m_e[i], math::expit(lp), p[pidx::sigma_e]);
    }
    return math::kNegInf;
  }

  double cost_term(const std::vector<double>& p, double mu_e, const ArmLatent& L, std::size_t i) const {
    if (family_ == Family::BivariateNormal) {
      return kernel::cost_normal(L.c_eff[i], L.e_cost[i], mu_e, p[pidx::beta0], p[pidx::beta1], p[pidx::sigma_c],
                                 p[pidx::sigma_e]);
    }
    return kernel::cost_gamma(L.c_eff[i], L.log_c[i], L.e_cost[i], mu_e, p[pidx::beta0], p[pidx::beta1],
                              p[pidx::sigma_c]);
  }

  double baseline_term(const std::vector<double>& p, const ArmLatent& L, std::size_t i) const {
    switch (family_) {
      case Family::BivariateNormal: return math::normal_lpdf(L.u0_eff[i], p[pidx::delta0], p[pidx::sigma_u]);
      case Family::Hurdle:
        if (L.du[i] == 1) return ones_term(L.log_u0[i], L.log1m_u0[i]);
        [[fallthrough]];
      case Family::BetaGamma:
        return kernel::effect_beta(L.log_u0[i], L.log1m_u0[i], math::expit(p[pidx::delta0]), p[pidx::sigma_u]);
    }
    return math::kNegInf;
  }

  double structural_predictor(const std::vector<double>& p, const ArmLatent& L, std::size_t i) const {
    std::size_t k = layout_.gamma_offset();
    double lp = p[k++];
    if (layout_.gamma_u0) lp += p[k++] * (L.u0_raw[i] - u0_center_);
    if (layout_.gamma_age) lp += p[k++] * age_c_[i];
    if (layout_.gamma_eth > 0) lp += dummy_terms(p, k, eth_dummy_, eth_levels_, i);
    if (layout_.gamma_emp > 0) lp += dummy_terms(p, k, emp_dummy_, emp_levels_, i);
    return lp;
  }

  double baseline_structural_predictor(const std::vector<double>& p, std::size_t i) const {
    std::size_t k = layout_.eta_offset();
    double lp = p[k++];
    if (layout_.eta_age) lp += p[k++] * age_c_[i];
    if (layout_.eta_eth > 0) lp += dummy_terms(p, k, eth_dummy_, eth_levels_, i);
    if (layout_.eta_emp > 0) lp += dummy_terms(p, k, emp_dummy_, emp_levels_, i);
    return lp;
  }

  double structural_term(const std::vector<double>& p, const ArmLatent& L, std::size_t i) const {
    return math::bernoulli_logit_lpmf(L.d[i] == 1, structural_predictor(p, L, i));
  }

  double module_sum(Module m, const std::vector<double>& p, const ArmLatent& L) const {
    double s = 0.0;
    const std::size_t n = this->n();
    auto skip = [&](std::size_t i) { return (marginal_[i] & m) != 0; };
    switch (m) {
      case kEffectModule:
        for (std::size_t i = 0; i < n; ++i) {
          if (!skip(i)) s += effect_term(p, L, i);
        }
        break;
      case kCostModule: {
        const double mu = mu_e(p);
        for (std::size_t i = 0; i < n; ++i) {
          if (!skip(i)) s += cost_term(p, mu, L, i);
        }
        break;
      }
      case kBaselineModule:
        for (std::size_t i = 0; i < n; ++i) {
          if (!skip(i)) s += baseline_term(p, L, i);
        }
        break;
      case kStructuralModule:
        if (!layout_.hurdle()) return 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!skip(i)) s += structural_term(p, L, i);
        }
        break;
      case kBaselineStructuralModule:
        if (!layout_.hurdle()) return 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!skip(i)) s += math::bernoulli_logit_lpmf(L.du[i] == 1, baseline_structural_predictor(p, i));
        }
        break;
    }
    return std::isnan(s) ? math::kNegInf : s;
  }

  double log_prior(const std::vector<double>& p) const {
    double lp = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      double beta_mean = 0.5;
      if (k == pidx::sigma_e) beta_mean = math::expit(p[pidx::alpha0]);
      if (k == pidx::sigma_u) beta_mean = math::expit(p[pidx::delta0]);
      lp += priors_[k].log_density(p[k], beta_mean);
    }
    return lp;
  }

  /// Log-Jacobian of sampling the positive parameters on the log scale.
  double log_jacobian(const std::vector<double>& p) const {
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (positive_[k]) s += std::log(p[k]);
    }
    return s;
  }

  /// Observed-data log-likelihood over the modules shared by every family:
  /// observed QALYs, observed total costs and observed baseline utilities.
  double observed_log_likelihood(const std::vector<double>& p, const ArmLatent& L) const {
    const double mu = mu_e(p);
    double s = 0.0;
    for (std::size_t i = 0; i < n(); ++i) {
      if (e_obs_[i]) s += effect_term(p, L, i);
      if (c_obs_[i]) s += cost_term(p, mu, L, i);
      if (u0_obs_[i]) s += baseline_term(p, L, i);
    }
    return s;
  }

  std::size_t observed_term_count() const {
    std::size_t k = 0;
    for (std::size_t i = 0; i < n(); ++i) k += e_obs_[i] + c_obs_[i] + u0_obs_[i];
    return k;
  }

  // ---- initial state ------------------------------------------------------

  ArmLatent initial_latent() const {
    ArmLatent L;
    const std::size_t n = this->n();
    for (auto* v : {&L.e_raw, &L.e_eff, &L.log_e, &L.log1m_e, &L.e_cost, &L.c_eff, &L.log_c, &L.u0_raw, &L.u0_eff,
                    &L.log_u0, &L.log1m_u0}) {
      v->assign(n, 0.0);
    }
    L.d.assign(n, 0);
    L.du.assign(n, 0);
    const auto stats = summary_stats();
    for (std::size_t i = 0; i < n; ++i) {
      if (u0_obs_[i]) {
        set_u0(L, i, u0_value_[i], layout_.hurdle() && u0_value_[i] >= 1.0 ? 1 : 0);
      } else {
        set_u0(L, i, stats.u0_mean, 0);
      }
      if (e_obs_[i]) {
        set_e(L, i, e_value_[i], d_fixed_[i] == 1 ? 1 : 0);
      } else if (layout_.hurdle() && d_fixed_[i] == 1) {
        set_e(L, i, ones_.exact ? 1.0 : kDegenerateOnesMean, 1);
      } else {
        set_e(L, i, stats.e_mean, 0);
      }
      set_c(L, i, c_obs_[i] ? c_value_[i] : stats.c_mean);
    }
    return L;
  }

  /// Intercepts at link-transformed observed means, slopes at zero, SDs at the
  /// observed SDs clipped into their prior support.
  std::vector<double> initial_params() const {
    const auto s = summary_stats();
    std::vector<double> p(layout_.size(), 0.0);
    const bool normal = family_ == Family::BivariateNormal;
    auto clip_sd = [](double sd, double mean, bool beta) {
      double v = std::max(sd, 1e-3);
      if (beta) v = std::min(v, 0.5 * std::sqrt(mean * (1.0 - mean)));
      return v;
    };
    p[pidx::alpha0] = normal ? s.e_mean : math::logit(s.e_mean);
    p[pidx::sigma_e] = clip_sd(s.e_sd, s.e_mean, !normal);
    p[pidx::beta0] = normal ? s.c_mean : std::log(s.c_mean);
    p[pidx::sigma_c] = std::max(s.c_sd, 1e-3 * std::max(1.0, std::abs(s.c_mean)));
    p[pidx::delta0] = normal ? s.u0_mean : math::logit(s.u0_mean);
    p[pidx::sigma_u] = clip_sd(s.u0_sd, s.u0_mean, !normal);
    for (std::size_t k : {pidx::sigma_e, pidx::sigma_c, pidx::sigma_u}) {
      const auto& pr = priors_[k];
      if (pr.kind == Prior::Kind::Uniform && !(p[k] > pr.a && p[k] < pr.b)) p[k] = 0.5 * (pr.a + pr.b);
    }
    if (layout_.hurdle()) {
      p[layout_.gamma_offset()] = math::logit(std::clamp(s.ones_fraction, 0.05, 0.95));
      p[layout_.eta_offset()] = math::logit(std::clamp(s.u0_ones_fraction, 0.05, 0.95));
    }
    return p;
  }

  /// Proposal scale hints on the sampling scale (log for positive parameters).
  std::vector<double> proposal_hints() const {
    const auto s = summary_stats();
    const double rn = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(s.n_e, 1)));
    const double rc = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(s.n_c, 1)));
    const double ru = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(s.n_u0, 1)));
    const bool normal = family_ == Family::BivariateNormal;
    std::vector<double> h(layout_.size(), 0.0);
    const double e_scale = normal ? std::max(s.e_sd, 1e-3) : 0.5;
    h[pidx::alpha0] = e_scale * rn;
    h[pidx::alpha1] = e_scale * rn / std::max(s.u0_sd, 0.05);
    h[pidx::sigma_e] = 0.7 * rn;
    const double c_scale = normal ? std::max(s.c_sd, 1e-3) : std::max(s.c_sd / std::max(s.c_mean, 1e-12), 0.05);
    h[pidx::beta0] = c_scale * rc;
    h[pidx::beta1] = c_scale * rc / std::max(s.e_sd, 0.02);
    h[pidx::sigma_c] = 0.7 * rc;
    h[pidx::delta0] = (normal ? std::max(s.u0_sd, 1e-3) : 0.5) * ru;
    h[pidx::sigma_u] = 0.7 * ru;
    const double rl = 2.5 / std::sqrt(static_cast<double>(n()));
    for (std::size_t k = pidx::fixed_count; k < h.size(); ++k) h[k] = rl;
    return h;
  }

  // ---- latent updates -----------------------------------------------------

  /// Missing baseline utilities: independence proposal from the baseline
  /// model, accepted on the effect and structural terms that depend on u0.
  void update_missing_u0(const std::vector<double>& p, ArmLatent& L, Rng& rng) const {
    for (std::size_t i = 0; i < n(); ++i) {
      if (u0_obs_[i]) continue;
      const double old_raw = L.u0_raw[i];
      const int old_du = L.du[i];
      const double before = u0_dependent_terms(p, L, i);
      int du = 0;
      const double raw = draw_baseline(p, i, rng, du);
      set_u0(L, i, raw, du);
      const double after = u0_dependent_terms(p, L, i);
      if (!(std::log(draw::uniform01(rng)) < after - before)) set_u0(L, i, old_raw, old_du);
    }
  }

  /// Missing QALYs together with unknown structural indicators: proposal from
  /// the structural and effect models, accepted on the cost term. Records
  /// with both outcomes missing draw (d, e, c) jointly and always accept.
  void update_missing_e(const std::vector<double>& p, ArmLatent& L, Rng& rng) const {
    const double mu = mu_e(p);
    for (std::size_t i = 0; i < n(); ++i) {
      if (e_obs_[i]) continue;
      int d = 0;
      if (layout_.hurdle()) {
        d = d_fixed_[i] >= 0 ? d_fixed_[i] : static_cast<int>(draw::bernoulli(rng, math::expit(structural_predictor(p, L, i))));
      }
      const double raw = draw_effect(p, L, i, d, rng);
      if (!c_obs_[i]) {
        set_e(L, i, raw, d);
        set_c(L, i, draw_cost(p, mu, L, i, rng));
        continue;
      }
      const double old_raw = L.e_raw[i];
      const int old_d = L.d[i];
      const double before = cost_term(p, mu, L, i);
      set_e(L, i, raw, d);
      const double after = cost_term(p, mu, L, i);
      if (!(std::log(draw::uniform01(rng)) < after - before)) set_e(L, i, old_raw, old_d);
    }
  }

  /// Missing costs given e, drawn exactly.
  void update_missing_c(const std::vector<double>& p, ArmLatent& L, Rng& rng) const {
    const double mu = mu_e(p);
    for (std::size_t i = 0; i < n(); ++i) {
      if (!c_obs_[i]) set_c(L, i, draw_cost(p, mu, L, i, rng));
    }
  }

 private:
  static std::vector<double> centred_dummies(const std::vector<int>& level, std::size_t columns) {
    const std::size_t n = level.size();
    std::vector<double> x(n * columns, 0.0);
    for (std::size_t l = 0; l < columns; ++l) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += level[i] == static_cast<int>(l) + 2 ? 1.0 : 0.0;
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) x[i * columns + l] = (level[i] == static_cast<int>(l) + 2 ? 1.0 : 0.0) - mean;
    }
    return x;
  }

  static double dummy_terms(const std::vector<double>& p, std::size_t& k, const std::vector<double>& x,
                            std::size_t columns, std::size_t i) {
    double s = 0.0;
    for (std::size_t l = 0; l < columns; ++l) s += p[k + l] * x[i * columns + l];
    k += columns;
    return s;
  }

  struct Stats {
    double e_mean = 0.5, e_sd = 0.1, c_mean = 1.0, c_sd = 1.0, u0_mean = 0.5, u0_sd = 0.1;
    double ones_fraction = 0.5, u0_ones_fraction = 0.5;
    std::size_t n_e = 0, n_c = 0, n_u0 = 0;
  };

  static void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
    if (v.empty()) return;
    mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) return;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }

  /// Summaries of the observed values in the form each module models them.
  Stats summary_stats() const {
    Stats s;
    std::vector<double> e, c, u;
    std::size_t known = 0, ones = 0, u_ones = 0;
    for (std::size_t i = 0; i < n(); ++i) {
      if (e_obs_[i]) {
        const bool one = layout_.hurdle() && d_fixed_[i] == 1;
        if (!one) e.push_back(family_ == Family::BivariateNormal ? e_value_[i] : std::clamp(e_value_[i], epsilon_, 1.0 - epsilon_));
      }
      if (d_fixed_[i] >= 0) {
        ++known;
        ones += d_fixed_[i] == 1;
      }
      if (c_obs_[i]) c.push_back(family_ == Family::BivariateNormal ? c_value_[i] : std::max(c_value_[i], epsilon_));
      if (u0_obs_[i]) {
        const bool one = layout_.hurdle() && u0_value_[i] >= 1.0;
        u_ones += one;
        if (!one) u.push_back(family_ == Family::BivariateNormal ? u0_value_[i] : std::clamp(u0_value_[i], epsilon_, 1.0 - epsilon_));
      }
    }
    s.n_e = e.size();
    s.n_c = c.size();
    s.n_u0 = u.size();
    mean_sd(e, s.e_mean, s.e_sd);
    mean_sd(c, s.c_mean, s.c_sd);
    mean_sd(u, s.u0_mean, s.u0_sd);
    if (family_ != Family::BivariateNormal) {
      s.e_mean = std::clamp(s.e_mean, 0.01, 0.99);
      s.u0_mean = std::clamp(s.u0_mean, 0.01, 0.99);
      s.c_mean = std::max(s.c_mean, 1e-6);
    }
    if (known) s.ones_fraction = static_cast<double>(ones) / static_cast<double>(known);
    std::size_t u_total = u.size() + u_ones;
    if (u_total) s.u0_ones_fraction = static_cast<double>(u_ones) / static_cast<double>(u_total);
    return s;
  }

  double ones_term(double log_x, double log1m_x) const {
    if (ones_.exact) return 0.0;
    return math::beta_lpdf_logs(log_x, log1m_x, ones_.shape.a, ones_.shape.b);
  }

  double u0_dependent_terms(const std::vector<double>& p, const ArmLatent& L, std::size_t i) const {
    double s = 0.0;
    if (!(layout_.hurdle() && L.d[i] == 1)) s += effect_term(p, L, i);
    if (layout_.hurdle() && layout_.gamma_u0) s += structural_term(p, L, i);
    return s;
  }

  static double clamp_unit(double x) { return std::clamp(x, 1e-12, 1.0 - 1e-12); }

  double draw_ones(Rng& rng) const {
    if (ones_.exact) return 1.0;
    return std::min(draw::beta(rng, ones_.shape.a, ones_.shape.b), std::nextafter(1.0, 0.0));
  }

  double draw_beta_mean_sd(double mean, double sd, Rng& rng) const {
    const auto s = math::beta_shape_from_mean_sd(mean, sd);
    return clamp_unit(draw::beta(rng, s.a, s.b));
  }

  double draw_baseline(const std::vector<double>& p, std::size_t i, Rng& rng, int& du) const {
    du = 0;
    switch (family_) {
      case Family::BivariateNormal: return draw::normal(rng, p[pidx::delta0], p[pidx::sigma_u]);
      case Family::Hurdle:
        du = draw::bernoulli(rng, math::expit(baseline_structural_predictor(p, i))) ? 1 : 0;
        if (du == 1) return draw_ones(rng);
        [[fallthrough]];
      case Family::BetaGamma: return draw_beta_mean_sd(math::expit(p[pidx::delta0]), p[pidx::sigma_u], rng);
    }
    return 0.0;
  }

  double draw_effect(const std::vector<double>& p, const ArmLatent& L, std::size_t i, int d, Rng& rng) const {
    const double lp = p[pidx::alpha0] + p[pidx::alpha1] * (L.u0_raw[i] - u0_center_);
    switch (family_) {
      case Family::BivariateNormal: return draw::normal(rng, lp, p[pidx::sigma_e]);
      case Family::Hurdle:
        if (d == 1) return draw_ones(rng);
        [[fallthrough]];
      case Family::BetaGamma: return draw_beta_mean_sd(math::expit(lp), p[pidx::sigma_e], rng);
    }
    return 0.0;
  }

  double draw_cost(const std::vector<double>& p, double mu_e, const ArmLatent& L, std::size_t i, Rng& rng) const {
    const double shift = L.e_cost[i] - mu_e;
    if (family_ == Family::BivariateNormal) {
      const double tau2 = conditional_cost_variance(cost_params(p), p[pidx::sigma_e]);
      return draw::normal(rng, p[pidx::beta0] + p[pidx::beta1] * shift, std::sqrt(tau2));
    }
    const double mean = std::exp(p[pidx::beta0] + p[pidx::beta1] * shift);
    const double rate = mean / (p[pidx::sigma_c] * p[pidx::sigma_c]);
    const double log_c = draw::log_gamma_variate(rng, mean * rate) - std::log(rate);
    return std::max(std::exp(log_c), 1e-300);
  }

  void build_names_and_priors(const ModelSpec& spec) {
    const char* fixed[] = {"alpha0", "alpha1", "sigma_e", "beta0", "beta1", "sigma_c", "delta0", "sigma_u"};
    for (const char* name : fixed) {
      names_.emplace_back(name);
      priors_.push_back(spec.priors.get(name, family_));
      positive_.push_back(std::string(name).rfind("sigma", 0) == 0);
    }
    if (!layout_.hurdle()) return;
    auto add = [&](const std::string& name, const std::string& group) {
      names_.push_back(name);
      priors_.push_back(spec.priors.get(group, family_));
      positive_.push_back(false);
    };
    add("gamma0", "gamma0");
    if (layout_.gamma_u0) add("gamma1", "gamma1");
    if (layout_.gamma_age) add("gamma2", "gamma2");
    for (int l = 2; l <= layout_.gamma_eth + 1; ++l) add("gamma3_" + std::to_string(l), "gamma3");
    for (int l = 2; l <= layout_.gamma_emp + 1; ++l) add("gamma4_" + std::to_string(l), "gamma4");
    add("eta0", "eta0");
    if (layout_.eta_age) add("eta1", "eta1");
    for (int l = 2; l <= layout_.eta_eth + 1; ++l) add("eta2_" + std::to_string(l), "eta2");
    for (int l = 2; l <= layout_.eta_emp + 1; ++l) add("eta3_" + std::to_string(l), "eta3");
  }

  /// Rejects data the chosen family cannot represent.
  void check_support() const {
    if (family_ == Family::BivariateNormal) return;
    const std::string where = "arm " + std::to_string(arm_) + ": ";
    for (std::size_t i = 0; i < n(); ++i) {
      for (double v : {e_obs_[i] ? e_value_[i] : 0.5, u0_obs_[i] ? u0_value_[i] : 0.5}) {
        if (v > 1.0 || v < 0.0) throw InputError(where + "utility/QALY outside [0, 1] for a Beta model (record " + ids_[i] + ")");
        if (v > 0.0 && v < 1.0 && (v <= epsilon_ || v >= 1.0 - epsilon_)) {
          throw InputError(where + "epsilon " + std::to_string(epsilon_) + " is not below the gap to the boundary of record " +
                           ids_[i]);
        }
      }
      if (c_obs_[i] && c_value_[i] > 0.0 && c_value_[i] <= epsilon_) {
        throw InputError(where + "epsilon is not below the smallest positive cost (record " + ids_[i] + ")");
      }
    }
  }

  int arm_;
  Family family_;
  double epsilon_;
  OnesComponent ones_;
  ArmLayout layout_;
  std::vector<std::size_t> record_;
  std::vector<std::string> ids_;
  std::vector<char> e_obs_, c_obs_, u0_obs_;
  std::vector<double> e_value_, c_value_, u0_value_;
  std::vector<int> d_fixed_;
  std::vector<unsigned> marginal_;
  std::vector<std::optional<double>> age_raw_;
  std::vector<double> age_c_;
  std::vector<int> eth_, emp_;
  std::size_t eth_levels_ = 0, emp_levels_ = 0;
  std::vector<double> eth_dummy_, emp_dummy_;  // record x (levels - 1), centred within the arm
  double u0_center_ = 0.0;
  std::vector<std::string> names_;
  std::vector<Prior> priors_;
  std::vector<bool> positive_;
};

/// Sum of independent prior log-densities for one arm's parameters, with the
/// Beta SD bounds evaluated at the current means.
inline double log_prior(const ArmModel& model, const std::vector<double>& params) {
  return model.log_prior(params);
}

}  // namespace hcea
