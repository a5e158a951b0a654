#pragma once

// Metropolis-within-Gibbs sampler for the joint models. Each iteration and
// arm: missing baseline utilities, missing QALYs with their structural
// indicators, and missing costs are refreshed from their full conditionals,
// then the parameter blocks take adaptive random-walk Metropolis steps.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hcea/diagnostics.hpp"
#include "hcea/error.hpp"
#include "hcea/mnar.hpp"
#include "hcea/model.hpp"
#include "hcea/model_spec.hpp"
#include "hcea/rng.hpp"
#include "hcea/trial_data.hpp"

namespace hcea {

struct SamplerConfig {
  std::size_t n_chains = 2;
  std::size_t n_iterations = 20000;  // per chain, burn-in included
  std::size_t burn_in = 10000;
  std::size_t thin = 1;
  std::uint64_t seed = 20190101;
  bool adapt = true;              // tune proposals during burn-in, frozen afterwards
  bool store_imputations = true;  // keep per-record draws of imputed values
  bool parallel_chains = false;

  std::size_t retained_per_chain() const { return (n_iterations - burn_in) / thin; }
};

inline void validate(const SamplerConfig& c) {
  if (c.n_chains < 1) throw InputError("at least one chain is required");
  if (c.thin < 1) throw InputError("thinning must be at least 1");
  if (!(c.burn_in < c.n_iterations)) throw InputError("burn-in must be smaller than the number of iterations");
  if (c.retained_per_chain() < 1) throw InputError("no draws would be retained");
}

/// Random-walk proposal x + s L z. During burn-in the log scale s follows a
/// Robbins-Monro recursion towards the target acceptance rate and L is
/// re-estimated from the draws of doubling windows.
class AdaptiveProposal {
 public:
  explicit AdaptiveProposal(const std::vector<double>& sd)
      : d_(sd.size()), L_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d_), static_cast<Eigen::Index>(d_))),
        target_(d_ == 1 ? 0.44 : 0.30), window_(std::max<std::size_t>(100, 20 * d_)) {
    for (std::size_t i = 0; i < d_; ++i) L_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = sd[i];
    reset_window();
  }

  std::size_t dimension() const { return d_; }
  double scale() const { return std::exp(log_scale_); }

  Eigen::VectorXd propose(const Eigen::VectorXd& x, Rng& rng) const {
    Eigen::VectorXd z(static_cast<Eigen::Index>(d_));
    std::normal_distribution<double> std_normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = std_normal(rng);
    return x + std::exp(log_scale_) * (L_ * z);
  }

  void adapt(bool accepted, const Eigen::VectorXd& state) {
    ++n_rm_;
    log_scale_ += ((accepted ? 1.0 : 0.0) - target_) / std::pow(static_cast<double>(n_rm_), 0.6);
    log_scale_ = std::clamp(log_scale_, -15.0, 5.0);
    ++k_;
    const Eigen::VectorXd delta = state - mean_;
    mean_ += delta / static_cast<double>(k_);
    m2_ += delta * (state - mean_).transpose();
    accepted_in_window_ += accepted;
    if (k_ >= window_) {
      update_covariance();
      window_ *= 2;
      reset_window();
    }
  }

  void count(bool accepted) {
    ++proposed_;
    accepted_ += accepted;
  }
  double acceptance_rate() const {
    return proposed_ ? static_cast<double>(accepted_) / static_cast<double>(proposed_) : 0.0;
  }

 private:
  void reset_window() {
    k_ = 0;
    accepted_in_window_ = 0;
    mean_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d_));
    m2_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d_), static_cast<Eigen::Index>(d_));
  }

  void update_covariance() {
    if (k_ < 10 * d_ + 10 || accepted_in_window_ < 5 * d_) return;
    Eigen::MatrixXd cov = m2_ / static_cast<double>(k_ - 1);
    const double jitter = 1e-10 * std::max(cov.trace() / static_cast<double>(d_), 1e-300);
    cov.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success || !llt.matrixL().toDenseMatrix().allFinite()) return;
    L_ = llt.matrixL();
    log_scale_ = std::log(2.38 / std::sqrt(static_cast<double>(d_)));
    n_rm_ = 0;
  }

  std::size_t d_;
  Eigen::MatrixXd L_;
  double target_;
  double log_scale_ = 0.0;
  std::size_t n_rm_ = 0;
  std::size_t window_;
  std::size_t k_ = 0;
  std::size_t accepted_in_window_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
  std::size_t proposed_ = 0;
  std::size_t accepted_ = 0;
};

enum class ImputedQuantity { Qaly, Cost, BaselineUtility, StructuralOne };

inline const char* to_string(ImputedQuantity q) {
  switch (q) {
    case ImputedQuantity::Qaly: return "qaly";
    case ImputedQuantity::Cost: return "cost";
    case ImputedQuantity::BaselineUtility: return "baseline_utility";
    case ImputedQuantity::StructuralOne: return "structural_one";
  }
  return "?";
}

struct ImputedSeries {
  std::string record_id;
  int arm = kControlArm;
  std::size_t record_index = 0;  // position in the dataset
  ImputedQuantity quantity = ImputedQuantity::Qaly;
  bool baseline_observed = true;
};

struct ChainDraws {
  std::uint64_t seed = 0;
  std::vector<double> values;   // retained x monitored, row-major
  std::vector<float> imputed;   // retained x imputed series, row-major
  std::vector<double> deviance; // observed common-module deviance per retained draw
  std::map<std::string, double> acceptance;
  std::array<std::vector<double>, 2> e_sum, u0_sum;  // running sums of latent values per arm
};

struct PosteriorDraws {
  ModelSpec spec;
  SamplerConfig config;
  std::vector<std::string> names;
  std::vector<ImputedSeries> imputed_series;
  std::size_t retained = 0;  // per chain
  std::vector<ChainDraws> chains;
  std::array<std::size_t, 2> parameter_offset{};  // start of each arm's parameters in `names`
  std::array<std::size_t, 2> parameter_count{};

  std::size_t index_of(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (names[k] == name) return k;
    }
    throw InputError("no monitored quantity named '" + name + "'");
  }
  bool has(const std::string& name) const {
    for (const auto& n : names) {
      if (n == name) return true;
    }
    return false;
  }
  double value(std::size_t chain, std::size_t draw, std::size_t k) const {
    return chains[chain].values[draw * names.size() + k];
  }
  std::vector<std::vector<double>> by_chain(std::size_t k) const {
    std::vector<std::vector<double>> out(chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
      out[c].reserve(retained);
      for (std::size_t t = 0; t < retained; ++t) out[c].push_back(value(c, t, k));
    }
    return out;
  }
  std::vector<std::vector<double>> by_chain(const std::string& name) const { return by_chain(index_of(name)); }
  std::vector<double> pooled(std::size_t k) const {
    std::vector<double> out;
    out.reserve(retained * chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
      for (std::size_t t = 0; t < retained; ++t) out.push_back(value(c, t, k));
    }
    return out;
  }
  std::vector<double> pooled(const std::string& name) const { return pooled(index_of(name)); }
  double mean(const std::string& name) const {
    const auto v = pooled(name);
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }
  std::vector<double> imputed_pooled(std::size_t series) const {
    std::vector<double> out;
    const std::size_t m = imputed_series.size();
    for (const auto& ch : chains) {
      if (ch.imputed.empty()) continue;
      for (std::size_t t = 0; t < retained; ++t) out.push_back(ch.imputed[t * m + series]);
    }
    return out;
  }
  std::vector<double> deviance_pooled() const {
    std::vector<double> out;
    for (const auto& ch : chains) out.insert(out.end(), ch.deviance.begin(), ch.deviance.end());
    return out;
  }
};

namespace sampler_detail {

struct Block {
  std::string name;
  std::vector<std::size_t> index;
  unsigned modules = 0;
};

inline std::vector<Block> make_blocks(const ArmModel& m) {
  const std::string t = "[" + std::to_string(m.arm()) + "]";
  const bool normal = m.family() == Family::BivariateNormal;
  std::vector<Block> b;
  b.push_back({"effect" + t, {pidx::alpha0, pidx::alpha1, pidx::sigma_e}, kEffectModule | kCostModule});
  b.push_back({"cost" + t, {pidx::beta0, pidx::beta1, pidx::sigma_c}, kCostModule});
  b.push_back({"baseline" + t, {pidx::delta0, pidx::sigma_u}, kBaselineModule});
  const auto& lay = m.layout();
  if (lay.hurdle()) {
    Block g{"structural" + t, {}, kStructuralModule | kCostModule};
    for (std::size_t k = lay.gamma_offset(); k < lay.eta_offset(); ++k) g.index.push_back(k);
    b.push_back(g);
    Block e{"baseline_structural" + t, {}, kBaselineStructuralModule};
    for (std::size_t k = lay.eta_offset(); k < lay.size(); ++k) e.index.push_back(k);
    b.push_back(e);
  }
  return b;
}

inline const char* module_name(std::size_t m) {
  static const char* n[] = {"effect", "cost", "baseline", "structural", "baseline_structural"};
  return n[m];
}

struct ArmState {
  std::vector<double> p;
  ArmLatent L;
  std::array<double, kModuleCount> cache{};
  std::array<bool, kModuleCount> valid{};
};

class ArmSampler {
 public:
  explicit ArmSampler(const ArmModel& model) : model_(model), blocks_(make_blocks(model)) {
    const auto hints = model.proposal_hints();
    for (const auto& b : blocks_) {
      std::vector<double> sd;
      for (auto k : b.index) sd.push_back(hints[k]);
      proposals_.emplace_back(sd);
    }
  }

  void initialise(std::size_t chain) {
    state_.L = model_.initial_latent();
    const auto base = model_.initial_params();
    state_.p = base;
    if (chain > 0) {
      // Deterministic chain-specific offsets so that chains start apart.
      const auto hints = model_.proposal_hints();
      const double sign = chain % 2 == 1 ? 1.0 : -1.0;
      const double mag = 2.0 * static_cast<double>((chain + 1) / 2);
      for (std::size_t k = 0; k < state_.p.size(); ++k) {
        const double s = (k % 2 == 0 ? sign : -sign) * mag * hints[k];
        if (model_.positive_parameters()[k]) {
          state_.p[k] *= std::exp(s);
        } else {
          state_.p[k] += s;
        }
      }
      if (!std::isfinite(full_log_target())) state_.p = base;
    }
    invalidate();
    const double lp = model_.log_prior(state_.p);
    if (!std::isfinite(lp)) {
      throw SamplerError("prior[" + std::to_string(model_.arm()) + "]", "initial parameters outside the prior support");
    }
    for (std::size_t m = 0; m < kModuleCount; ++m) {
      if (!std::isfinite(module(m))) {
        throw SamplerError(std::string(module_name(m)) + "[" + std::to_string(model_.arm()) + "]",
                           "non-finite log-density at initialisation");
      }
    }
  }

  void iterate(Rng& rng, bool adapting) {
    model_.update_missing_u0(state_.p, state_.L, rng);
    model_.update_missing_e(state_.p, state_.L, rng);
    model_.update_missing_c(state_.p, state_.L, rng);
    invalidate();
    for (std::size_t b = 0; b < blocks_.size(); ++b) step(b, rng, adapting);
  }

  const std::vector<double>& params() const { return state_.p; }
  const ArmLatent& latent() const { return state_.L; }
  const ArmModel& model() const { return model_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const AdaptiveProposal& proposal(std::size_t b) const { return proposals_[b]; }

 private:
  void invalidate() { state_.valid.fill(false); }

  double module(std::size_t m) {
    if (!state_.valid[m]) {
      state_.cache[m] = model_.module_sum(static_cast<Module>(1u << m), state_.p, state_.L);
      state_.valid[m] = true;
    }
    return state_.cache[m];
  }

  double full_log_target() const {
    double s = model_.log_prior(state_.p) + model_.log_jacobian(state_.p);
    for (std::size_t m = 0; m < kModuleCount; ++m) s += model_.module_sum(static_cast<Module>(1u << m), state_.p, state_.L);
    return s;
  }

  Eigen::VectorXd to_sampling_scale(const Block& b) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(b.index.size()));
    for (std::size_t j = 0; j < b.index.size(); ++j) {
      const auto k = b.index[j];
      x(static_cast<Eigen::Index>(j)) = model_.positive_parameters()[k] ? std::log(state_.p[k]) : state_.p[k];
    }
    return x;
  }

  void step(std::size_t bi, Rng& rng, bool adapting) {
    const Block& b = blocks_[bi];
    auto& prop = proposals_[bi];
    const Eigen::VectorXd x = to_sampling_scale(b);
    double current = model_.log_prior(state_.p) + model_.log_jacobian(state_.p);
    for (std::size_t m = 0; m < kModuleCount; ++m) {
      if (b.modules & (1u << m)) current += module(m);
    }
    const Eigen::VectorXd y = prop.propose(x, rng);
    std::vector<double> p_new = state_.p;
    for (std::size_t j = 0; j < b.index.size(); ++j) {
      const auto k = b.index[j];
      const double v = y(static_cast<Eigen::Index>(j));
      p_new[k] = model_.positive_parameters()[k] ? std::exp(v) : v;
    }
    double proposed = model_.log_prior(p_new) + model_.log_jacobian(p_new);
    std::array<double, kModuleCount> sums{};
    if (std::isfinite(proposed)) {
      for (std::size_t m = 0; m < kModuleCount && std::isfinite(proposed); ++m) {
        if (b.modules & (1u << m)) {
          sums[m] = model_.module_sum(static_cast<Module>(1u << m), p_new, state_.L);
          proposed += sums[m];
        }
      }
    }
    const bool accept = std::isfinite(proposed) && std::log(draw::uniform01(rng)) < proposed - current;
    if (accept) {
      state_.p = std::move(p_new);
      for (std::size_t m = 0; m < kModuleCount; ++m) {
        if (b.modules & (1u << m)) state_.cache[m] = sums[m];
      }
    }
    if (adapting) {
      prop.adapt(accept, accept ? y : x);
    } else {
      prop.count(accept);
    }
  }

  const ArmModel& model_;
  std::vector<Block> blocks_;
  std::vector<AdaptiveProposal> proposals_;
  ArmState state_;
};

/// Monitored parameter values of one arm followed by nothing else; derived
/// quantities are appended by the caller.
inline void append_arm_values(const ArmModel& m, const std::vector<double>& p, std::vector<double>& row) {
  row.insert(row.end(), p.begin(), p.end());
}

}  // namespace sampler_detail

/// Monitored quantities: every parameter of each arm (suffix [1] or [2]),
/// then mu_e, mu_c (and pi_e, mu_e_nonone for the hurdle) per arm, then
/// delta_e = mu_e[2] - mu_e[1] and delta_c = mu_c[2] - mu_c[1].
inline std::vector<std::string> monitored_names(const std::array<const ArmModel*, 2>& arms) {
  std::vector<std::string> names;
  for (const auto* m : arms) {
    for (const auto& n : m->parameter_names()) names.push_back(n + "[" + std::to_string(m->arm()) + "]");
  }
  for (const auto* m : arms) {
    const std::string t = "[" + std::to_string(m->arm()) + "]";
    names.push_back("mu_e" + t);
    names.push_back("mu_c" + t);
    if (m->layout().hurdle()) {
      names.push_back("pi_e" + t);
      names.push_back("mu_e_nonone" + t);
    }
  }
  names.push_back("delta_e");
  names.push_back("delta_c");
  return names;
}

/// Builds both arm models for a dataset and spec.
struct PreparedModel {
  StructuralAssignment assignment;
  std::vector<ArmModel> arms;
};

inline PreparedModel prepare_model(const TrialDataset& data, const ModelSpec& spec) {
  validate(spec);
  validate(data);
  if (spec.family != Family::BivariateNormal && data.grid.horizon() > 1.0 + 1e-12) {
    throw InputError("Beta likelihoods need a time horizon of at most one unit (sum of interval weights <= 1)");
  }
  PreparedModel pm;
  pm.assignment = apply_mnar_scenario(data, spec.scenario, spec.custom_assignment);
  pm.arms.emplace_back(data, pm.assignment, spec, kControlArm);
  pm.arms.emplace_back(data, pm.assignment, spec, kInterventionArm);
  return pm;
}

namespace sampler_detail {

inline std::vector<ImputedSeries> imputed_layout(const std::vector<ArmModel>& arms) {
  std::vector<ImputedSeries> out;
  for (const auto& m : arms) {
    for (std::size_t i = 0; i < m.n(); ++i) {
      auto add = [&](ImputedQuantity q) {
        out.push_back({m.id(i), m.arm(), m.record_index(i), q, m.u0_observed(i)});
      };
      if (!m.e_observed(i)) add(ImputedQuantity::Qaly);
      if (!m.c_observed(i)) add(ImputedQuantity::Cost);
      if (!m.u0_observed(i)) add(ImputedQuantity::BaselineUtility);
      if (m.layout().hurdle() && m.d_fixed(i) == kSampledIndicator) add(ImputedQuantity::StructuralOne);
    }
  }
  return out;
}

inline ChainDraws run_chain(const std::vector<ArmModel>& arms, const SamplerConfig& cfg, std::uint64_t seed,
                            std::size_t chain, std::size_t n_names, std::size_t n_imputed) {
  ChainDraws out;
  out.seed = seed;
  Rng rng(seed);
  std::vector<ArmSampler> samplers;
  for (const auto& m : arms) samplers.emplace_back(m);
  for (auto& s : samplers) s.initialise(chain);
  const std::size_t retained = cfg.retained_per_chain();
  out.values.reserve(retained * n_names);
  out.deviance.reserve(retained);
  if (cfg.store_imputations) out.imputed.reserve(retained * n_imputed);
  for (std::size_t a = 0; a < 2; ++a) {
    out.e_sum[a].assign(arms[a].n(), 0.0);
    out.u0_sum[a].assign(arms[a].n(), 0.0);
  }
  std::vector<double> row;
  row.reserve(n_names);
  for (std::size_t it = 0; it < cfg.burn_in + retained * cfg.thin; ++it) {
    const bool adapting = cfg.adapt && it < cfg.burn_in;
    for (auto& s : samplers) s.iterate(rng, adapting);
    if (it < cfg.burn_in || (it - cfg.burn_in) % cfg.thin != 0) continue;
    row.clear();
    for (auto& s : samplers) append_arm_values(s.model(), s.params(), row);
    std::array<double, 2> mu_e{}, mu_c{};
    double loglik = 0.0;
    for (std::size_t a = 0; a < 2; ++a) {
      const auto& m = samplers[a].model();
      const auto& p = samplers[a].params();
      mu_e[a] = m.mu_e(p);
      mu_c[a] = m.mu_c(p);
      row.push_back(mu_e[a]);
      row.push_back(mu_c[a]);
      if (m.layout().hurdle()) {
        row.push_back(m.pi_e(p));
        row.push_back(m.mu_e_nonone(p));
      }
      loglik += m.observed_log_likelihood(p, samplers[a].latent());
      const auto& L = samplers[a].latent();
      for (std::size_t i = 0; i < m.n(); ++i) {
        out.e_sum[a][i] += L.e_cost[i];
        out.u0_sum[a][i] += L.u0_raw[i];
      }
    }
    row.push_back(mu_e[1] - mu_e[0]);
    row.push_back(mu_c[1] - mu_c[0]);
    out.values.insert(out.values.end(), row.begin(), row.end());
    out.deviance.push_back(-2.0 * loglik);
    if (cfg.store_imputations) {
      for (std::size_t a = 0; a < 2; ++a) {
        const auto& m = samplers[a].model();
        const auto& L = samplers[a].latent();
        for (std::size_t i = 0; i < m.n(); ++i) {
          if (!m.e_observed(i)) out.imputed.push_back(static_cast<float>(L.e_raw[i]));
          if (!m.c_observed(i)) out.imputed.push_back(static_cast<float>(L.c_eff[i]));
          if (!m.u0_observed(i)) out.imputed.push_back(static_cast<float>(L.u0_raw[i]));
          if (m.layout().hurdle() && m.d_fixed(i) == kSampledIndicator) out.imputed.push_back(static_cast<float>(L.d[i]));
        }
      }
    }
  }
  for (const auto& s : samplers) {
    for (std::size_t b = 0; b < s.blocks().size(); ++b) {
      out.acceptance[s.blocks()[b].name] = s.proposal(b).acceptance_rate();
    }
  }
  return out;
}

}  // namespace sampler_detail

/// Runs every chain; the result depends only on (data, spec, config).
inline PosteriorDraws fit(const TrialDataset& data, const ModelSpec& spec, const SamplerConfig& config) {
  validate(config);
  const auto pm = prepare_model(data, spec);
  PosteriorDraws draws;
  draws.spec = spec;
  draws.config = config;
  draws.names = monitored_names({&pm.arms[0], &pm.arms[1]});
  draws.imputed_series = sampler_detail::imputed_layout(pm.arms);
  draws.retained = config.retained_per_chain();
  draws.parameter_offset = {0, pm.arms[0].layout().size()};
  draws.parameter_count = {pm.arms[0].layout().size(), pm.arms[1].layout().size()};
  const std::size_t n_names = draws.names.size();
  const std::size_t n_imp = draws.imputed_series.size();
  auto seed_of = [&](std::size_t c) {
    return derive_seed(config.seed, short_name(spec.family), short_name(spec.scenario), c);
  };
  if (config.parallel_chains && config.n_chains > 1) {
    std::vector<std::future<ChainDraws>> jobs;
    for (std::size_t c = 0; c < config.n_chains; ++c) {
      jobs.push_back(std::async(std::launch::async, [&, c] {
        return sampler_detail::run_chain(pm.arms, config, seed_of(c), c, n_names, n_imp);
      }));
    }
    for (auto& j : jobs) draws.chains.push_back(j.get());
  } else {
    for (std::size_t c = 0; c < config.n_chains; ++c) {
      draws.chains.push_back(sampler_detail::run_chain(pm.arms, config, seed_of(c), c, n_names, n_imp));
    }
  }
  return draws;
}

struct ParameterDiagnostics {
  std::string name;
  std::optional<double> rhat;  // nullopt: not applicable (constant, or a single chain)
  std::optional<double> ess;
};

struct DiagnosticsReport {
  std::vector<ParameterDiagnostics> parameters;
  std::map<std::string, double> acceptance;  // block -> mean post-burn-in rate over chains
  double max_rhat() const {
    double m = 1.0;
    for (const auto& p : parameters) {
      if (p.rhat) m = std::max(m, *p.rhat);
    }
    return m;
  }
};

inline DiagnosticsReport diagnose(const PosteriorDraws& draws, bool split = true) {
  DiagnosticsReport r;
  for (std::size_t k = 0; k < draws.names.size(); ++k) {
    ParameterDiagnostics d;
    d.name = draws.names[k];
    const auto chains = draws.by_chain(k);
    if (chains.size() >= 2 && draws.retained >= 10) d.rhat = rhat(chains, split);
    if (draws.retained >= 2) d.ess = ess(chains);
    r.parameters.push_back(std::move(d));
  }
  for (const auto& ch : draws.chains) {
    for (const auto& [name, rate] : ch.acceptance) r.acceptance[name] += rate / static_cast<double>(draws.chains.size());
  }
  return r;
}

}  // namespace hcea
