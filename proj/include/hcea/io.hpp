#pragma once

// Text renderings of fit outputs and atomic file writes.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcea/diagnostics.hpp"
#include "hcea/econ.hpp"
#include "hcea/error.hpp"
#include "hcea/imputation.hpp"
#include "hcea/sampler.hpp"
#include "hcea/trial_csv.hpp"

namespace hcea {

/// Writes to a sibling temporary file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string draws_csv(const PosteriorDraws& d) {
  std::ostringstream os;
  os << "chain,draw";
  for (const auto& n : d.names) os << ',' << n;
  os << '\n';
  for (std::size_t c = 0; c < d.chains.size(); ++c) {
    for (std::size_t t = 0; t < d.retained; ++t) {
      os << c + 1 << ',' << t + 1;
      for (std::size_t k = 0; k < d.names.size(); ++k) os << ',' << format_double(d.value(c, t, k));
      os << '\n';
    }
  }
  return os.str();
}

struct PosteriorSummary {
  double mean = 0.0;
  double sd = 0.0;
  Interval hpd90;
};

inline PosteriorSummary summarize(std::span<const double> v) {
  PosteriorSummary s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  s.hpd90 = v.size() >= 50 ? hpd_interval(v, 0.90) : Interval{s.mean, s.mean};
  return s;
}

inline nlohmann::json to_json(const PosteriorSummary& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"hpd90", {s.hpd90.lower, s.hpd90.upper}}};
}

inline nlohmann::json diagnostics_json(const DiagnosticsReport& r, double rhat_threshold) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : r.parameters) {
    params.push_back({{"name", p.name},
                      {"rhat", p.rhat ? nlohmann::json(*p.rhat) : nlohmann::json("not_applicable")},
                      {"ess", p.ess ? nlohmann::json(*p.ess) : nlohmann::json("not_applicable")}});
  }
  nlohmann::json acc = nlohmann::json::object();
  for (const auto& [k, v] : r.acceptance) acc[k] = v;
  return {{"parameters", params},
          {"acceptance", acc},
          {"max_rhat", r.max_rhat()},
          {"rhat_threshold", rhat_threshold},
          {"converged", r.max_rhat() <= rhat_threshold}};
}

inline nlohmann::json to_json(const DicResult& d) {
  return {{"mean_deviance", d.mean_deviance},
          {"deviance_at_mean", d.deviance_at_mean},
          {"pD", d.effective_parameters},
          {"dic", d.dic},
          {"term_count", d.term_count},
          {"scope", d.scope}};
}

inline std::string imputations_csv(const std::vector<ImputationSummary>& rows) {
  std::ostringstream os;
  os << "id,arm,quantity,baseline_observed,mean,hpd90_lower,hpd90_upper,no_discernible_interval,"
        "structural_one_probability\n";
  for (const auto& r : rows) {
    os << r.record_id << ',' << r.arm << ',' << to_string(r.quantity) << ',' << (r.baseline_observed ? 1 : 0) << ','
       << format_double(r.mean) << ',' << format_double(r.hpd90.lower) << ',' << format_double(r.hpd90.upper) << ','
       << (r.no_discernible_interval ? 1 : 0) << ','
       << (r.structural_one_probability ? format_double(*r.structural_one_probability) : std::string("NA")) << '\n';
  }
  return os.str();
}

inline std::string ceac_csv(const std::vector<CeacPoint>& curve) {
  std::ostringstream os;
  os << "k,probability\n";
  for (const auto& p : curve) os << format_double(p.k) << ',' << format_double(p.probability) << '\n';
  return os.str();
}

inline std::string cep_csv(std::span<const double> de, std::span<const double> dc) {
  std::ostringstream os;
  os << "draw,delta_e,delta_c\n";
  for (std::size_t i = 0; i < de.size(); ++i) {
    os << i + 1 << ',' << format_double(de[i]) << ',' << format_double(dc[i]) << '\n';
  }
  return os.str();
}

inline nlohmann::json to_json(const CeaResult& r) {
  nlohmann::json j;
  j["icer"] = r.icer.value ? nlohmann::json(*r.icer.value) : nlohmann::json("undefined");
  j["mean_delta_e"] = r.icer.mean_delta_e;
  j["mean_delta_c"] = r.icer.mean_delta_c;
  j["k_ref"] = r.cep.k_ref;
  j["quadrants"] = {{"north_east", r.cep.north_east},
                    {"north_west", r.cep.north_west},
                    {"south_west", r.cep.south_west},
                    {"south_east", r.cep.south_east}};
  j["sustainability_fraction"] = r.cep.sustainability;
  j["mean_incremental_net_benefit"] = r.cep.mean_net_benefit;
  return j;
}

/// Posterior summaries of the arm-level means and increments.
inline nlohmann::json posterior_summary_json(const PosteriorDraws& d) {
  nlohmann::json j = nlohmann::json::object();
  for (const char* base : {"mu_e", "mu_c", "pi_e", "mu_e_nonone"}) {
    for (int t : {1, 2}) {
      const std::string name = std::string(base) + "[" + std::to_string(t) + "]";
      if (d.has(name)) j[name] = to_json(summarize(d.pooled(name)));
    }
  }
  j["delta_e"] = to_json(summarize(d.pooled("delta_e")));
  j["delta_c"] = to_json(summarize(d.pooled("delta_c")));
  return j;
}

}  // namespace hcea
