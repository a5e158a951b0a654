#pragma once

// hcea command-line application. `run` is the whole program minus main().
//
// Exit codes: 0 success, 1 input error, 2 convergence failure (R-hat above the
// threshold), 3 sampler failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcea/hcea.hpp"

namespace hcea::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitConvergence = 2;
inline constexpr int kExitSampler = 3;

inline std::string default_output_dir() {
  const char* env = std::getenv("HCEA_OUTPUT_DIR");
  return env && *env ? std::string(env) : std::string("hcea_out");
}

/// Everything a fitting command needs, assembled from the flags.
struct RunManifest {
  std::string data_path;
  std::string times_path;
  std::string model_path;
  std::string out_dir;
  std::vector<std::string> families{"hurdle"};
  std::vector<std::string> scenarios{"mar"};
  bool complete_cases = false;
  SamplerConfig sampler;
  WtpGrid wtp;
  double k_ref = 20000.0;
  double rhat_threshold = 1.1;

  nlohmann::json to_json() const {
    return {{"data", data_path},
            {"times", times_path},
            {"model", model_path},
            {"families", families},
            {"scenarios", scenarios},
            {"complete_cases", complete_cases},
            {"chains", sampler.n_chains},
            {"iterations", sampler.n_iterations},
            {"burn_in", sampler.burn_in},
            {"thin", sampler.thin},
            {"seed", sampler.seed},
            {"wtp_max", wtp.max},
            {"wtp_step", wtp.step},
            {"k_ref", k_ref},
            {"rhat_threshold", rhat_threshold}};
  }
};

inline std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

inline std::vector<double> parse_grid(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& s : split_list(items)) {
    double v = 0.0;
    if (!csv_detail::parse_double(s, v)) throw InputError("grid value '" + s + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw InputError("empty value grid");
  return out;
}

inline TrialDataset load_dataset(const RunManifest& m) {
  if (m.data_path.empty()) throw InputError("--data is required");
  TimeGrid grid;
  if (!m.times_path.empty()) grid = load_time_grid(m.times_path);
  auto data = load_trial_csv(m.data_path, grid);
  validate(data);
  if (m.complete_cases) data = complete_cases(data);
  return data;
}

inline ModelSpec load_model_spec(const RunManifest& m) {
  if (m.model_path.empty()) return {};
  std::ifstream in(m.model_path);
  if (!in) throw InputError("cannot open " + m.model_path);
  try {
    return model_spec_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(m.model_path + ": " + e.what());
  }
}

inline std::vector<Family> expand_families(const std::vector<std::string>& names) {
  std::vector<Family> out;
  for (const auto& n : split_list(names)) {
    if (n == "all") {
      out = {Family::BivariateNormal, Family::BetaGamma, Family::Hurdle};
      return out;
    }
    out.push_back(parse_family(n));
  }
  if (out.empty()) throw InputError("no model family selected");
  return out;
}

inline std::vector<MnarScenario> expand_scenarios(const std::vector<std::string>& names) {
  std::vector<MnarScenario> out;
  for (const auto& n : split_list(names)) out.push_back(parse_scenario(n));
  if (out.empty()) throw InputError("scenario list is empty");
  return out;
}

/// Observed-case counts in the layout of a trial's missing-data table.
inline std::string counts_table(const TrialDataset& data) {
  const auto counts = observed_counts(data);
  std::ostringstream os;
  auto cell = [](std::size_t k, std::size_t n) {
    std::ostringstream c;
    const double pct = n ? 100.0 * static_cast<double>(k) / static_cast<double>(n) : 0.0;
    c << k << " (" << std::fixed << std::setprecision(0) << pct << "%)";
    return c.str();
  };
  os << std::left << std::setw(22) << "time" << std::setw(16) << "control" << std::setw(16) << "intervention" << '\n';
  os << std::setw(22) << "n" << std::setw(16) << counts[0].n << std::setw(16) << counts[1].n << '\n';
  os << std::setw(22) << "baseline utility" << std::setw(16) << cell(counts[0].baseline_observed, counts[0].n)
     << std::setw(16) << cell(counts[1].baseline_observed, counts[1].n) << '\n';
  const auto& times = data.grid.times();
  for (std::size_t j = 0; j < counts[0].followup_observed.size(); ++j) {
    std::ostringstream label;
    label << "month " << times[j + 1] << " (u, c)";
    os << std::setw(22) << label.str() << std::setw(16) << cell(counts[0].followup_observed[j], counts[0].n)
       << std::setw(16) << cell(counts[1].followup_observed[j], counts[1].n) << '\n';
  }
  os << std::setw(22) << "complete cases" << std::setw(16) << cell(counts[0].complete, counts[0].n) << std::setw(16)
     << cell(counts[1].complete, counts[1].n) << '\n';
  os << std::setw(22) << "known structural ones" << std::setw(16) << counts[0].known1 << std::setw(16)
     << counts[1].known1 << '\n';
  os << std::setw(22) << "ambiguous" << std::setw(16) << counts[0].ambiguous << std::setw(16) << counts[1].ambiguous
     << '\n';
  return os.str();
}

struct FitOutcome {
  PosteriorDraws draws;
  DiagnosticsReport diagnostics;
  DicResult dic;
  CeaResult cea;
  bool converged = true;
};

/// Fits one (family, scenario) pair and writes its artifacts under `dir`.
inline FitOutcome fit_and_write(const TrialDataset& data, const ModelSpec& spec, const RunManifest& m,
                                const std::filesystem::path& dir, std::ostream& log) {
  FitOutcome o{fit(data, spec, m.sampler), {}, {}, {}, true};
  o.diagnostics = diagnose(o.draws);
  o.dic = dic(o.draws, data, spec);
  const auto de = o.draws.pooled("delta_e");
  const auto dc = o.draws.pooled("delta_c");
  o.cea = evaluate_cost_effectiveness(de, dc, m.wtp, m.k_ref);
  o.converged = o.diagnostics.max_rhat() <= m.rhat_threshold;

  write_file_atomic(dir / "draws.csv", draws_csv(o.draws));
  write_file_atomic(dir / "diagnostics.json", diagnostics_json(o.diagnostics, m.rhat_threshold).dump(2) + "\n");
  write_file_atomic(dir / "dic.json", to_json(o.dic).dump(2) + "\n");
  write_file_atomic(dir / "imputations.csv", imputations_csv(imputation_summaries(o.draws)));
  write_file_atomic(dir / "ceac.csv", ceac_csv(o.cea.ceac));
  write_file_atomic(dir / "cep.csv", cep_csv(de, dc));
  nlohmann::json summary = to_json(o.cea);
  summary["family"] = short_name(spec.family);
  summary["scenario"] = short_name(spec.scenario);
  summary["model"] = to_json(spec);
  summary["posterior"] = posterior_summary_json(o.draws);
  summary["dic"] = o.dic.dic;
  summary["max_rhat"] = o.diagnostics.max_rhat();
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");

  log << short_name(spec.family) << "/" << short_name(spec.scenario) << ": mu_e = " << o.draws.mean("mu_e[1]")
      << " / " << o.draws.mean("mu_e[2]") << ", mu_c = " << o.draws.mean("mu_c[1]") << " / "
      << o.draws.mean("mu_c[2]") << ", DIC = " << o.dic.dic << ", max R-hat = " << o.diagnostics.max_rhat()
      << (o.converged ? "" : "  (above threshold)") << '\n';
  return o;
}

inline std::filesystem::path output_root(const RunManifest& m) {
  return m.out_dir.empty() ? std::filesystem::path(default_output_dir()) : std::filesystem::path(m.out_dir);
}

inline int cmd_validate(const RunManifest& m, std::ostream& out) {
  const auto data = load_dataset(m);
  out << counts_table(data);
  return kExitOk;
}

inline int cmd_simulate(const std::string& config_path, const std::string& preset, std::uint64_t seed,
                        bool seed_given, const std::string& out_dir, std::ostream& out) {
  SyntheticTrialConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw InputError("cannot open " + config_path);
    try {
      cfg = synthetic_config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(config_path + ": " + e.what());
    }
  } else if (preset == "pilot") {
    cfg = pilot_shaped_config(seed);
  } else if (preset != "default") {
    throw InputError("unknown preset '" + preset + "' (pilot or default)");
  }
  if (seed_given) cfg.seed = seed;
  const auto data = generate_synthetic_trial(cfg);
  const std::filesystem::path dir(out_dir.empty() ? default_output_dir() : out_dir);
  std::ostringstream csv;
  write_trial_csv(data, csv);
  write_file_atomic(dir / "data.csv", csv.str());
  write_file_atomic(dir / "times.json", time_grid_to_json(cfg.grid).dump(2) + "\n");
  write_file_atomic(dir / "config.json", to_json(cfg).dump(2) + "\n");
  out << "wrote " << data.records.size() << " records to " << (dir / "data.csv").string() << '\n';
  return kExitOk;
}

inline int cmd_fit(const RunManifest& m, std::ostream& out) {
  const auto data = load_dataset(m);
  const ModelSpec base = load_model_spec(m);
  const auto families = expand_families(m.families);
  const auto scenarios = expand_scenarios(m.scenarios);
  const auto root = output_root(m);
  write_file_atomic(root / "manifest.json", m.to_json().dump(2) + "\n");
  bool converged = true;
  for (Family f : families) {
    for (MnarScenario s : scenarios) {
      ModelSpec spec = base;
      spec.family = f;
      spec.scenario = s;
      validate(spec);
      const auto o = fit_and_write(data, spec, m, root / (std::string(short_name(f)) + "_" + short_name(s)), out);
      converged = converged && o.converged;
    }
  }
  return converged ? kExitOk : kExitConvergence;
}

inline int cmd_sensitivity(const RunManifest& m, std::ostream& out) {
  const auto data = load_dataset(m);
  ModelSpec base = load_model_spec(m);
  for (const auto& f : split_list(m.families)) {
    if (parse_family(f) != Family::Hurdle) {
      throw InputError("missingness scenarios are defined for the hurdle family only");
    }
  }
  base.family = Family::Hurdle;
  const auto scenarios = expand_scenarios(m.scenarios);
  const auto root = output_root(m);
  write_file_atomic(root / "manifest.json", m.to_json().dump(2) + "\n");
  std::ostringstream ceac_out, summary_out;
  ceac_out << "scenario,k,probability\n";
  summary_out << "scenario,quantity,arm,mean,hpd90_lower,hpd90_upper\n";
  bool converged = true;
  for (MnarScenario s : scenarios) {
    ModelSpec spec = base;
    spec.scenario = s;
    const auto o = fit_and_write(data, spec, m, root / (std::string("hurdle_") + short_name(s)), out);
    converged = converged && o.converged;
    for (const auto& p : o.cea.ceac) {
      ceac_out << short_name(s) << ',' << format_double(p.k) << ',' << format_double(p.probability) << '\n';
    }
    for (const char* q : {"pi_e", "mu_e"}) {
      for (int t : {1, 2}) {
        const auto sm = summarize(o.draws.pooled(std::string(q) + "[" + std::to_string(t) + "]"));
        summary_out << short_name(s) << ',' << q << ',' << t << ',' << format_double(sm.mean) << ','
                    << format_double(sm.hpd90.lower) << ',' << format_double(sm.hpd90.upper) << '\n';
      }
    }
  }
  write_file_atomic(root / "sensitivity_ceac.csv", ceac_out.str());
  write_file_atomic(root / "sensitivity_summary.csv", summary_out.str());
  return converged ? kExitOk : kExitConvergence;
}

/// Shared driver of the epsilon and sigma1 sweeps: one fit per grid value,
/// one row per value and arm with the posterior of mu_e and the DIC.
template <class Configure>
int sweep(const RunManifest& m, const std::string& label, const std::vector<std::string>& values, Configure configure,
          const std::string& file, std::ostream& out) {
  const auto data = load_dataset(m);
  const ModelSpec base = load_model_spec(m);
  const auto families = expand_families(m.families);
  const auto root = output_root(m);
  write_file_atomic(root / "manifest.json", m.to_json().dump(2) + "\n");
  std::ostringstream table;
  table << "family," << label << ",arm,mu_e_mean,mu_e_hpd90_lower,mu_e_hpd90_upper,dic\n";
  bool converged = true;
  for (Family f : families) {
    for (const auto& v : values) {
      ModelSpec spec = base;
      spec.family = f;
      configure(spec, v);
      validate(spec);
      const auto o = fit_and_write(data, spec, m, root / (std::string(short_name(f)) + "_" + label + "_" + v), out);
      converged = converged && o.converged;
      for (int t : {1, 2}) {
        const auto sm = summarize(o.draws.pooled("mu_e[" + std::to_string(t) + "]"));
        table << short_name(f) << ',' << v << ',' << t << ',' << format_double(sm.mean) << ','
              << format_double(sm.hpd90.lower) << ',' << format_double(sm.hpd90.upper) << ','
              << format_double(o.dic.dic) << '\n';
      }
    }
  }
  write_file_atomic(root / file, table.str());
  return converged ? kExitOk : kExitConvergence;
}

inline int cmd_epsilon_sweep(RunManifest m, const std::vector<std::string>& grid, std::ostream& out) {
  std::vector<std::string> values;
  for (double v : parse_grid(grid)) {
    if (!(v > 0.0 && v < 0.5)) throw InputError("epsilon grid values must lie in (0, 0.5)");
    values.push_back(format_double(v));
  }
  for (const auto& f : split_list(m.families)) {
    if (f == "all" || parse_family(f) == Family::BivariateNormal) {
      throw InputError("the epsilon sweep applies to the beta_gamma and hurdle families");
    }
  }
  return sweep(
      m, "epsilon", values, [](ModelSpec& s, const std::string& v) { s.epsilon = std::stod(v); }, "epsilon_sweep.csv",
      out);
}

inline int cmd_sigma1_sweep(RunManifest m, const std::vector<std::string>& grid, std::ostream& out) {
  std::vector<std::string> values;
  for (const auto& item : split_list(grid)) {
    if (item == "exact") {
      values.push_back(item);
      continue;
    }
    double v = 0.0;
    if (!csv_detail::parse_double(item, v)) throw InputError("grid value '" + item + "' is not a number");
    if (!(v > 0.0 && v <= 1e-3)) throw InputError("sigma1 grid values must lie in (0, 1e-3]");
    values.push_back(format_double(v));
  }
  if (values.empty()) throw InputError("empty value grid");
  for (const auto& f : split_list(m.families)) {
    if (parse_family(f) != Family::Hurdle) throw InputError("the sigma1 sweep applies to the hurdle family only");
  }
  return sweep(
      m, "sigma1", values,
      [](ModelSpec& s, const std::string& v) {
        s.point_mass = v == "exact" ? PointMassMode::exact() : PointMassMode::degenerate_beta(std::stod(v));
      },
      "sigma1_sweep.csv", out);
}

inline void add_data_flags(CLI::App* app, RunManifest& m) {
  app->add_option("--data", m.data_path, "trial CSV (id,arm,u0..uJ,c1..cJ,age,ethnicity,employment)")->required();
  app->add_option("--times", m.times_path, "time grid JSON {\"times_months\": [...], \"time_unit\": 12}");
  app->add_flag("--complete-cases", m.complete_cases, "restrict to records with every utility and cost observed");
}

inline void add_fit_flags(CLI::App* app, RunManifest& m) {
  add_data_flags(app, m);
  app->add_option("--model", m.model_path, "model specification JSON");
  app->add_option("--chains", m.sampler.n_chains, "number of chains")->capture_default_str();
  app->add_option("--iters", m.sampler.n_iterations, "iterations per chain, burn-in included")->capture_default_str();
  app->add_option("--burnin", m.sampler.burn_in, "burn-in iterations")->capture_default_str();
  app->add_option("--thin", m.sampler.thin, "keep every n-th draw")->capture_default_str();
  app->add_option("--seed", m.sampler.seed, "master seed")->capture_default_str();
  app->add_option("--wtp-max", m.wtp.max, "largest willingness to pay")->capture_default_str();
  app->add_option("--wtp-step", m.wtp.step, "willingness-to-pay step")->capture_default_str();
  app->add_option("--k-ref", m.k_ref, "reference willingness to pay")->capture_default_str();
  app->add_option("--rhat-threshold", m.rhat_threshold, "largest acceptable R-hat")->capture_default_str();
  app->add_option("--out", m.out_dir, "output directory (default $HCEA_OUTPUT_DIR or ./hcea_out)");
}

/// Runs the program on `args` (args[0] is the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Bayesian joint models for trial-based cost-effectiveness analysis with missing data"};
  app.require_subcommand(1);
  RunManifest m;
  std::string sim_config, sim_preset = "default", sim_out;
  std::uint64_t sim_seed = 1;
  std::vector<std::string> family_flags, scenario_flags, grid;

  auto* v = app.add_subcommand("validate", "check a trial CSV and print observed-case counts");
  add_data_flags(v, m);

  auto* s = app.add_subcommand("simulate", "generate a synthetic trial");
  s->add_option("--config", sim_config, "synthetic trial JSON");
  s->add_option("--preset", sim_preset, "default or pilot")->capture_default_str();
  auto* seed_opt = s->add_option("--seed", sim_seed, "generator seed");
  s->add_option("--out", sim_out, "output directory");

  auto* f = app.add_subcommand("fit", "fit models and write draws, diagnostics, DIC, imputations and CEA outputs");
  add_fit_flags(f, m);
  f->add_option("--family", family_flags, "bn, bg, hurdle or all (comma separated)");
  f->add_option("--scenario", scenario_flags, "mar, mnar1, mnar2, mnar3, mnar4 (comma separated)");

  auto* sens = app.add_subcommand("sensitivity", "hurdle fits under MAR and the MNAR scenarios");
  add_fit_flags(sens, m);
  sens->add_option("--family", family_flags, "must be hurdle");
  sens->add_option("--scenario", scenario_flags, "scenarios (default mar,mnar1,mnar2,mnar3,mnar4)");

  auto* eps = app.add_subcommand("epsilon-sweep", "refit over a grid of boundary rescaling constants");
  add_fit_flags(eps, m);
  eps->add_option("--family", family_flags, "bg or hurdle (default bg)");
  eps->add_option("--grid", grid, "epsilon values (comma separated)")->required();

  auto* sig = app.add_subcommand("sigma1-sweep", "refit over a grid of degenerate-Beta SDs for the ones");
  add_fit_flags(sig, m);
  sig->add_option("--family", family_flags, "must be hurdle");
  sig->add_option("--grid", grid, "sigma1 values and/or 'exact' (comma separated)")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (!scenario_flags.empty()) m.scenarios = scenario_flags;
    if (!family_flags.empty()) m.families = family_flags;
    if (v->parsed()) return cmd_validate(m, out);
    if (s->parsed()) return cmd_simulate(sim_config, sim_preset, sim_seed, seed_opt->count() > 0, sim_out, out);
    if (f->parsed()) return cmd_fit(m, out);
    if (sens->parsed()) {
      if (scenario_flags.empty()) m.scenarios = {"mar", "mnar1", "mnar2", "mnar3", "mnar4"};
      return cmd_sensitivity(m, out);
    }
    if (eps->parsed()) {
      if (family_flags.empty()) m.families = {"bg"};
      return cmd_epsilon_sweep(m, grid, out);
    }
    if (sig->parsed()) return cmd_sigma1_sweep(m, grid, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const SamplerError& e) {
    err << "sampler failure in block " << e.block() << ": " << e.what() << '\n';
    return kExitSampler;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace hcea::cli
