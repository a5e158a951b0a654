#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace hcea;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hcea");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("hcea_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    const auto r = run_cli({"simulate", "--preset", "pilot", "--seed", "3", "--out", (root_ / "sim").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    data_ = (root_ / "sim" / "data.csv").string();
    times_ = (root_ / "sim" / "times.json").string();
  }
  void TearDown() override { fs::remove_all(root_); }

  std::vector<std::string> fit_args(const std::string& out) const {
    return {"--data", data_, "--times", times_, "--chains", "2", "--iters", "400", "--burnin", "200",
            "--rhat-threshold", "100", "--out", out};
  }

  fs::path root_;
  std::string data_, times_;
};

}  // namespace

TEST_F(CliTest, SimulateWritesDataGridAndConfig) {
  EXPECT_TRUE(fs::exists(root_ / "sim" / "times.json"));
  EXPECT_TRUE(fs::exists(root_ / "sim" / "config.json"));
  const auto d = load_trial_csv(data_, load_time_grid(times_));
  EXPECT_EQ(d, generate_synthetic_trial(pilot_shaped_config(3)));
}

TEST_F(CliTest, ValidatePrintsCounts) {
  const auto r = run_cli({"validate", "--data", data_, "--times", times_});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("complete cases"), std::string::npos);
  EXPECT_NE(r.out.find("ambiguous"), std::string::npos);
  EXPECT_NE(r.out.find("75"), std::string::npos);
  EXPECT_NE(r.out.find("84"), std::string::npos);
}

TEST_F(CliTest, FitWritesEveryArtifact) {
  auto args = fit_args((root_ / "out").string());
  args.insert(args.begin(), {"fit", "--family", "hurdle"});
  const auto r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto dir = root_ / "out" / "hurdle_mar";
  for (const char* f : {"draws.csv", "diagnostics.json", "dic.json", "imputations.csv", "ceac.csv", "cep.csv",
                        "summary.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_TRUE(fs::exists(root_ / "out" / "manifest.json"));
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary["family"], "hurdle");
  EXPECT_TRUE(summary.contains("dic"));
  const auto draws = slurp(dir / "draws.csv");
  EXPECT_EQ(draws.rfind("chain,draw,", 0), 0u);
  std::size_t lines = 0;
  for (char c : draws) lines += c == '\n';
  EXPECT_EQ(lines, 1u + 2u * 200u);
  const auto ceac = slurp(dir / "ceac.csv");
  std::size_t ceac_lines = 0;
  for (char c : ceac) ceac_lines += c == '\n';
  EXPECT_EQ(ceac_lines, 1u + 301u);
}

TEST_F(CliTest, RepeatedFitsAreByteIdentical) {
  for (const char* out : {"a", "b"}) {
    auto args = fit_args((root_ / out).string());
    args.insert(args.begin(), {"fit", "--family", "bg"});
    ASSERT_EQ(run_cli(args).code, 0);
  }
  for (const char* f : {"draws.csv", "diagnostics.json", "dic.json", "imputations.csv", "ceac.csv", "cep.csv",
                        "summary.json"}) {
    EXPECT_EQ(slurp(root_ / "a" / "bg_mar" / f), slurp(root_ / "b" / "bg_mar" / f)) << f;
  }
}

TEST_F(CliTest, CompleteCasesFlagMatchesFilteredFile) {
  const auto filtered = complete_cases(load_trial_csv(data_, load_time_grid(times_)));
  write_trial_csv(filtered, (root_ / "cc.csv").string());
  auto a = fit_args((root_ / "flag").string());
  a.insert(a.begin(), {"fit", "--family", "bn", "--complete-cases"});
  ASSERT_EQ(run_cli(a).code, 0);
  auto b = fit_args((root_ / "file").string());
  b[1] = (root_ / "cc.csv").string();
  b.insert(b.begin(), {"fit", "--family", "bn"});
  ASSERT_EQ(run_cli(b).code, 0);
  EXPECT_EQ(slurp(root_ / "flag" / "bn_mar" / "draws.csv"), slurp(root_ / "file" / "bn_mar" / "draws.csv"));
}

TEST_F(CliTest, FamilyAllAndEnvironmentOutputDir) {
  const auto env_dir = root_ / "env";
  ::setenv("HCEA_OUTPUT_DIR", env_dir.string().c_str(), 1);
  auto args = fit_args("");
  args.resize(args.size() - 2);
  args.insert(args.begin(), {"fit", "--family", "all"});
  const auto r = run_cli(args);
  ::unsetenv("HCEA_OUTPUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* d : {"bn_mar", "bg_mar", "hurdle_mar"}) EXPECT_TRUE(fs::exists(env_dir / d / "summary.json")) << d;
}

TEST_F(CliTest, SensitivityWritesScenarioTables) {
  auto args = fit_args((root_ / "sens").string());
  args.insert(args.begin(), "sensitivity");
  ASSERT_EQ(run_cli(args).code, 0);
  const auto summary = slurp(root_ / "sens" / "sensitivity_summary.csv");
  for (const char* s : {"mar,", "mnar1,", "mnar2,", "mnar3,", "mnar4,"}) {
    EXPECT_NE(summary.find(std::string("\n") + s + "pi_e,1,"), std::string::npos) << s;
    EXPECT_TRUE(fs::exists(root_ / "sens" / (std::string("hurdle_") + std::string(s).substr(0, std::string(s).size() - 1))));
  }
  EXPECT_EQ(slurp(root_ / "sens" / "sensitivity_ceac.csv").rfind("scenario,k,probability\n", 0), 0u);
  auto bad = fit_args((root_ / "sens2").string());
  bad.insert(bad.begin(), {"sensitivity", "--family", "bg"});
  EXPECT_EQ(run_cli(bad).code, 1);
}

TEST_F(CliTest, Sweeps) {
  auto eps = fit_args((root_ / "eps").string());
  eps.insert(eps.begin(), {"epsilon-sweep", "--grid", "0.001,0.0001"});
  ASSERT_EQ(run_cli(eps).code, 0);
  const auto table = slurp(root_ / "eps" / "epsilon_sweep.csv");
  EXPECT_EQ(table.rfind("family,epsilon,arm,mu_e_mean,mu_e_hpd90_lower,mu_e_hpd90_upper,dic\n", 0), 0u);
  EXPECT_NE(table.find("bg,0.001,1,"), std::string::npos);
  EXPECT_NE(table.find("bg," + format_double(0.0001) + ",2,"), std::string::npos);

  auto sig = fit_args((root_ / "sig").string());
  sig.insert(sig.begin(), {"sigma1-sweep", "--grid", "exact,1e-05"});
  ASSERT_EQ(run_cli(sig).code, 0);
  const auto st = slurp(root_ / "sig" / "sigma1_sweep.csv");
  EXPECT_NE(st.find("hurdle,exact,1,"), std::string::npos);
  EXPECT_NE(st.find("hurdle,1e-05,2,"), std::string::npos);
  EXPECT_TRUE(fs::exists(root_ / "sig" / "hurdle_sigma1_exact" / "summary.json"));

  auto bn = fit_args((root_ / "eps2").string());
  bn.insert(bn.begin(), {"epsilon-sweep", "--family", "bn", "--grid", "0.001"});
  EXPECT_EQ(run_cli(bn).code, 1);
  auto big = fit_args((root_ / "sig2").string());
  big.insert(big.begin(), {"sigma1-sweep", "--grid", "0.5"});
  EXPECT_EQ(run_cli(big).code, 1);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"fit"}).code, 1);
  EXPECT_EQ(run_cli({"validate", "--data", (root_ / "missing.csv").string()}).code, 1);

  auto fam = fit_args((root_ / "x").string());
  fam.insert(fam.begin(), {"fit", "--family", "lognormal"});
  EXPECT_EQ(run_cli(fam).code, 1);

  auto mnar = fit_args((root_ / "x").string());
  mnar.insert(mnar.begin(), {"fit", "--family", "bg", "--scenario", "mnar1"});
  EXPECT_EQ(run_cli(mnar).code, 1);

  std::ofstream(root_ / "bad_prior.json") << R"({"priors": {"alpha0": {"family": "uniform", "lower": 5, "upper": 6}}})";
  auto prior = fit_args((root_ / "x").string());
  prior.insert(prior.begin(), {"fit", "--family", "bn", "--model", (root_ / "bad_prior.json").string()});
  const auto pr = run_cli(prior);
  EXPECT_EQ(pr.code, 3);
  EXPECT_NE(pr.err.find("prior[1]"), std::string::npos);

  auto strict = fit_args((root_ / "y").string());
  strict[strict.size() - 3] = "1.0";
  strict.insert(strict.begin(), {"fit", "--family", "bg"});
  EXPECT_EQ(run_cli(strict).code, 2);
  EXPECT_TRUE(fs::exists(root_ / "y" / "bg_mar" / "summary.json"));

  std::ofstream(root_ / "broken.csv") << "id,arm,u0,u1,u2,u3,c1,c2,c3,age,ethnicity,employment\nz,5,1,1,1,1,1,1,1,1,1,1\n";
  const auto br = run_cli({"validate", "--data", (root_ / "broken.csv").string()});
  EXPECT_EQ(br.code, 1);
  EXPECT_NE(br.err.find("line 2"), std::string::npos);
}
