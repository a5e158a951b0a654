#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "test_support.hpp"

using namespace hcea;

namespace {

double midpoint_integral(const std::function<double(double)>& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += f(lo + (i + 0.5) * h);
  return s * h;
}

}  // namespace

TEST(BetaKernel, SymmetricShapeAtCentre) {
  // Beta(1.5, 1.5): mean 0.5, sd 0.25, density at 0.5 is 4 / pi.
  const auto shape = math::beta_shape_from_mean_sd(0.5, 0.25);
  EXPECT_NEAR(shape.a, 1.5, 1e-12);
  EXPECT_NEAR(shape.b, 1.5, 1e-12);
  EXPECT_NEAR(kernel::effect_beta(std::log(0.5), std::log(0.5), 0.5, 0.25), std::log(4.0 / std::numbers::pi), 1e-12);
}

TEST(BetaKernel, IntegratesToOneWithRequestedMoments) {
  const double phi = 0.7, sd = 0.1;
  auto dens = [&](double x) { return std::exp(kernel::effect_beta(std::log(x), std::log1p(-x), phi, sd)); };
  EXPECT_NEAR(midpoint_integral(dens, 0.0, 1.0, 200000), 1.0, 1e-6);
  const double m = midpoint_integral([&](double x) { return x * dens(x); }, 0.0, 1.0, 200000);
  const double v = midpoint_integral([&](double x) { return (x - phi) * (x - phi) * dens(x); }, 0.0, 1.0, 200000);
  EXPECT_NEAR(m, phi, 1e-6);
  EXPECT_NEAR(std::sqrt(v), sd, 1e-6);
}

TEST(BetaKernel, InvalidScaleIsOffSupport) {
  EXPECT_EQ(kernel::effect_beta(std::log(0.5), std::log(0.5), 0.5, 0.6), -INFINITY);
}

TEST(GammaKernel, MatchesClosedForm) {
  // mean 200, sd 100: shape 4, rate 0.02.
  const double c = 150.0;
  const double expected = 4.0 * std::log(0.02) + 3.0 * std::log(c) - 0.02 * c - std::log(6.0);
  EXPECT_NEAR(kernel::cost_gamma(c, std::log(c), 0.5, 0.5, std::log(200.0), 0.7, 100.0), expected, 1e-10);
  const auto g = math::gamma_from_mean_sd(200.0, 100.0);
  EXPECT_NEAR(g.shape, 4.0, 1e-12);
  EXPECT_NEAR(g.rate, 0.02, 1e-12);
}

TEST(GammaKernel, LogLinkMeanFromQuadrature) {
  const double b0 = std::log(250.0), b1 = 0.5, e = 0.9, mu = 0.8, sc = 80.0;
  auto dens = [&](double x) { return std::exp(kernel::cost_gamma(x, std::log(x), e, mu, b0, b1, sc)); };
  const double mass = midpoint_integral(dens, 0.0, 3000.0, 300000);
  const double mean = midpoint_integral([&](double x) { return x * dens(x); }, 0.0, 3000.0, 300000);
  EXPECT_NEAR(mass, 1.0, 1e-6);
  EXPECT_NEAR(mean, 250.0 * std::exp(0.05), 1e-3);
}

TEST(NormalCost, ConditionalVarianceAndFactorisation) {
  const double mu_e = 0.8, se = 0.2, b0 = 300.0, b1 = 150.0, sc = 100.0;
  CostModelParams p{b0, b1, sc};
  EXPECT_NEAR(conditional_cost_variance(p, se), 10000.0 - 0.04 * 22500.0, 1e-9);
  // log f(e) + log f(c | e) equals the bivariate Normal with cov(e, c) = beta1 se^2.
  const double e = 0.65, c = 250.0;
  const double lhs = kernel::effect_normal(e, mu_e, se) + kernel::cost_normal(c, e, mu_e, b0, b1, sc, se);
  const double s11 = se * se, s12 = b1 * se * se, s22 = sc * sc;
  const double det = s11 * s22 - s12 * s12;
  const double x = e - mu_e, y = c - b0;
  const double q = (s22 * x * x - 2.0 * s12 * x * y + s11 * y * y) / det;
  const double rhs = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * q;
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(NormalCost, SlopeIdentityBySimulation) {
  const double mu_e = 0.7, se = 0.15, b0 = 400.0, b1 = 200.0, sc = 120.0;
  const double tau = std::sqrt(sc * sc - se * se * b1 * b1);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z(0.0, 1.0);
  const int n = 100000;
  double se_sum = 0, sc_sum = 0, see = 0, sec = 0, scc = 0;
  for (int i = 0; i < n; ++i) {
    const double e = mu_e + se * z(gen);
    const double c = b0 + b1 * (e - mu_e) + tau * z(gen);
    se_sum += e;
    sc_sum += c;
    see += e * e;
    sec += e * c;
    scc += c * c;
  }
  const double me = se_sum / n, mc = sc_sum / n;
  const double ve = see / n - me * me, vc = scc / n - mc * mc, cov = sec / n - me * mc;
  EXPECT_NEAR(cov / ve, b1, 0.02 * b1);
  EXPECT_NEAR(std::sqrt(vc), sc, 0.01 * sc);
  EXPECT_NEAR(mc, b0, 1.5);
}

TEST(NormalCost, NonPositiveVarianceThrows) {
  CostModelParams p{0.0, 10.0, 1.0};
  EXPECT_THROW(log_likelihood_cost(p, Family::BivariateNormal, {1.0, 0.5, 0.5}, 0.5), SupportError);
}

TEST(EffectLikelihood, SupportChecks) {
  EffectModelParams p{0.5, 0.0, 0.1};
  EXPECT_THROW(log_likelihood_effect(p, Family::BetaGamma, {1.0, 0.0, 0}), SupportError);
  EXPECT_THROW(log_likelihood_effect(p, Family::BetaGamma, {0.0, 0.0, 0}), SupportError);
  EXPECT_THROW(log_likelihood_effect(p, Family::Hurdle, {0.9, 0.0, 1}), SupportError);
  EXPECT_THROW(log_likelihood_effect(p, Family::Hurdle, {1.0, 0.0, 0}), SupportError);
  EXPECT_THROW(log_likelihood_effect({0.0, 0.0, 0.6}, Family::BetaGamma, {0.5, 0.0, 0}), SupportError);
  EXPECT_THROW(log_likelihood_effect({0.0, 0.0, 0.0}, Family::BivariateNormal, {0.5, 0.0, 0}), SupportError);
  EXPECT_NO_THROW(log_likelihood_effect(p, Family::BivariateNormal, {1.3, 0.0, 0}));
}

TEST(EffectLikelihood, HurdleOnesComponent) {
  EffectModelParams p{0.5, 0.0, 0.1};
  EXPECT_EQ(log_likelihood_effect(p, Family::Hurdle, {1.0, 0.2, 1}), 0.0);
  const auto ones = degenerate_ones_component(PointMassMode::degenerate_beta(1e-5));
  EXPECT_FALSE(ones.exact);
  EXPECT_GE(ones.shape.a / ones.shape.scale, 0.999998);
  EXPECT_NEAR(log_likelihood_effect(p, Family::Hurdle, {1.0, 0.0, 1}, ones),
              math::beta_lpdf(kDegenerateOnesMean, ones.shape.a, ones.shape.b), 1e-9);
  EXPECT_GT(ones.log_density_of_one(), 0.0);
  EXPECT_THROW(degenerate_ones_component(PointMassMode::degenerate_beta(1e-2)), InputError);
  EXPECT_THROW(degenerate_ones_component(PointMassMode::degenerate_beta(0.0)), InputError);
}

TEST(EffectLikelihood, HurdleNonOnesUseBetaWithLogitLink) {
  EffectModelParams p{math::logit(0.75), 0.3, 0.1};
  const double e = 0.8, u = 0.1;
  const double phi = math::expit(math::logit(0.75) + 0.03);
  const auto s = math::beta_shape_from_mean_sd(phi, 0.1);
  EXPECT_NEAR(log_likelihood_effect(p, Family::Hurdle, {e, u, 0}), math::beta_lpdf(e, s.a, s.b), 1e-12);
}

TEST(Structural, BernoulliLogit) {
  const std::vector<double> zero{0.0, 0.0};
  const std::vector<double> row{1.0, 2.5};
  EXPECT_NEAR(log_likelihood_structural(zero, row, 1), std::log(0.5), 1e-14);
  EXPECT_NEAR(log_likelihood_structural(zero, row, 0), std::log(0.5), 1e-14);
  const std::vector<double> coef{math::logit(0.42)};
  const std::vector<double> one{1.0};
  EXPECT_NEAR(log_likelihood_structural(coef, one, 1), std::log(0.42), 1e-12);
  EXPECT_NEAR(log_likelihood_structural(coef, one, 0), std::log(0.58), 1e-12);
  EXPECT_NEAR(math::bernoulli_logit_lpmf(true, 800.0), 0.0, 1e-300);
  EXPECT_TRUE(std::isfinite(math::bernoulli_logit_lpmf(false, 800.0)));
}

TEST(Structural, VectorisedEqualsRowSum) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> z;
  const std::vector<double> coef{0.3, -1.1, 0.4};
  std::vector<double> design;
  std::vector<int> d;
  double expected = 0.0;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> row{1.0, z(gen), z(gen)};
    d.push_back(i % 3 == 0);
    expected += log_likelihood_structural(coef, row, d.back());
    design.insert(design.end(), row.begin(), row.end());
  }
  EXPECT_NEAR(log_likelihood_structural(coef, design, d), expected, 1e-10);
  const std::vector<double> bad(7, 0.0);
  EXPECT_THROW(log_likelihood_structural(coef, bad, d), InputError);
}

TEST(MixtureMean, Formula) {
  EXPECT_NEAR(marginal_mean_qalys(0.4, 0.8), 0.88, 1e-15);
  EXPECT_EQ(marginal_mean_qalys(0.0, 0.6), 0.6);
  EXPECT_EQ(marginal_mean_qalys(1.0, 0.6), 1.0);
}

TEST(Priors, Defaults) {
  EXPECT_NEAR(Prior::logistic(0.0, 1.0).log_density(0.0), std::log(0.25), 1e-14);
  EXPECT_NEAR(kVagueCoefficientSd, 316.23, 0.005);
  EXPECT_NEAR(1.0 / (kVagueCoefficientSd * kVagueCoefficientSd), 1e-5, 1e-18);
  const auto vague = PriorConfig::default_for("alpha0", Family::Hurdle);
  EXPECT_EQ(vague.kind, Prior::Kind::Normal);
  EXPECT_EQ(PriorConfig::default_for("gamma0", Family::Hurdle).kind, Prior::Kind::Logistic);
  EXPECT_EQ(PriorConfig::default_for("sigma_e", Family::BetaGamma).kind, Prior::Kind::BetaSdBound);
  EXPECT_EQ(PriorConfig::default_for("sigma_e", Family::BivariateNormal).kind, Prior::Kind::Uniform);
  const auto bound = Prior::beta_sd_bound();
  EXPECT_EQ(bound.log_density(0.51, 0.5), -INFINITY);
  EXPECT_NEAR(bound.log_density(0.2, 0.5), std::log(2.0), 1e-14);
  EXPECT_EQ(Prior::uniform(0.0, 1000.0).log_density(-1.0), -INFINITY);
  EXPECT_NEAR(Prior::half_cauchy(2.0).log_density(0.0), std::log(1.0 / std::numbers::pi), 1e-12);
}

TEST(BetaParameterisation, RoundTrip) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (int k = 0; k < 200; ++k) {
    const double m = u(gen);
    const double sd = std::sqrt(m * (1.0 - m)) * u(gen) * 0.99;
    const auto s = math::beta_shape_from_mean_sd(m, sd);
    ASSERT_TRUE(s.valid());
    const auto back = math::beta_mean_sd_from_shape(s.a, s.b);
    EXPECT_NEAR(back.mean, m, 1e-10);
    EXPECT_NEAR(back.sd, sd, 1e-10);
  }
  EXPECT_FALSE(math::beta_shape_from_mean_sd(0.5, 0.5).valid());
}

TEST(Logit, Inverse) {
  for (double p : {1e-8, 0.1, 0.5, 0.9, 1.0 - 1e-8}) EXPECT_NEAR(math::expit(math::logit(p)), p, 1e-12);
  EXPECT_EQ(math::expit(-1000.0), 0.0);
  EXPECT_EQ(math::expit(1000.0), 1.0);
}
