#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "growthmc/inference.hpp"
#include "growthmc/log.hpp"
#include "growthmc/simulate.hpp"

using namespace growthmc;

namespace {

struct CapturedWarnings {
  std::vector<std::string> seen;
  WarningSink previous;
  CapturedWarnings() {
    previous = set_warning_sink([this](std::string_view m) { seen.emplace_back(m); });
  }
  ~CapturedWarnings() { set_warning_sink(previous); }
};

// Every stored draw equal to (theta, u).
Draws point_mass(const Dataset& d, const FixedEffects& theta, const RandomEffects& u, int chains = 2,
                 Eigen::Index per_chain = 5) {
  Draws draws;
  draws.config.chains = chains;
  const auto n = static_cast<Eigen::Index>(d.size());
  for (int k = 0; k < chains; ++k) {
    Chain ch;
    ch.index = k;
    ch.theta = theta.values.transpose().replicate(per_chain, 1);
    ch.u_a = u.col(0).transpose().replicate(per_chain, 1);
    ch.u_b = u.col(1).transpose().replicate(per_chain, 1);
    ch.log_posterior = Eigen::VectorXd::Zero(per_chain);
    draws.chains.push_back(ch);
  }
  const auto data = ModelData::from(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    draws.patient_ids.push_back(d.patients[static_cast<std::size_t>(i)].id);
    draws.covariates.push_back(data.covariates(i));
  }
  draws.standardization = d.standardization;
  draws.dataset_fingerprint = fingerprint(d);
  return draws;
}

SimulatedData simulated(std::uint64_t seed, int patients, int obs_min, int obs_max) {
  SimDesign design;
  design.patients = patients;
  design.obs_min = obs_min;
  design.obs_max = obs_max;
  return simulate_dataset(FixedEffects::reference_posterior_means(), design, seed);
}

Draws quick_fit(const Dataset& d, std::uint64_t seed, long iterations = 3000) {
  McmcConfig config;
  config.chains = 2;
  config.iterations = iterations;
  config.thin = 5;
  config.seed = seed;
  return run(d, PriorSpec{}, {}, config);
}

}  // namespace

TEST_CASE("quantiles and sample summaries") {
  const std::vector<double> s{1, 2, 3, 4};
  CHECK(quantile_sorted(s, 0.0) == 1);
  CHECK(quantile_sorted(s, 1.0) == 4);
  CHECK(quantile_sorted(s, 0.5) == 2.5);
  CHECK(quantile_sorted(s, 0.25) == doctest::Approx(1.75));
  CHECK_THROWS(quantile_sorted(std::vector<double>{}, 0.5));

  Eigen::VectorXd three(3);
  three << 1, 2, 3;
  const auto sum = summarize_sample(three);
  CHECK(sum.mean == 2);
  CHECK(sum.sd == 1);

  Rng rng(12);
  Eigen::VectorXd u(10000);
  for (Eigen::Index k = 0; k < u.size(); ++k) u[k] = rng.uniform();
  const auto us = summarize_sample(u);
  CHECK(std::abs(us.lower - 0.025) < 0.01);
  CHECK(std::abs(us.upper - 0.975) < 0.01);
}

TEST_CASE("summary rows follow the coefficient table") {
  const auto sim = simulated(1, 6, 5, 5);
  const auto draws = point_mass(sim.dataset, sim.theta, sim.u);
  const auto table = summarize(draws);
  const char* labels[] = {"β₀^(a)", "β_W^(a)", "β_Age^(a)", "σ_a", "β₀^(b)", "β_W^(b)",
                          "β_Age^(b)", "σ_b", "β₀^(c)", "β_W^(c)", "σ"};
  REQUIRE(table.size() == 11);
  for (std::size_t k = 0; k < table.size(); ++k) CHECK(table[k].label == labels[k]);
  CHECK(table[0].mean == doctest::Approx(5.597));
  CHECK(table[0].sd == 0.0);
}

TEST_CASE("critical points of a point-mass posterior") {
  const auto sim = simulated(2, 5, 4, 4);
  RandomEffects u = RandomEffects::Zero(5, 2);
  auto d = sim.dataset;
  // Patient 0 becomes a man of exactly the mean age.
  d.patients[0].gender = Gender::Man;
  d.patients[0].age = d.standardization.age_mean;
  const auto theta = FixedEffects::reference_posterior_means();
  auto draws = point_mass(d, theta, u);
  draws.covariates[0] = {0.0, 0.0};
  const auto expected = critical_points_mmhg(GrowthParamsd{5.597, 0.922, 2.184}, d.standardization);
  for (auto kind : {CriticalKind::IP, CriticalKind::ADP, CriticalKind::MAP, CriticalKind::MDP}) {
    const auto s = individual_critical_posterior(draws, d.patients[0].id, kind);
    REQUIRE(s.values.rows() == 10);
    CHECK(s.invalid == 0);
    CHECK((s.values.col(0).array() == s.values(0, 0)).all());
    CHECK(s.values(0, 0) == doctest::Approx(expected[kind].pressure).epsilon(1e-13));
    CHECK(s.values(0, 1) == doctest::Approx(expected[kind].volume).epsilon(1e-13));
  }
  CHECK_THROWS(individual_critical_posterior(draws, "nobody", CriticalKind::IP));
}

TEST_CASE("IP volume is half the asymptote in every draw") {
  const auto sim = simulated(3, 12, 10, 10);
  const auto draws = quick_fit(sim.dataset, 3, 600);
  const auto i = *draws.patient_index(sim.dataset.patients[4].id);
  const auto s = individual_critical_posterior(draws, sim.dataset.patients[4].id, CriticalKind::IP);
  Eigen::Index k = 0;
  draws.for_each_draw([&](const FixedEffects& t, const auto& ua, const auto& ub) {
    const auto p = predictors(t, ua[i], ub[i], draws.covariates[static_cast<std::size_t>(i)]);
    if (p.a > 0 && p.c > 0) CHECK(s.values(k++, 1) == p.a / 2);
  });
  CHECK(k == s.values.rows());
}

TEST_CASE("invalid pushforward draws are dropped and counted") {
  CapturedWarnings warnings;
  const auto sim = simulated(4, 3, 3, 3);
  auto theta = FixedEffects::reference_posterior_means();
  theta[Coef::beta0_c] = -1.0;
  const auto draws = point_mass(sim.dataset, theta, RandomEffects::Zero(3, 2));
  const auto s = individual_critical_posterior(draws, sim.dataset.patients[0].id, CriticalKind::ADP);
  CHECK(s.values.rows() == 0);
  CHECK(s.invalid == 10);
  CHECK(s.attempted == 10);
  CHECK_FALSE(warnings.seen.empty());
}

TEST_CASE("pressure grid") {
  const auto g = pressure_grid(0, 16, 0.5);
  CHECK(g.size() == 33);
  CHECK(g[32] == 16.0);
  CHECK(pressure_grid(8, 8, 1).size() == 1);
  CHECK_THROWS(pressure_grid(0, 1, 0));
}

TEST_CASE("noise-free point mass collapses the predictive band onto the curve") {
  const auto sim = simulated(5, 6, 4, 4);
  auto theta = FixedEffects::reference_posterior_means();
  theta[Coef::sigma] = theta[Coef::sigma_a] = theta[Coef::sigma_b] = 0.0;
  const auto draws = point_mass(sim.dataset, theta, RandomEffects::Zero(6, 2));
  const auto grid = pressure_grid(0, 16, 0.5);
  Rng rng(1);
  const auto band = predict_new(draws, Gender::Woman, 64.56, grid, rng, 3);
  const double z = standardize_age(64.56, sim.dataset.standardization);
  const auto p = predictors(theta, 0, 0, Gender::Woman, z);
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    const double curve = logistic_mean(p, standardize_pressure(grid[j], sim.dataset.standardization));
    CHECK(band.mean[j] == doctest::Approx(curve).epsilon(1e-14));
    CHECK(band.lower[j] == band.upper[j]);
    CHECK(band.lower[j] == doctest::Approx(curve).epsilon(1e-14));
  }
}

TEST_CASE("predictive band is wider than the mean-curve band") {
  const auto sim = simulated(6, 20, 8, 8);
  const auto draws = quick_fit(sim.dataset, 6);
  const auto grid = pressure_grid(0, 16, 0.5);
  Rng rng(2);
  const auto pred = predict_new(draws, Gender::Man, 64.65, grid, rng, 5);
  const auto curve = curve_band(draws, Gender::Man, 64.65, grid);
  for (Eigen::Index j = 0; j < grid.size(); ++j)
    CHECK(pred.upper[j] - pred.lower[j] > curve.upper[j] - curve.lower[j]);

  // Far to the right the mean curve sits on the asymptote.
  const auto far = curve_band(draws, Gender::Man, 64.65, pressure_grid(60, 60, 1));
  const double a_mean = draws.pooled(Coef::beta0_a).mean() +
                        draws.pooled(Coef::betaA_a).mean() * standardize_age(64.65, draws.standardization);
  CHECK(far.mean[0] == doctest::Approx(a_mean).epsilon(1e-3));
}

TEST_CASE("patients with more observations get narrower ADP intervals") {
  SimDesign design;
  design.patients = 24;
  design.obs_min = 1;
  design.obs_max = 40;
  const auto sim = simulate_dataset(FixedEffects::reference_posterior_means(), design, 8);
  const auto draws = quick_fit(sim.dataset, 8, 4000);
  std::size_t few = 0, many = 0;
  for (std::size_t i = 0; i < sim.dataset.size(); ++i) {
    const auto j = sim.dataset.patients[i].observations.size();
    if (j < sim.dataset.patients[few].observations.size()) few = i;
    if (j > sim.dataset.patients[many].observations.size()) many = i;
  }
  REQUIRE(sim.dataset.patients[few].observations.size() < sim.dataset.patients[many].observations.size());
  CapturedWarnings quiet;
  const auto width = [&](std::size_t i) {
    const auto s = individual_critical_posterior(draws, sim.dataset.patients[i].id, CriticalKind::ADP);
    const auto v = summarize_sample(s.values.col(1));
    return v.upper - v.lower;
  };
  CHECK(width(few) > width(many));
}

TEST_CASE("without random effects the population outcome is the fixed-effect pushforward") {
  const auto sim = simulated(9, 5, 4, 4);
  Draws draws;
  {
    McmcConfig config;
    config.chains = 2;
    config.iterations = 200;
    config.thin = 10;
    ModelSpec spec;
    spec.pin(Coef::sigma_a, 0.0);
    spec.pin(Coef::sigma_b, 0.0);
    draws = run(sim.dataset, PriorSpec{}, spec, config);
  }
  Rng rng(3);
  const auto s = population_outcome(draws, Gender::Woman, 70, Functional::ADP, rng, 2);
  const double z = standardize_age(70, draws.standardization);
  Eigen::Index k = 0;
  draws.for_each_draw([&](const FixedEffects& t, const auto&, const auto&) {
    const auto pt = critical_point(predictors(t, 0, 0, Gender::Woman, z), CriticalKind::ADP);
    for (int r = 0; r < 2; ++r, ++k) {
      CHECK(s.values(k, 0) == destandardize_pressure(pt.pressure, draws.standardization));
      CHECK(s.values(k, 1) == pt.volume);
    }
  });
  CHECK(s.attempted == draws.total_draws() * 2);

  Rng rng2(3);
  const auto asym = population_outcome(draws, Gender::Man, 70, Functional::asymptote, rng2, 1);
  CHECK(asym.values.cols() == 1);
  CHECK(parse_functional("asymptote") == Functional::asymptote);
  CHECK(functional_name(parse_functional("MDP")) == "MDP");
}

TEST_CASE("extrapolated ages warn") {
  const auto sim = simulated(10, 6, 3, 3);
  const auto draws = point_mass(sim.dataset, sim.theta, sim.u);
  CapturedWarnings warnings;
  Rng rng(1);
  predict_new(draws, Gender::Man, 200, pressure_grid(8, 9, 1), rng);
  CHECK_FALSE(warnings.seen.empty());
}

TEST_CASE("DIC of a point mass has no effective parameters") {
  const auto sim = simulated(11, 8, 6, 6);
  const auto draws = point_mass(sim.dataset, sim.theta, sim.u);
  const auto r = dic(draws, sim.dataset);
  CHECK(std::abs(r.pd) < 1e-9);
  CHECK(r.dic == doctest::Approx(r.dbar).epsilon(1e-12));
  CHECK(r.dbar == doctest::Approx(-2 * log_likelihood(sim.theta, sim.u, sim.dataset)).epsilon(1e-12));
}

TEST_CASE("DIC components") {
  const auto sim = simulated(12, 10, 6, 6);
  const auto draws = quick_fit(sim.dataset, 12, 500);
  const auto r = dic(draws, sim.dataset);
  CHECK(r.dic == r.dbar + r.pd);
  double sum = 0.0;
  for (const auto& ch : draws.chains)
    for (Eigen::Index k = 0; k < ch.size(); ++k) sum += -2 * log_likelihood(ch.theta_at(k), ch.u_at(k), sim.dataset);
  CHECK(std::abs(r.dbar - sum / static_cast<double>(draws.total_draws())) < 1e-10 * std::abs(r.dbar));
  CHECK(r.pd > 0);

  const auto other = simulated(13, 10, 6, 6);
  CHECK_THROWS_AS(dic(draws, other.dataset), std::invalid_argument);
}

TEST_CASE("a pure-noise covariate does not buy a large DIC improvement") {
  auto truth = FixedEffects::reference_posterior_means();
  truth[Coef::betaA_b] = 0.0;
  SimDesign design;
  design.patients = 30;
  design.obs_min = design.obs_max = 10;
  ModelSpec without;
  without.exclude(Coef::betaA_b);
  McmcConfig config;
  config.chains = 2;
  config.iterations = 4000;
  config.thin = 4;
  int acceptable = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto sim = simulate_dataset(truth, design, 40 + seed);
    config.seed = seed;
    const double with_noise = dic(run(sim.dataset, PriorSpec{}, {}, config), sim.dataset).dic;
    const double reduced = dic(run(sim.dataset, PriorSpec{}, without, config), sim.dataset).dic;
    acceptable += with_noise - reduced >= -2.0 ? 1 : 0;
  }
  CHECK(acceptable >= 8);
}
