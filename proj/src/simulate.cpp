#include "growthmc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "growthmc/log.hpp"
#include "growthmc/rng.hpp"

namespace growthmc {
namespace {

constexpr int kMaxRedraws = 100;

std::string patient_id(int i, int n) {
  const int width = std::max(3, static_cast<int>(std::to_string(n).size()));
  std::string digits = std::to_string(i + 1);
  return "P" + std::string(width - digits.size(), '0') + digits;
}

double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
  if (!(sd > 0.0)) return std::clamp(mean, lo, hi);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double v = rng.normal(mean, sd);
    if (v >= lo && v <= hi) return v;
  }
  return rng.uniform(lo, hi);
}

}  // namespace

void SimDesign::validate() const {
  if (patients < 1) throw std::invalid_argument("design needs at least one patient");
  if (!(woman_fraction >= 0.0 && woman_fraction <= 1.0))
    throw std::invalid_argument("woman_fraction must lie in [0, 1]");
  if (!(age_min > 0.0 && age_min <= age_max && age_max <= 120.0))
    throw std::invalid_argument("age bounds must satisfy 0 < age_min <= age_max <= 120");
  if (!(age_sd >= 0.0)) throw std::invalid_argument("age_sd must be non-negative");
  if (!(pressure_min >= 0.0 && pressure_min < pressure_max && pressure_max <= 50.0))
    throw std::invalid_argument("pressure range must satisfy 0 <= min < max <= 50");
  if (obs_min < 1 || obs_max < obs_min) throw std::invalid_argument("need 1 <= obs_min <= obs_max");
}

SimulatedData simulate_dataset(const FixedEffects& theta, const SimDesign& design, std::uint64_t seed) {
  design.validate();
  Rng rng(seed, 0);
  const int n = design.patients;

  std::vector<bool> woman(n, false);
  const int women = static_cast<int>(std::lround(design.woman_fraction * n));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  for (int k = 0; k < women; ++k) woman[order[k]] = true;

  std::vector<Patient> patients(n);
  for (int i = 0; i < n; ++i) {
    auto& p = patients[i];
    p.id = patient_id(i, n);
    p.gender = woman[i] ? Gender::Woman : Gender::Man;
    p.age = truncated_normal(rng, design.age_mean, design.age_sd, design.age_min, design.age_max);
    const int span = design.obs_max - design.obs_min + 1;
    const int j = design.obs_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
    std::vector<double> grid(j);
    if (design.random_pressures) {
      for (auto& g : grid) g = rng.uniform(design.pressure_min, design.pressure_max);
      std::sort(grid.begin(), grid.end());
    } else if (j == 1) {
      grid[0] = 0.5 * (design.pressure_min + design.pressure_max);
    } else {
      const double step = (design.pressure_max - design.pressure_min) / (j - 1);
      for (int k = 0; k < j; ++k) grid[k] = design.pressure_min + k * step;
    }
    for (double g : grid) p.observations.push_back({g, 0.0});
  }

  SimulatedData sim;
  sim.dataset = make_dataset(std::move(patients));
  sim.theta = theta;
  sim.seed = seed;
  sim.u.setZero(n, 2);

  const ModelData covs = ModelData::from(sim.dataset);
  for (int i = 0; i < n; ++i) {
    GrowthParamsd params{};
    int attempt = 0;
    for (;; ++attempt) {
      sim.u(i, 0) = rng.normal(0.0, theta[Coef::sigma_a]);
      sim.u(i, 1) = rng.normal(0.0, theta[Coef::sigma_b]);
      params = predictors(theta, sim.u(i, 0), sim.u(i, 1), covs.covariates(i));
      if (params.a > 0.0) break;
      if (attempt + 1 >= kMaxRedraws)
        throw std::runtime_error("simulation drew a_i <= 0 for patient " + sim.dataset.patients[i].id +
                                 " " + std::to_string(kMaxRedraws) + " times");
    }
    if (attempt > 0) {
      ++sim.resampled_patients;
      warn("patient " + sim.dataset.patients[i].id + ": random effects redrawn " + std::to_string(attempt) +
           " time(s) because a_i <= 0");
    }
    auto& obs = sim.dataset.patients[i].observations;
    for (auto& o : obs) {
      const double x = standardize_pressure(o.pressure, sim.dataset.standardization);
      o.volume = logistic_mean(params, x) + rng.normal(0.0, theta[Coef::sigma]);
    }
  }
  return sim;
}

void write_truth_json(const SimulatedData& sim, const SimDesign& design, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["seed"] = sim.seed;
  auto& theta = j["theta"];
  theta = nlohmann::ordered_json::object();
  for (Coef c : kAllCoefs) theta[std::string(coef_name(c))] = sim.theta[c];
  auto& u = j["random_effects"];
  u = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < sim.dataset.size(); ++i) {
    u.push_back({{"patient_id", sim.dataset.patients[i].id},
                 {"u_a", sim.u(static_cast<Eigen::Index>(i), 0)},
                 {"u_b", sim.u(static_cast<Eigen::Index>(i), 1)}});
  }
  const auto& s = sim.dataset.standardization;
  j["standardization"] = {{"pressure_mean", s.pressure_mean},
                          {"pressure_sd", s.pressure_sd},
                          {"age_mean", s.age_mean},
                          {"age_sd", s.age_sd}};
  j["design"] = {{"patients", design.patients},
                 {"woman_fraction", design.woman_fraction},
                 {"age_mean", design.age_mean},
                 {"age_sd", design.age_sd},
                 {"age_min", design.age_min},
                 {"age_max", design.age_max},
                 {"pressure_min", design.pressure_min},
                 {"pressure_max", design.pressure_max},
                 {"obs_min", design.obs_min},
                 {"obs_max", design.obs_max},
                 {"random_pressures", design.random_pressures}};
  j["resampled_patients"] = sim.resampled_patients;
  j["dataset_fingerprint"] = fingerprint(sim.dataset);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataErrorKind::Io, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace growthmc
