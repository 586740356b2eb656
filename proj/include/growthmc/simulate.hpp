#pragma once

#include <cstdint>
#include <filesystem>

#include "growthmc/data.hpp"
#include "growthmc/model.hpp"

namespace growthmc {

/// How synthetic patients and their pressure grids are generated.
struct SimDesign {
  int patients = 50;
  double woman_fraction = 0.4;   // women = round(patients * fraction), randomly placed
  double age_mean = 64.65;       // ages ~ N(age_mean, age_sd²) truncated to [age_min, age_max]
  double age_sd = 13.0;
  double age_min = 23.0;
  double age_max = 92.0;
  double pressure_min = 8.0;     // mmHg
  double pressure_max = 15.0;
  int obs_min = 20;              // J_i uniform on [obs_min, obs_max]
  int obs_max = 20;
  bool random_pressures = false; // sorted uniform draws instead of an even grid

  void validate() const;
};

struct SimulatedData {
  Dataset dataset;
  FixedEffects theta;
  RandomEffects u;
  std::uint64_t seed = 0;
  int resampled_patients = 0;  // random-effect redraws forced by a_i <= 0
};

/// Draws a dataset from the hierarchical model. Pressures and ages are drawn
/// first; the standardization is then fitted to them, so refitting the
/// written CSV sees the same standardized covariates. A patient whose a_i
/// comes out non-positive has its random effects redrawn (up to 100 times).
SimulatedData simulate_dataset(const FixedEffects& theta, const SimDesign& design, std::uint64_t seed);

/// Writes `<stem>.csv` and `<stem>.truth.json` next to each other.
void write_truth_json(const SimulatedData& sim, const SimDesign& design, const std::filesystem::path& path);

}  // namespace growthmc
