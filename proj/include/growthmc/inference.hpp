#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "growthmc/data.hpp"
#include "growthmc/growth_math.hpp"
#include "growthmc/model.hpp"
#include "growthmc/rng.hpp"
#include "growthmc/sampler.hpp"

namespace growthmc {

/// Empirical quantile with linear interpolation between order statistics
/// (the "type 7" rule). `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double prob);

struct ParamSummary {
  std::string name;
  std::string label;
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;  // 2.5% quantile
  double upper = 0.0;  // 97.5% quantile
};

using SummaryTable = std::vector<ParamSummary>;

/// Mean, (n-1) sd and equal-tailed 95% interval of a sample.
ParamSummary summarize_sample(const Eigen::VectorXd& sample);

/// One row per free coefficient, pooled over chains, in coefficient order.
SummaryTable summarize(const Draws& draws);

/// Pushforward sample of a curve functional. `values` has one row per valid
/// draw: (pressure mmHg, volume L) for critical points, a single volume
/// column for the asymptote. Draws with a <= 0 or c <= 0 are dropped and
/// counted in `invalid`.
struct FunctionalSample {
  Eigen::MatrixXd values;
  Eigen::Index invalid = 0;
  Eigen::Index attempted = 0;
};

/// Posterior of a fitted patient's critical point, one entry per stored draw.
FunctionalSample individual_critical_posterior(const Draws& draws, std::string_view patient_id, CriticalKind kind);

/// Pointwise mean and equal-tailed 95% band over a raw pressure grid (mmHg).
struct PredictiveBand {
  Eigen::VectorXd pressure;
  Eigen::VectorXd mean;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Grid from `lo` to `hi` inclusive in steps of `step` (hi included when it
/// lies on the grid up to rounding).
Eigen::VectorXd pressure_grid(double lo, double hi, double step);

/// Posterior predictive band for a new individual of the given profile: per
/// stored draw and replicate a fresh (u_a, u_b) ~ N(0, σ_a²) x N(0, σ_b²) and
/// independent N(0, σ²) noise at each grid point. Warns when the age lies
/// more than 3 sd from the training mean.
PredictiveBand predict_new(const Draws& draws, Gender gender, double age_years, const Eigen::VectorXd& grid_mmhg,
                           Rng& rng, int reps = 1);

/// Band for a fitted patient's future observations: the patient's own
/// (θ, u_i) draws plus N(0, σ²) noise.
PredictiveBand predict_patient(const Draws& draws, std::string_view patient_id, const Eigen::VectorXd& grid_mmhg,
                               Rng& rng, int reps = 1);

/// Credible band of the curve of a typical individual (u = 0), no noise.
PredictiveBand curve_band(const Draws& draws, Gender gender, double age_years, const Eigen::VectorXd& grid_mmhg);

enum class Functional { asymptote, IP, ADP, MAP, MDP };

Functional parse_functional(std::string_view name);
std::string_view functional_name(Functional f);

/// Population outcome for a covariate profile, random effects integrated by
/// Monte Carlo: each stored θ draw is paired with `reps` fresh u draws and
/// the functional of the resulting curve is recorded. attempted = draws x reps.
FunctionalSample population_outcome(const Draws& draws, Gender gender, double age_years, Functional functional,
                                    Rng& rng, int reps = 1);

struct DicResult {
  double dic = 0.0;
  double dbar = 0.0;  // posterior mean deviance
  double pd = 0.0;    // dbar - deviance at the posterior means
  double deviance_at_mean = 0.0;
};

/// Deviance information criterion with the conditional (θ, u) focus.
/// Throws when the deviance at the posterior means is not finite.
DicResult dic(const Draws& draws, const Dataset& dataset);

}  // namespace growthmc
