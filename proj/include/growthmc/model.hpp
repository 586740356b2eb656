#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "growthmc/data.hpp"
#include "growthmc/growth_math.hpp"

namespace growthmc {

/// Fixed-effect coordinates, in the row order of the usual posterior summary
/// table: the a-block, the b-block, then the c-block and the residual sd.
enum class Coef : int {
  beta0_a,
  betaW_a,
  betaA_a,
  sigma_a,
  beta0_b,
  betaW_b,
  betaA_b,
  sigma_b,
  beta0_c,
  betaW_c,
  sigma,
};

inline constexpr int kNumCoefs = 11;

inline constexpr std::array<Coef, kNumCoefs> kAllCoefs = {
    Coef::beta0_a, Coef::betaW_a, Coef::betaA_a, Coef::sigma_a, Coef::beta0_b, Coef::betaW_b,
    Coef::betaA_b, Coef::sigma_b, Coef::beta0_c, Coef::betaW_c, Coef::sigma};

constexpr int index(Coef c) { return static_cast<int>(c); }

/// ASCII identifier ("beta0_a", "sigma", ...), used in files and flags.
std::string_view coef_name(Coef c);
/// Typeset label ("β₀^(a)", "σ", ...), used in summary tables.
std::string_view coef_label(Coef c);
std::optional<Coef> parse_coef(std::string_view name);

/// Which curve parameter a regression coefficient feeds, and through which
/// covariate (intercept, woman indicator, standardized age).
enum class Block { a, b, c, none };
enum class Covariate { intercept, woman, age, none };
Block coef_block(Coef c);
Covariate coef_covariate(Coef c);

using ThetaVector = Eigen::Matrix<double, kNumCoefs, 1>;

/// The eleven population-level parameters.
struct FixedEffects {
  ThetaVector values = ThetaVector::Zero();

  double& operator[](Coef c) { return values[index(c)]; }
  double operator[](Coef c) const { return values[index(c)]; }

  /// Posterior means reported for the laparoscopy cohort; a convenient
  /// realistic default for simulation.
  static FixedEffects reference_posterior_means();
};

/// Row i holds (u_a, u_b) for patient i of the dataset, in dataset order.
using RandomEffects = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Per-patient covariates on the model scale.
struct Covariates {
  double woman = 0.0;
  double std_age = 0.0;
};

/// a = β0a + u_a + βWa·I_W + βAa·age, b likewise, c = β0c + βWc·I_W.
GrowthParamsd predictors(const FixedEffects& theta, double u_a, double u_b, const Covariates& cov);

inline GrowthParamsd predictors(const FixedEffects& theta, double u_a, double u_b, Gender gender,
                                double std_age) {
  return predictors(theta, u_a, u_b, Covariates{gender == Gender::Woman ? 1.0 : 0.0, std_age});
}

/// Flattened, standardized view of a dataset for likelihood evaluation.
struct ModelData {
  Eigen::VectorXd x;                 // standardized pressure, all observations
  Eigen::VectorXd y;                 // volume, all observations
  std::vector<Eigen::Index> offset;  // patient i owns [offset[i], offset[i+1])
  Eigen::VectorXd woman;
  Eigen::VectorXd std_age;

  Eigen::Index patients() const { return woman.size(); }
  Eigen::Index observations() const { return y.size(); }
  Covariates covariates(Eigen::Index i) const { return {woman[i], std_age[i]}; }

  static ModelData from(const Dataset& dataset);
};

/// Independent scalar prior: uniform on the open interval (p1, p2) or normal
/// with mean p1 and sd p2.
struct ScalarPrior {
  enum class Kind { uniform, normal };
  Kind kind = Kind::normal;
  double p1 = 0.0;
  double p2 = 10.0;

  static ScalarPrior uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static ScalarPrior normal(double mean, double sd) { return {Kind::normal, mean, sd}; }

  double log_density(double x) const;
  bool in_support(double x) const;
  void validate() const;

  /// "uniform(0, 10)" / "normal(0, 10)".
  std::string to_string() const;
  static ScalarPrior parse(std::string_view text);
};

struct PriorSpec {
  std::array<ScalarPrior, kNumCoefs> coef;

  /// U(0,10) on every sd, U(0,20) on β0a, U(0,10) on β0c, N(0,10²) on every
  /// other regression coefficient.
  PriorSpec();

  ScalarPrior& operator[](Coef c) { return coef[index(c)]; }
  const ScalarPrior& operator[](Coef c) const { return coef[index(c)]; }

  void validate() const;
};

/// Which coordinates are sampled. A coefficient pinned to a value is held
/// there; pinning a covariate coefficient to 0 removes it from the model and
/// pinning σ_a (σ_b) to 0 removes the a (b) random effect.
struct ModelSpec {
  std::array<std::optional<double>, kNumCoefs> pinned{};

  bool is_free(Coef c) const { return !pinned[index(c)].has_value(); }
  void pin(Coef c, double value) { pinned[index(c)] = value; }
  void exclude(Coef c) { pin(c, 0.0); }

  bool has_random_a() const { return !(pinned[index(Coef::sigma_a)] == 0.0); }
  bool has_random_b() const { return !(pinned[index(Coef::sigma_b)] == 0.0); }

  /// Copies pinned values into theta.
  void apply(FixedEffects& theta) const;
  std::vector<Coef> free_coefs() const;
};

/// Σ_ij log N(y_ij | μ_ij, σ²). Returns -inf when some a_i <= 0 or σ <= 0.
/// Throws std::invalid_argument when u does not have one row per patient.
double log_likelihood(const FixedEffects& theta, const RandomEffects& u, const ModelData& data);
double log_likelihood(const FixedEffects& theta, const RandomEffects& u, const Dataset& dataset);

/// Log density of patient i's observations alone.
double patient_log_likelihood(const FixedEffects& theta, double u_a, double u_b, const ModelData& data,
                              Eigen::Index i);

/// Independent priors on the free coefficients plus the random-effect
/// densities N(0, σ_a²), N(0, σ_b²). Out-of-support values give -inf.
double log_prior(const FixedEffects& theta, const RandomEffects& u, const PriorSpec& prior,
                 const ModelSpec& spec = {});

double log_posterior(const FixedEffects& theta, const RandomEffects& u, const ModelData& data,
                     const PriorSpec& prior, const ModelSpec& spec = {});
double log_posterior(const FixedEffects& theta, const RandomEffects& u, const Dataset& dataset,
                     const PriorSpec& prior, const ModelSpec& spec = {});

}  // namespace growthmc
