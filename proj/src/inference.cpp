#include "growthmc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "growthmc/log.hpp"

namespace growthmc {
namespace {

constexpr int kMaxRedraws = 100;
constexpr double kInvalidWarnFraction = 0.01;

Eigen::Index require_patient(const Draws& draws, std::string_view id) {
  const auto i = draws.patient_index(id);
  if (!i) throw std::invalid_argument("patient '" + std::string(id) + "' is not part of the fit");
  return *i;
}

void require_draws(const Draws& draws) {
  if (draws.total_draws() == 0) throw std::invalid_argument("no posterior draws");
}

Covariates profile(const Draws& draws, Gender gender, double age_years) {
  const double z = standardize_age(age_years, draws.standardization);
  if (std::abs(z) > 3.0) {
    std::ostringstream os;
    os << "age " << age_years << " lies " << std::abs(z) << " sd from the training mean; extrapolating";
    warn(os.str());
  }
  return {gender == Gender::Woman ? 1.0 : 0.0, z};
}

Eigen::VectorXd standardized(const Eigen::VectorXd& grid_mmhg, const Standardization& s) {
  return (grid_mmhg.array() - s.pressure_mean) / s.pressure_sd;
}

// Pointwise mean and 95% quantiles over the rows of `samples`.
PredictiveBand band_from(const Eigen::VectorXd& grid_mmhg, Eigen::MatrixXd& samples) {
  PredictiveBand band;
  band.pressure = grid_mmhg;
  const auto g = grid_mmhg.size();
  band.mean.resize(g);
  band.lower.resize(g);
  band.upper.resize(g);
  std::vector<double> column(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index j = 0; j < g; ++j) {
    for (Eigen::Index k = 0; k < samples.rows(); ++k) column[static_cast<std::size_t>(k)] = samples(k, j);
    band.mean[j] = samples.col(j).mean();
    std::sort(column.begin(), column.end());
    band.lower[j] = quantile_sorted(column, 0.025);
    band.upper[j] = quantile_sorted(column, 0.975);
  }
  return band;
}

void warn_invalid(const FunctionalSample& s, std::string_view what) {
  if (s.attempted > 0 && s.invalid > 0) {
    const double fraction = static_cast<double>(s.invalid) / static_cast<double>(s.attempted);
    std::ostringstream os;
    os << what << ": " << s.invalid << " of " << s.attempted << " draws have a <= 0 or c <= 0 and were excluded";
    if (fraction >= kInvalidWarnFraction) os << " (" << 100.0 * fraction << "%, above the 1% tolerance)";
    warn(os.str());
  }
}

std::pair<double, double> draw_effects(const FixedEffects& t, const ModelSpec& spec, Rng& rng) {
  const double ua = spec.has_random_a() ? rng.normal(0.0, t[Coef::sigma_a]) : 0.0;
  const double ub = spec.has_random_b() ? rng.normal(0.0, t[Coef::sigma_b]) : 0.0;
  return {ua, ub};
}

}  // namespace

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

ParamSummary summarize_sample(const Eigen::VectorXd& sample) {
  if (sample.size() == 0) throw std::invalid_argument("cannot summarize an empty sample");
  ParamSummary s;
  s.mean = sample.mean();
  s.sd = sample.size() > 1
             ? std::sqrt((sample.array() - s.mean).square().sum() / static_cast<double>(sample.size() - 1))
             : 0.0;
  std::vector<double> sorted(sample.data(), sample.data() + sample.size());
  std::sort(sorted.begin(), sorted.end());
  s.lower = quantile_sorted(sorted, 0.025);
  s.upper = quantile_sorted(sorted, 0.975);
  return s;
}

SummaryTable summarize(const Draws& draws) {
  require_draws(draws);
  SummaryTable table;
  for (Coef c : draws.spec.free_coefs()) {
    auto row = summarize_sample(draws.pooled(c));
    row.name = coef_name(c);
    row.label = coef_label(c);
    table.push_back(std::move(row));
  }
  return table;
}

FunctionalSample individual_critical_posterior(const Draws& draws, std::string_view patient_id,
                                               CriticalKind kind) {
  require_draws(draws);
  const auto i = require_patient(draws, patient_id);
  const auto& cov = draws.covariates[static_cast<std::size_t>(i)];
  FunctionalSample out;
  out.values.resize(draws.total_draws(), 2);
  Eigen::Index k = 0;
  draws.for_each_draw([&](const FixedEffects& t, const auto& ua, const auto& ub) {
    ++out.attempted;
    const auto p = predictors(t, ua[i], ub[i], cov);
    if (!(p.a > 0.0) || !(p.c > 0.0)) {
      ++out.invalid;
      return;
    }
    const auto pt = critical_point(p, kind);
    out.values(k, 0) = destandardize_pressure(pt.pressure, draws.standardization);
    out.values(k, 1) = pt.volume;
    ++k;
  });
  out.values.conservativeResize(k, 2);
  warn_invalid(out, "patient " + std::string(patient_id));
  return out;
}

Eigen::VectorXd pressure_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("pressure grid needs step > 0 and hi >= lo");
  const auto count = static_cast<Eigen::Index>(std::floor((hi - lo) / step + 1e-9)) + 1;
  Eigen::VectorXd grid(count);
  for (Eigen::Index k = 0; k < count; ++k) grid[k] = lo + static_cast<double>(k) * step;
  return grid;
}

PredictiveBand predict_new(const Draws& draws, Gender gender, double age_years, const Eigen::VectorXd& grid_mmhg,
                           Rng& rng, int reps) {
  require_draws(draws);
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  const Covariates cov = profile(draws, gender, age_years);
  const Eigen::VectorXd x = standardized(grid_mmhg, draws.standardization);
  Eigen::MatrixXd samples(draws.total_draws() * reps, grid_mmhg.size());
  Eigen::Index row = 0;
  draws.for_each_draw([&](const FixedEffects& t, const auto&, const auto&) {
    for (int r = 0; r < reps; ++r) {
      GrowthParamsd p{};
      for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        const auto [ua, ub] = draw_effects(t, draws.spec, rng);
        p = predictors(t, ua, ub, cov);
        if (p.a > 0.0) break;
      }
      for (Eigen::Index j = 0; j < x.size(); ++j)
        samples(row, j) = logistic_mean(p, x[j]) + t[Coef::sigma] * rng.normal();
      ++row;
    }
  });
  return band_from(grid_mmhg, samples);
}

PredictiveBand predict_patient(const Draws& draws, std::string_view patient_id, const Eigen::VectorXd& grid_mmhg,
                               Rng& rng, int reps) {
  require_draws(draws);
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  const auto i = require_patient(draws, patient_id);
  const auto& cov = draws.covariates[static_cast<std::size_t>(i)];
  const Eigen::VectorXd x = standardized(grid_mmhg, draws.standardization);
  Eigen::MatrixXd samples(draws.total_draws() * reps, grid_mmhg.size());
  Eigen::Index row = 0;
  draws.for_each_draw([&](const FixedEffects& t, const auto& ua, const auto& ub) {
    const auto p = predictors(t, ua[i], ub[i], cov);
    for (int r = 0; r < reps; ++r) {
      for (Eigen::Index j = 0; j < x.size(); ++j)
        samples(row, j) = logistic_mean(p, x[j]) + t[Coef::sigma] * rng.normal();
      ++row;
    }
  });
  return band_from(grid_mmhg, samples);
}

PredictiveBand curve_band(const Draws& draws, Gender gender, double age_years, const Eigen::VectorXd& grid_mmhg) {
  require_draws(draws);
  const Covariates cov = profile(draws, gender, age_years);
  const Eigen::VectorXd x = standardized(grid_mmhg, draws.standardization);
  Eigen::MatrixXd samples(draws.total_draws(), grid_mmhg.size());
  Eigen::Index row = 0;
  draws.for_each_draw([&](const FixedEffects& t, const auto&, const auto&) {
    const auto p = predictors(t, 0.0, 0.0, cov);
    for (Eigen::Index j = 0; j < x.size(); ++j) samples(row, j) = logistic_mean(p, x[j]);
    ++row;
  });
  return band_from(grid_mmhg, samples);
}

Functional parse_functional(std::string_view name) {
  if (name == "asymptote") return Functional::asymptote;
  if (name == "IP" || name == "ip") return Functional::IP;
  if (name == "ADP" || name == "adp") return Functional::ADP;
  if (name == "MAP" || name == "map") return Functional::MAP;
  if (name == "MDP" || name == "mdp") return Functional::MDP;
  throw std::invalid_argument("unknown functional '" + std::string(name) + "'");
}

std::string_view functional_name(Functional f) {
  switch (f) {
    case Functional::asymptote: return "asymptote";
    case Functional::IP: return "IP";
    case Functional::ADP: return "ADP";
    case Functional::MAP: return "MAP";
    case Functional::MDP: return "MDP";
  }
  return "asymptote";
}

FunctionalSample population_outcome(const Draws& draws, Gender gender, double age_years, Functional functional,
                                    Rng& rng, int reps) {
  require_draws(draws);
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  const Covariates cov = profile(draws, gender, age_years);
  const bool scalar = functional == Functional::asymptote;
  CriticalKind kind = CriticalKind::IP;
  if (!scalar) kind = parse_critical_kind(functional_name(functional));

  FunctionalSample out;
  out.values.resize(draws.total_draws() * reps, scalar ? 1 : 2);
  Eigen::Index k = 0;
  draws.for_each_draw([&](const FixedEffects& t, const auto&, const auto&) {
    for (int r = 0; r < reps; ++r) {
      ++out.attempted;
      const auto [ua, ub] = draw_effects(t, draws.spec, rng);
      const auto p = predictors(t, ua, ub, cov);
      if (scalar) {
        if (!(p.a > 0.0)) {
          ++out.invalid;
          continue;
        }
        out.values(k++, 0) = p.a;
        continue;
      }
      if (!(p.a > 0.0) || !(p.c > 0.0)) {
        ++out.invalid;
        continue;
      }
      const auto pt = critical_point(p, kind);
      out.values(k, 0) = destandardize_pressure(pt.pressure, draws.standardization);
      out.values(k, 1) = pt.volume;
      ++k;
    }
  });
  out.values.conservativeResize(k, out.values.cols());
  warn_invalid(out, "population " + std::string(functional_name(functional)));
  return out;
}

DicResult dic(const Draws& draws, const Dataset& dataset) {
  require_draws(draws);
  if (fingerprint(dataset) != draws.dataset_fingerprint)
    throw std::invalid_argument("dataset does not match the one the draws were fitted to");
  const ModelData data = ModelData::from(dataset);
  const auto n = data.patients();

  double dev_sum = 0.0;
  FixedEffects theta_mean;
  RandomEffects u_mean = RandomEffects::Zero(n, 2);
  draws.for_each_draw([&](const FixedEffects& t, const auto& ua, const auto& ub) {
    RandomEffects u(n, 2);
    u.col(0) = ua.transpose();
    u.col(1) = ub.transpose();
    dev_sum += -2.0 * log_likelihood(t, u, data);
    theta_mean.values += t.values;
    u_mean += u;
  });
  const auto count = static_cast<double>(draws.total_draws());
  theta_mean.values /= count;
  u_mean /= count;

  DicResult r;
  r.dbar = dev_sum / count;
  r.deviance_at_mean = -2.0 * log_likelihood(theta_mean, u_mean, data);
  if (!std::isfinite(r.deviance_at_mean) || !std::isfinite(r.dbar)) {
    std::ostringstream os;
    os << "deviance at the posterior means is not finite (dbar = " << r.dbar
       << ", sigma mean = " << theta_mean[Coef::sigma] << ", min a_i <= 0 likely)";
    throw std::runtime_error(os.str());
  }
  r.pd = r.dbar - r.deviance_at_mean;
  r.dic = r.dbar + r.pd;
  return r;
}

}  // namespace growthmc
