#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "growthmc/sampler.hpp"

namespace growthmc {

class ZeroVarianceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Biased sample autocorrelations ρ(0..max_lag), normalized by the lag-0
/// autocovariance. Throws ZeroVarianceError for a constant series and
/// std::invalid_argument when max_lag >= series length.
Eigen::VectorXd autocorrelation(const Eigen::VectorXd& series, int max_lag);

/// Autocovariances at every lag (divisor N), computed by FFT.
Eigen::VectorXd autocovariance(const Eigen::VectorXd& series);

/// Multi-chain effective sample size. Chain-averaged autocovariances are
/// combined with the between-chain variance and the sum of autocorrelations
/// is truncated by Geyer's initial monotone positive sequence. Chains must
/// have equal length >= 4. Capped at the total number of draws.
double effective_sample_size(std::span<const Eigen::VectorXd> chains);

/// Split potential scale reduction: each chain is halved (a middle draw is
/// dropped when the length is odd) and the between/within variance ratio is
/// taken over the 2M half-chains.
double gelman_rubin(std::span<const Eigen::VectorXd> chains);

struct ParamDiagnostics {
  std::string name;
  double ess = 0.0;
  double rhat = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd acf;  // chain-averaged, lags 0..min(50, N-1)
  bool zero_variance = false;
  bool ok = false;
};

struct DiagnosticsReport {
  std::vector<ParamDiagnostics> params;
  double ess_threshold = 100.0;
  double rhat_threshold = 1.05;
  bool pass = false;

  std::vector<std::string> failures() const;
};

/// Evaluates every free θ coordinate and every active random effect.
/// A parameter passes when ESS > ess_threshold and R-hat < rhat_threshold;
/// constant series are reported as failures rather than thrown.
DiagnosticsReport check_convergence(const Draws& draws, double ess_threshold = 100.0,
                                    double rhat_threshold = 1.05);

}  // namespace growthmc
