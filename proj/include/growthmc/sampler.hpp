#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "growthmc/data.hpp"
#include "growthmc/model.hpp"
#include "growthmc/rng.hpp"

namespace growthmc {

struct McmcConfig {
  int chains = 3;
  long iterations = 20000;
  std::optional<long> burn_in;  // defaults to `iterations`
  long thin = 10;
  std::uint64_t seed = 1;
  int adapt_window = 50;
  double target_accept = 0.44;
  int threads = 0;  // 0: one per chain, capped by GROWTHMC_THREADS

  long burn_in_sweeps() const { return burn_in.value_or(iterations); }
  long stored_draws() const { return iterations / thin; }
  void validate() const;

  /// Three chains of 10^6 sweeps after 10^6 burn-in sweeps, thinned by 1000.
  static McmcConfig long_run();
};

struct SamplerState {
  FixedEffects theta;
  RandomEffects u;
};

struct AcceptanceCounter {
  long accepted = 0;
  long attempted = 0;

  void record(bool ok) {
    ++attempted;
    accepted += ok ? 1 : 0;
  }
  double rate() const { return attempted > 0 ? static_cast<double>(accepted) / attempted : 0.0; }
};

/// Proposal sizes for one chain. `theta` holds the random-walk sd of each
/// coordinate update; `shift` the sd of the translation moves that move an
/// a- or b-coefficient together with the random effects so that every
/// patient's curve is unchanged. Each (u_a, u_b) pair is proposed as
/// u_scale[i] * u_shape[i] * z with z ~ N(0, I) and u_shape lower triangular
/// with unit determinant.
struct ProposalScales {
  ThetaVector theta;
  ThetaVector shift;
  Eigen::VectorXd u_scale;
  std::vector<Eigen::Matrix2d> u_shape;

  static ProposalScales initial(Eigen::Index patients);
};

struct AcceptanceStats {
  std::array<AcceptanceCounter, kNumCoefs> theta{};
  std::array<AcceptanceCounter, kNumCoefs> shift{};
  std::vector<AcceptanceCounter> u;

  explicit AcceptanceStats(Eigen::Index patients = 0) : u(static_cast<std::size_t>(patients)) {}
  void reset();
  void merge(const AcceptanceStats& other);
};

/// Robbins-Monro state shared by successive adapt_scales calls.
struct AdaptSchedule {
  long batch = 0;
  double target = 0.44;
  bool frozen = false;  // set once burn-in ends
};

/// Nudges every proposal scale by exp(±δ), δ = min(0.05, 1/sqrt(batch)),
/// toward the target acceptance rate of the window just finished. After the
/// schedule is frozen this only warns.
void adapt_scales(const AcceptanceStats& window, ProposalScales& scales, AdaptSchedule& schedule);

inline bool metropolis_accept(double log_ratio, Rng& rng) {
  const double u = rng.uniform();
  return std::log(u) < log_ratio;
}

/// One Gaussian random-walk Metropolis update of a scalar under an arbitrary
/// log density. `log_density` caches f(x) and is updated on acceptance.
template <typename LogDensity>
bool rw_metropolis_step(double& x, double& log_density, double scale, LogDensity&& f, Rng& rng) {
  const double proposal = x + scale * rng.normal();
  const double lp = f(proposal);
  if (metropolis_accept(lp - log_density, rng)) {
    x = proposal;
    log_density = lp;
    return true;
  }
  return false;
}

/// Metropolis-within-Gibbs sweep over (θ, u) with cached per-patient
/// sufficient statistics. A coordinate update recomputes only the patients it
/// touches: a-block coefficients need no exponentials at all, since
/// Σ(y - a s)² expands in cached Σy², Σys and Σs².
class MwgKernel {
 public:
  MwgKernel(const ModelData& data, const PriorSpec& prior, const ModelSpec& spec, SamplerState start,
            ProposalScales scales);

  /// One full sweep: every free θ coordinate, every (u_a, u_b) pair, then the
  /// curve-preserving translation moves.
  void sweep(Rng& rng);

  const SamplerState& state() const { return state_; }
  double log_posterior() const;

  ProposalScales& scales() { return scales_; }
  const ProposalScales& scales() const { return scales_; }
  AcceptanceStats& stats() { return stats_; }
  const AcceptanceStats& stats() const { return stats_; }

  /// Accumulates running moments of each (u_a, u_b) pair for shape adaptation.
  void track_u_moments(bool on) { track_ = on; }
  /// Resets each pair's proposal shape to the normalized Cholesky factor of
  /// its tracked covariance once at least `min_samples` are available.
  void update_u_shapes(long min_samples = 100);

  /// |cached log posterior - fresh evaluation|.
  double cache_error() const;
  /// Rebuilds every cache from the current state.
  void refresh();

 private:
  struct Moments {
    long n = 0;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d m2 = Eigen::Matrix2d::Zero();
  };

  double log_lik(double sigma, double ssr_total) const;
  double re_log_density(double sd, double sum_sq) const;
  double covariate(Coef c, Eigen::Index i) const;
  double patient_ssr(Eigen::Index i, double a, double b, double c, bool store);

  void update_a_coef(Coef c, Rng& rng);
  void update_shape_coef(Coef c, Rng& rng);
  void update_sd(Coef c, Rng& rng);
  void update_u(Eigen::Index i, Rng& rng);
  void shift_move(Coef c, Rng& rng);

  const ModelData& data_;
  PriorSpec prior_;
  ModelSpec spec_;
  SamplerState state_;
  ProposalScales scales_;
  AcceptanceStats stats_;

  Eigen::VectorXd a_, b_, c_;
  Eigen::VectorXd sig_, sig_new_;
  Eigen::VectorXd syy_, sys_, sss_, ssr_;
  Eigen::VectorXd sys_new_, sss_new_, ssr_new_, par_new_;
  double ssr_total_ = 0.0;
  double sum_ua2_ = 0.0;
  double sum_ub2_ = 0.0;
  double theta_prior_ = 0.0;

  bool track_ = false;
  std::vector<Moments> moments_;
};

/// Overdispersed start: uniform-prior coordinates drawn from the lower half
/// of their support, normal-prior coordinates from N(mean, 1) (intercepts) or
/// N(mean, 0.5²) (covariate slopes), pinned ones at their value, u = 0.
/// Redraws until the log posterior is finite (at most 1000 attempts).
SamplerState init_state(const ModelData& data, const PriorSpec& prior, const ModelSpec& spec, Rng& rng);
SamplerState init_state(const Dataset& dataset, const PriorSpec& prior, const ModelSpec& spec, Rng& rng);

/// Stored output of one chain. Row k of each matrix is stored draw k.
struct Chain {
  int index = 0;
  Eigen::MatrixXd theta;  // draws x kNumCoefs
  Eigen::MatrixXd u_a;    // draws x patients
  Eigen::MatrixXd u_b;
  Eigen::VectorXd log_posterior;
  ThetaVector acceptance_theta = ThetaVector::Zero();  // sampling-phase rates
  Eigen::VectorXd acceptance_u;

  Eigen::Index size() const { return theta.rows(); }
  FixedEffects theta_at(Eigen::Index k) const;
  RandomEffects u_at(Eigen::Index k) const;
};

/// Multi-chain posterior sample plus everything needed to interpret it
/// without the sampler: configuration, priors, model variant, patient
/// covariates and the standardization used in the fit.
struct Draws {
  std::vector<Chain> chains;
  McmcConfig config;
  PriorSpec prior;
  ModelSpec spec;
  std::vector<std::string> patient_ids;
  std::vector<Covariates> covariates;  // standardized, per patient
  Standardization standardization;
  std::uint64_t dataset_fingerprint = 0;

  Eigen::Index draws_per_chain() const { return chains.empty() ? 0 : chains.front().size(); }
  Eigen::Index total_draws() const { return draws_per_chain() * static_cast<Eigen::Index>(chains.size()); }
  std::optional<Eigen::Index> patient_index(std::string_view id) const;

  /// Every chain's values of one coefficient, chains concatenated.
  Eigen::VectorXd pooled(Coef c) const;

  /// Calls f(theta, u_a, u_b) for every stored draw, chain by chain, where
  /// u_a and u_b are row views over patients.
  template <typename F>
  void for_each_draw(F&& f) const {
    for (const auto& ch : chains) {
      for (Eigen::Index k = 0; k < ch.size(); ++k) {
        FixedEffects t;
        t.values = ch.theta.row(k).transpose();
        f(t, ch.u_a.row(k), ch.u_b.row(k));
      }
    }
  }
};

/// Number of worker threads for `chains` chains: config.threads (or one per
/// chain), capped by the GROWTHMC_THREADS environment variable.
int effective_threads(const McmcConfig& config);

/// Runs one chain: init, adaptive burn-in (discarded), frozen sampling.
/// Chain k draws from Rng(config.seed, k).
Chain run_chain(const ModelData& data, const PriorSpec& prior, const ModelSpec& spec, const McmcConfig& config,
                int chain_index);

/// Runs every chain, in parallel where allowed. Output is identical for any
/// thread count.
Draws run(const Dataset& dataset, const PriorSpec& prior, const ModelSpec& spec, const McmcConfig& config);

}  // namespace growthmc
