#include "growthmc/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

#include <Eigen/Cholesky>

#include "growthmc/log.hpp"

namespace growthmc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kHalfLogTwoPi = 0.91893853320467274178032973640562;
constexpr int kMaxInitAttempts = 1000;
constexpr long kRefreshInterval = 1000;

int column(Block b) { return b == Block::a ? 0 : 1; }

}  // namespace

void McmcConfig::validate() const {
  if (chains < 1) throw std::invalid_argument("chains must be >= 1");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (thin < 1) throw std::invalid_argument("thin must be >= 1");
  if (burn_in_sweeps() < 0) throw std::invalid_argument("burn-in must be >= 0");
  if (stored_draws() < 1) throw std::invalid_argument("iterations / thin must be >= 1");
  if (adapt_window < 1) throw std::invalid_argument("adapt window must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw std::invalid_argument("target acceptance must lie in (0, 1)");
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
}

McmcConfig McmcConfig::long_run() {
  McmcConfig c;
  c.chains = 3;
  c.iterations = 1000000;
  c.burn_in = 1000000;
  c.thin = 1000;
  return c;
}

ProposalScales ProposalScales::initial(Eigen::Index patients) {
  ProposalScales s;
  s.theta.setConstant(0.1);
  s.shift.setConstant(0.1);
  s.u_scale = Eigen::VectorXd::Constant(patients, 0.2);
  s.u_shape.assign(static_cast<std::size_t>(patients), Eigen::Matrix2d::Identity());
  return s;
}

void AcceptanceStats::reset() {
  for (auto& c : theta) c = {};
  for (auto& c : shift) c = {};
  for (auto& c : u) c = {};
}

void AcceptanceStats::merge(const AcceptanceStats& other) {
  for (int k = 0; k < kNumCoefs; ++k) {
    theta[k].accepted += other.theta[k].accepted;
    theta[k].attempted += other.theta[k].attempted;
    shift[k].accepted += other.shift[k].accepted;
    shift[k].attempted += other.shift[k].attempted;
  }
  for (std::size_t i = 0; i < u.size() && i < other.u.size(); ++i) {
    u[i].accepted += other.u[i].accepted;
    u[i].attempted += other.u[i].attempted;
  }
}

void adapt_scales(const AcceptanceStats& window, ProposalScales& scales, AdaptSchedule& schedule) {
  if (schedule.frozen) {
    warn("adapt_scales called after burn-in; proposal scales left unchanged");
    return;
  }
  ++schedule.batch;
  const double delta = std::min(0.05, 1.0 / std::sqrt(static_cast<double>(schedule.batch)));
  auto nudge = [&](const AcceptanceCounter& c, double& scale) {
    if (c.attempted == 0) return;
    const double rate = c.rate();
    if (rate > schedule.target) {
      scale *= std::exp(delta);
    } else if (rate < schedule.target) {
      scale *= std::exp(-delta);
    }
  };
  for (int k = 0; k < kNumCoefs; ++k) {
    nudge(window.theta[k], scales.theta[k]);
    nudge(window.shift[k], scales.shift[k]);
  }
  for (std::size_t i = 0; i < window.u.size(); ++i) nudge(window.u[i], scales.u_scale[static_cast<Eigen::Index>(i)]);
}

// ---------------------------------------------------------------------------

MwgKernel::MwgKernel(const ModelData& data, const PriorSpec& prior, const ModelSpec& spec, SamplerState start,
                     ProposalScales scales)
    : data_(data),
      prior_(prior),
      spec_(spec),
      state_(std::move(start)),
      scales_(std::move(scales)),
      stats_(data.patients()) {
  const auto n = data_.patients();
  const auto total = data_.observations();
  if (state_.u.rows() != n) throw std::invalid_argument("initial random effects do not match the data");
  a_.resize(n);
  b_.resize(n);
  c_.resize(n);
  syy_.resize(n);
  sys_.resize(n);
  sss_.resize(n);
  ssr_.resize(n);
  sys_new_.resize(n);
  sss_new_.resize(n);
  ssr_new_.resize(n);
  par_new_.resize(n);
  sig_.resize(total);
  sig_new_.resize(total);
  moments_.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto seg = data_.y.segment(data_.offset[i], data_.offset[i + 1] - data_.offset[i]);
    syy_[i] = seg.squaredNorm();
  }
  spec_.apply(state_.theta);
  refresh();
}

double MwgKernel::log_lik(double sigma, double ssr_total) const {
  if (!(sigma > 0.0)) return kNegInf;
  const auto count = static_cast<double>(data_.observations());
  return -count * (kHalfLogTwoPi + std::log(sigma)) - 0.5 * ssr_total / (sigma * sigma);
}

double MwgKernel::re_log_density(double sd, double sum_sq) const {
  if (!(sd > 0.0)) return kNegInf;
  const auto n = static_cast<double>(data_.patients());
  return -n * (kHalfLogTwoPi + std::log(sd)) - 0.5 * sum_sq / (sd * sd);
}

double MwgKernel::covariate(Coef c, Eigen::Index i) const {
  switch (coef_covariate(c)) {
    case Covariate::intercept: return 1.0;
    case Covariate::woman: return data_.woman[i];
    case Covariate::age: return data_.std_age[i];
    case Covariate::none: break;
  }
  return 0.0;
}

double MwgKernel::patient_ssr(Eigen::Index i, double a, double b, double c, bool store) {
  double sys = 0.0;
  double sss = 0.0;
  double ssr = 0.0;
  for (Eigen::Index k = data_.offset[i]; k < data_.offset[i + 1]; ++k) {
    const double s = sigmoid(b + c * data_.x[k]);
    const double y = data_.y[k];
    const double r = y - a * s;
    sys += y * s;
    sss += s * s;
    ssr += r * r;
    if (store) sig_new_[k] = s;
  }
  sys_new_[i] = sys;
  sss_new_[i] = sss;
  return ssr;
}

void MwgKernel::refresh() {
  const auto n = data_.patients();
  auto& t = state_.theta;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto p = predictors(t, state_.u(i, 0), state_.u(i, 1), data_.covariates(i));
    a_[i] = p.a;
    b_[i] = p.b;
    c_[i] = p.c;
    ssr_[i] = patient_ssr(i, p.a, p.b, p.c, true);
  }
  sig_ = sig_new_;
  sys_ = sys_new_;
  sss_ = sss_new_;
  ssr_total_ = ssr_.sum();
  sum_ua2_ = state_.u.col(0).squaredNorm();
  sum_ub2_ = state_.u.col(1).squaredNorm();
  theta_prior_ = 0.0;
  for (Coef c : kAllCoefs)
    if (spec_.is_free(c)) theta_prior_ += prior_[c].log_density(t[c]);
}

double MwgKernel::log_posterior() const {
  if ((a_.array() <= 0.0).any()) return kNegInf;
  double lp = log_lik(state_.theta[Coef::sigma], ssr_total_) + theta_prior_;
  if (spec_.has_random_a()) lp += re_log_density(state_.theta[Coef::sigma_a], sum_ua2_);
  if (spec_.has_random_b()) lp += re_log_density(state_.theta[Coef::sigma_b], sum_ub2_);
  return lp;
}

double MwgKernel::cache_error() const {
  const double fresh = growthmc::log_posterior(state_.theta, state_.u, data_, prior_, spec_);
  const double cached = log_posterior();
  if (fresh == cached) return 0.0;
  return std::abs(fresh - cached);
}

void MwgKernel::update_a_coef(Coef c, Rng& rng) {
  auto& theta = state_.theta;
  const double delta = scales_.theta[index(c)] * rng.normal();
  const double proposal = theta[c] + delta;
  const double prior_old = prior_[c].log_density(theta[c]);
  const double prior_new = prior_[c].log_density(proposal);
  if (prior_new == kNegInf) {
    stats_.theta[index(c)].record(false);
    return;
  }
  const auto n = data_.patients();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = a_[i] + delta * covariate(c, i);
    if (!(a > 0.0)) {
      stats_.theta[index(c)].record(false);
      return;
    }
    const double ssr = std::max(0.0, syy_[i] - 2.0 * a * sys_[i] + a * a * sss_[i]);
    ssr_new_[i] = ssr;
    total += ssr;
  }
  const double sigma = theta[Coef::sigma];
  const double log_ratio = log_lik(sigma, total) - log_lik(sigma, ssr_total_) + prior_new - prior_old;
  const bool ok = metropolis_accept(log_ratio, rng);
  stats_.theta[index(c)].record(ok);
  if (!ok) return;
  theta[c] = proposal;
  for (Eigen::Index i = 0; i < n; ++i) a_[i] += delta * covariate(c, i);
  ssr_.swap(ssr_new_);
  ssr_total_ = total;
  theta_prior_ += prior_new - prior_old;
}

void MwgKernel::update_shape_coef(Coef c, Rng& rng) {
  auto& theta = state_.theta;
  const bool is_b = coef_block(c) == Block::b;
  const double delta = scales_.theta[index(c)] * rng.normal();
  const double proposal = theta[c] + delta;
  const double prior_old = prior_[c].log_density(theta[c]);
  const double prior_new = prior_[c].log_density(proposal);
  if (prior_new == kNegInf) {
    stats_.theta[index(c)].record(false);
    return;
  }
  const auto n = data_.patients();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = covariate(c, i);
    if (z == 0.0) {
      total += ssr_[i];
      continue;
    }
    const double b = is_b ? b_[i] + delta * z : b_[i];
    const double cc = is_b ? c_[i] : c_[i] + delta * z;
    par_new_[i] = is_b ? b : cc;
    ssr_new_[i] = patient_ssr(i, a_[i], b, cc, true);
    total += ssr_new_[i];
  }
  const double sigma = theta[Coef::sigma];
  const double log_ratio = log_lik(sigma, total) - log_lik(sigma, ssr_total_) + prior_new - prior_old;
  const bool ok = metropolis_accept(log_ratio, rng);
  stats_.theta[index(c)].record(ok);
  if (!ok) return;
  theta[c] = proposal;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (covariate(c, i) == 0.0) continue;
    (is_b ? b_ : c_)[i] = par_new_[i];
    const auto begin = data_.offset[i];
    const auto len = data_.offset[i + 1] - begin;
    sig_.segment(begin, len) = sig_new_.segment(begin, len);
    sys_[i] = sys_new_[i];
    sss_[i] = sss_new_[i];
    ssr_[i] = ssr_new_[i];
  }
  ssr_total_ = total;
  theta_prior_ += prior_new - prior_old;
}

void MwgKernel::update_sd(Coef c, Rng& rng) {
  auto& theta = state_.theta;
  const double proposal = theta[c] + scales_.theta[index(c)] * rng.normal();
  const double prior_old = prior_[c].log_density(theta[c]);
  const double prior_new = prior_[c].log_density(proposal);
  if (prior_new == kNegInf || !(proposal > 0.0)) {
    stats_.theta[index(c)].record(false);
    return;
  }
  double log_ratio = prior_new - prior_old;
  if (c == Coef::sigma) {
    log_ratio += log_lik(proposal, ssr_total_) - log_lik(theta[c], ssr_total_);
  } else {
    const double sum_sq = c == Coef::sigma_a ? sum_ua2_ : sum_ub2_;
    log_ratio += re_log_density(proposal, sum_sq) - re_log_density(theta[c], sum_sq);
  }
  const bool ok = metropolis_accept(log_ratio, rng);
  stats_.theta[index(c)].record(ok);
  if (!ok) return;
  theta[c] = proposal;
  theta_prior_ += prior_new - prior_old;
}

void MwgKernel::update_u(Eigen::Index i, Rng& rng) {
  const bool on_a = spec_.has_random_a();
  const bool on_b = spec_.has_random_b();
  const auto& theta = state_.theta;
  const Eigen::Vector2d z(rng.normal(), rng.normal());
  Eigen::Vector2d d = scales_.u_scale[i] * (scales_.u_shape[static_cast<std::size_t>(i)] * z);
  if (!on_a) d[0] = 0.0;
  if (!on_b) d[1] = 0.0;

  const double ua = state_.u(i, 0) + d[0];
  const double ub = state_.u(i, 1) + d[1];
  const double a = a_[i] + d[0];
  auto& counter = stats_.u[static_cast<std::size_t>(i)];
  if (!(a > 0.0)) {
    counter.record(false);
    return;
  }
  const bool b_moves = d[1] != 0.0;
  double ssr = 0.0;
  if (b_moves) {
    ssr = patient_ssr(i, a, b_[i] + d[1], c_[i], true);
  } else {
    ssr = std::max(0.0, syy_[i] - 2.0 * a * sys_[i] + a * a * sss_[i]);
  }
  const double sigma = theta[Coef::sigma];
  double log_ratio = -0.5 * (ssr - ssr_[i]) / (sigma * sigma);
  if (on_a) {
    const double sa = theta[Coef::sigma_a];
    log_ratio -= 0.5 * (ua * ua - state_.u(i, 0) * state_.u(i, 0)) / (sa * sa);
  }
  if (on_b) {
    const double sb = theta[Coef::sigma_b];
    log_ratio -= 0.5 * (ub * ub - state_.u(i, 1) * state_.u(i, 1)) / (sb * sb);
  }
  const bool ok = metropolis_accept(log_ratio, rng);
  counter.record(ok);
  if (ok) {
    sum_ua2_ += ua * ua - state_.u(i, 0) * state_.u(i, 0);
    sum_ub2_ += ub * ub - state_.u(i, 1) * state_.u(i, 1);
    state_.u(i, 0) = ua;
    state_.u(i, 1) = ub;
    a_[i] = a;
    ssr_total_ += ssr - ssr_[i];
    ssr_[i] = ssr;
    if (b_moves) {
      b_[i] += d[1];
      const auto begin = data_.offset[i];
      const auto len = data_.offset[i + 1] - begin;
      sig_.segment(begin, len) = sig_new_.segment(begin, len);
      sys_[i] = sys_new_[i];
      sss_[i] = sss_new_[i];
    }
  }
  if (track_) {
    auto& m = moments_[static_cast<std::size_t>(i)];
    const Eigen::Vector2d x(state_.u(i, 0), state_.u(i, 1));
    ++m.n;
    const Eigen::Vector2d before = x - m.mean;
    m.mean += before / static_cast<double>(m.n);
    m.m2 += before * (x - m.mean).transpose();
  }
}

void MwgKernel::shift_move(Coef c, Rng& rng) {
  auto& theta = state_.theta;
  const int col = column(coef_block(c));
  const double sd = theta[col == 0 ? Coef::sigma_a : Coef::sigma_b];
  const double delta = scales_.shift[index(c)] * rng.normal();
  const double proposal = theta[c] + delta;
  const double prior_old = prior_[c].log_density(theta[c]);
  const double prior_new = prior_[c].log_density(proposal);
  if (prior_new == kNegInf) {
    stats_.shift[index(c)].record(false);
    return;
  }
  const auto n = data_.patients();
  double sum_sq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = state_.u(i, col) - delta * covariate(c, i);
    sum_sq += v * v;
  }
  double& current = col == 0 ? sum_ua2_ : sum_ub2_;
  const double log_ratio = prior_new - prior_old - 0.5 * (sum_sq - current) / (sd * sd);
  const bool ok = metropolis_accept(log_ratio, rng);
  stats_.shift[index(c)].record(ok);
  if (!ok) return;
  theta[c] = proposal;
  for (Eigen::Index i = 0; i < n; ++i) state_.u(i, col) -= delta * covariate(c, i);
  current = sum_sq;
  theta_prior_ += prior_new - prior_old;
}

void MwgKernel::sweep(Rng& rng) {
  for (Coef c : kAllCoefs) {
    if (!spec_.is_free(c)) continue;
    switch (coef_block(c)) {
      case Block::a: update_a_coef(c, rng); break;
      case Block::b:
      case Block::c: update_shape_coef(c, rng); break;
      case Block::none: update_sd(c, rng); break;
    }
  }
  if (spec_.has_random_a() || spec_.has_random_b()) {
    for (Eigen::Index i = 0; i < data_.patients(); ++i) update_u(i, rng);
  }
  for (Coef c : kAllCoefs) {
    const Block block = coef_block(c);
    if (!spec_.is_free(c)) continue;
    if ((block == Block::a && spec_.has_random_a()) || (block == Block::b && spec_.has_random_b()))
      shift_move(c, rng);
  }
}

void MwgKernel::update_u_shapes(long min_samples) {
  if (!(spec_.has_random_a() && spec_.has_random_b())) return;
  for (std::size_t i = 0; i < moments_.size(); ++i) {
    const auto& m = moments_[i];
    if (m.n < std::max(min_samples, 3L)) continue;
    Eigen::Matrix2d cov = m.m2 / static_cast<double>(m.n - 1);
    cov.diagonal().array() += 1e-12;
    const Eigen::LLT<Eigen::Matrix2d> llt(cov);
    if (llt.info() != Eigen::Success) continue;
    Eigen::Matrix2d l = llt.matrixL();
    const double det = l(0, 0) * l(1, 1);
    if (!(det > 0.0) || !std::isfinite(det)) continue;
    scales_.u_shape[i] = l / std::sqrt(det);
  }
}

// ---------------------------------------------------------------------------

SamplerState init_state(const ModelData& data, const PriorSpec& prior, const ModelSpec& spec, Rng& rng) {
  SamplerState s;
  s.u = RandomEffects::Zero(data.patients(), 2);
  for (int attempt = 0; attempt < kMaxInitAttempts; ++attempt) {
    for (Coef c : kAllCoefs) {
      const auto& p = prior[c];
      if (p.kind == ScalarPrior::Kind::uniform) {
        const double w = p.p2 - p.p1;
        s.theta[c] = p.p1 + w * rng.uniform(0.05, 0.45);
      } else {
        const double spread = (coef_covariate(c) == Covariate::intercept ? 1.0 : 0.5) * std::min(1.0, p.p2);
        s.theta[c] = p.p1 + spread * rng.normal();
      }
    }
    spec.apply(s.theta);
    if (std::isfinite(log_posterior(s.theta, s.u, data, prior, spec))) return s;
  }
  throw std::runtime_error("initialization failed: no start with finite log posterior in " +
                           std::to_string(kMaxInitAttempts) + " attempts");
}

SamplerState init_state(const Dataset& dataset, const PriorSpec& prior, const ModelSpec& spec, Rng& rng) {
  return init_state(ModelData::from(dataset), prior, spec, rng);
}

FixedEffects Chain::theta_at(Eigen::Index k) const {
  FixedEffects t;
  t.values = theta.row(k).transpose();
  return t;
}

RandomEffects Chain::u_at(Eigen::Index k) const {
  RandomEffects u(u_a.cols(), 2);
  u.col(0) = u_a.row(k).transpose();
  u.col(1) = u_b.row(k).transpose();
  return u;
}

std::optional<Eigen::Index> Draws::patient_index(std::string_view id) const {
  for (std::size_t i = 0; i < patient_ids.size(); ++i)
    if (patient_ids[i] == id) return static_cast<Eigen::Index>(i);
  return std::nullopt;
}

Eigen::VectorXd Draws::pooled(Coef c) const {
  Eigen::VectorXd out(total_draws());
  Eigen::Index k = 0;
  for (const auto& ch : chains) {
    out.segment(k, ch.size()) = ch.theta.col(index(c));
    k += ch.size();
  }
  return out;
}

int effective_threads(const McmcConfig& config) {
  int threads = config.threads > 0 ? config.threads : config.chains;
  if (const char* env = std::getenv("GROWTHMC_THREADS")) {
    int cap = 0;
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), cap);
    if (ec == std::errc() && ptr == text.data() + text.size() && cap > 0) {
      threads = std::min(threads, cap);
    } else {
      warn("ignoring GROWTHMC_THREADS='" + std::string(text) + "'");
    }
  }
  return std::clamp(threads, 1, std::max(1, config.chains));
}

Chain run_chain(const ModelData& data, const PriorSpec& prior, const ModelSpec& spec, const McmcConfig& config,
                int chain_index) {
  Rng rng(config.seed, static_cast<std::uint64_t>(chain_index));
  MwgKernel kernel(data, prior, spec, init_state(data, prior, spec, rng), ProposalScales::initial(data.patients()));

  AdaptSchedule schedule;
  schedule.target = config.target_accept;
  const long burn = config.burn_in_sweeps();
  for (long t = 0; t < burn; ++t) {
    kernel.track_u_moments(t >= burn / 4);
    kernel.sweep(rng);
    if ((t + 1) % config.adapt_window == 0) {
      adapt_scales(kernel.stats(), kernel.scales(), schedule);
      if (t >= burn / 2) kernel.update_u_shapes();
      kernel.stats().reset();
    }
    if ((t + 1) % kRefreshInterval == 0) kernel.refresh();
  }
  schedule.frozen = true;
  kernel.track_u_moments(false);
  kernel.stats().reset();

  const Eigen::Index stored = config.stored_draws();
  const Eigen::Index n = data.patients();
  Chain chain;
  chain.index = chain_index;
  chain.theta.resize(stored, kNumCoefs);
  chain.u_a.resize(stored, n);
  chain.u_b.resize(stored, n);
  chain.log_posterior.resize(stored);

  Eigen::Index k = 0;
  for (long t = 0; t < config.iterations; ++t) {
    kernel.sweep(rng);
    if ((t + 1) % kRefreshInterval == 0) {
#ifndef NDEBUG
      const double err = kernel.cache_error();
      if (!(err <= 1e-6 * (1.0 + std::abs(kernel.log_posterior()))))
        throw std::logic_error("sampler cache drifted from the log posterior by " + std::to_string(err));
#endif
      kernel.refresh();
    }
    if ((t + 1) % config.thin == 0 && k < stored) {
      const auto& s = kernel.state();
      const double lp = kernel.log_posterior();
      if (!std::isfinite(lp))
        throw std::logic_error("internal invariant violated: stored state has non-finite log posterior");
      chain.theta.row(k) = s.theta.values.transpose();
      chain.u_a.row(k) = s.u.col(0).transpose();
      chain.u_b.row(k) = s.u.col(1).transpose();
      chain.log_posterior[k] = lp;
      ++k;
    }
  }
  for (int c = 0; c < kNumCoefs; ++c) chain.acceptance_theta[c] = kernel.stats().theta[c].rate();
  chain.acceptance_u.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) chain.acceptance_u[i] = kernel.stats().u[static_cast<std::size_t>(i)].rate();
  return chain;
}

Draws run(const Dataset& dataset, const PriorSpec& prior, const ModelSpec& spec, const McmcConfig& config) {
  config.validate();
  prior.validate();
  const ModelData data = ModelData::from(dataset);

  Draws draws;
  draws.config = config;
  draws.prior = prior;
  draws.spec = spec;
  draws.standardization = dataset.standardization;
  draws.dataset_fingerprint = fingerprint(dataset);
  for (Eigen::Index i = 0; i < data.patients(); ++i) {
    draws.patient_ids.push_back(dataset.patients[static_cast<std::size_t>(i)].id);
    draws.covariates.push_back(data.covariates(i));
  }

  const int n_chains = config.chains;
  draws.chains.resize(static_cast<std::size_t>(n_chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_chains));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < n_chains; k = next++) {
      try {
        draws.chains[static_cast<std::size_t>(k)] = run_chain(data, prior, spec, config, k);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
  };
  const int threads = effective_threads(config);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return draws;
}

}  // namespace growthmc
