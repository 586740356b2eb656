#include "growthmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <unsupported/Eigen/FFT>

namespace growthmc {
namespace {

constexpr int kReportLags = 50;

void check_equal_lengths(std::span<const Eigen::VectorXd> chains, Eigen::Index min_length) {
  if (chains.empty()) throw std::invalid_argument("no chains supplied");
  const auto n = chains.front().size();
  for (const auto& c : chains)
    if (c.size() != n) throw std::invalid_argument("chains have different lengths");
  if (n < min_length)
    throw std::invalid_argument("chains need at least " + std::to_string(min_length) + " draws");
}

double sample_variance(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

Eigen::VectorXd autocorrelation(const Eigen::VectorXd& series, int max_lag) {
  const auto n = series.size();
  if (max_lag < 0 || max_lag >= n) throw std::invalid_argument("max_lag must lie in [0, series length)");
  const Eigen::VectorXd centred = series.array() - series.mean();
  const double c0 = centred.squaredNorm();
  if (!(c0 > 0.0)) throw ZeroVarianceError("series has zero variance");
  Eigen::VectorXd rho(max_lag + 1);
  rho[0] = 1.0;
  for (int lag = 1; lag <= max_lag; ++lag)
    rho[lag] = centred.head(n - lag).dot(centred.tail(n - lag)) / c0;
  return rho;
}

Eigen::VectorXd autocovariance(const Eigen::VectorXd& series) {
  const auto n = series.size();
  Eigen::Index nfft = 1;
  while (nfft < 2 * n) nfft *= 2;
  std::vector<double> padded(static_cast<std::size_t>(nfft), 0.0);
  const double mean = series.mean();
  for (Eigen::Index i = 0; i < n; ++i) padded[static_cast<std::size_t>(i)] = series[i] - mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& f : freq) f = std::norm(f);
  std::vector<double> back;
  fft.inv(back, freq);

  Eigen::VectorXd acov(n);
  for (Eigen::Index t = 0; t < n; ++t) acov[t] = back[static_cast<std::size_t>(t)] / static_cast<double>(n);
  return acov;
}

double effective_sample_size(std::span<const Eigen::VectorXd> chains) {
  check_equal_lengths(chains, 4);
  const auto m = static_cast<Eigen::Index>(chains.size());
  const auto n = chains.front().size();
  const double nd = static_cast<double>(n);

  Eigen::MatrixXd acov(n, m);
  Eigen::VectorXd means(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    acov.col(k) = autocovariance(chains[static_cast<std::size_t>(k)]);
    means[k] = chains[static_cast<std::size_t>(k)].mean();
  }
  const double mean_var = acov.row(0).mean() * nd / (nd - 1.0);
  double var_plus = mean_var * (nd - 1.0) / nd;
  if (m > 1) var_plus += sample_variance(means);
  if (!(var_plus > 0.0)) throw ZeroVarianceError("series has zero variance");

  const Eigen::VectorXd acov_mean = acov.rowwise().mean();
  auto rho = [&](Eigen::Index t) { return t == 0 ? 1.0 : 1.0 - (mean_var - acov_mean[t]) / var_plus; };

  // Geyer's initial monotone sequence over pairs (ρ_2k + ρ_2k+1).
  double sum = 0.0;
  double previous = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (!(pair > 0.0)) break;
    pair = std::min(pair, previous);
    sum += pair;
    previous = pair;
  }
  const double tau = std::max(-1.0 + 2.0 * sum, 1e-12);
  const double total = nd * static_cast<double>(m);
  return std::min(total / tau, total);
}

double gelman_rubin(std::span<const Eigen::VectorXd> chains) {
  check_equal_lengths(chains, 4);
  const auto n = chains.front().size();
  const auto half = n / 2;
  std::vector<Eigen::VectorXd> parts;
  for (const auto& c : chains) {
    parts.emplace_back(c.head(half));
    parts.emplace_back(c.tail(half));
  }
  const auto m = static_cast<Eigen::Index>(parts.size());
  Eigen::VectorXd means(m);
  Eigen::VectorXd vars(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    means[k] = parts[static_cast<std::size_t>(k)].mean();
    vars[k] = sample_variance(parts[static_cast<std::size_t>(k)]);
  }
  const double w = vars.mean();
  if (!(w > 0.0)) throw ZeroVarianceError("within-chain variance is zero");
  const double hd = static_cast<double>(half);
  const double var_plus = (hd - 1.0) / hd * w + sample_variance(means);
  return std::sqrt(var_plus / w);
}

std::vector<std::string> DiagnosticsReport::failures() const {
  std::vector<std::string> out;
  for (const auto& p : params)
    if (!p.ok) out.push_back(p.name);
  return out;
}

DiagnosticsReport check_convergence(const Draws& draws, double ess_threshold, double rhat_threshold) {
  DiagnosticsReport report;
  report.ess_threshold = ess_threshold;
  report.rhat_threshold = rhat_threshold;

  auto evaluate = [&](std::string name, const std::vector<Eigen::VectorXd>& series) {
    ParamDiagnostics d;
    d.name = std::move(name);
    try {
      const bool constant = std::all_of(series.begin(), series.end(), [&](const Eigen::VectorXd& s) {
        return s.size() > 0 && s.minCoeff() == s.maxCoeff() && s[0] == series.front()[0];
      });
      if (constant) throw ZeroVarianceError("constant series");
      d.ess = effective_sample_size(series);
      d.rhat = gelman_rubin(series);
      const auto n = series.front().size();
      const int lags = static_cast<int>(std::min<Eigen::Index>(kReportLags, n - 1));
      d.acf = Eigen::VectorXd::Zero(lags + 1);
      int used = 0;
      for (const auto& s : series) {
        try {
          d.acf += autocorrelation(s, lags);
          ++used;
        } catch (const ZeroVarianceError&) {
        }
      }
      if (used > 0) d.acf /= used;
      d.ok = d.ess > ess_threshold && d.rhat < rhat_threshold;
    } catch (const ZeroVarianceError&) {
      d.zero_variance = true;
      d.ok = false;
    } catch (const std::invalid_argument&) {
      d.ok = false;
    }
    report.params.push_back(std::move(d));
  };

  std::vector<Eigen::VectorXd> series(draws.chains.size());
  for (Coef c : draws.spec.free_coefs()) {
    for (std::size_t k = 0; k < draws.chains.size(); ++k) series[k] = draws.chains[k].theta.col(index(c));
    evaluate(std::string(coef_name(c)), series);
  }
  const std::pair<bool, const char*> effects[] = {{draws.spec.has_random_a(), "u_a"},
                                                  {draws.spec.has_random_b(), "u_b"}};
  for (int col = 0; col < 2; ++col) {
    if (!effects[col].first) continue;
    for (std::size_t i = 0; i < draws.patient_ids.size(); ++i) {
      for (std::size_t k = 0; k < draws.chains.size(); ++k) {
        const auto& m = col == 0 ? draws.chains[k].u_a : draws.chains[k].u_b;
        series[k] = m.col(static_cast<Eigen::Index>(i));
      }
      evaluate(std::string(effects[col].second) + "[" + draws.patient_ids[i] + "]", series);
    }
  }
  report.pass = !report.params.empty() &&
                std::all_of(report.params.begin(), report.params.end(), [](const auto& p) { return p.ok; });
  return report;
}

}  // namespace growthmc
