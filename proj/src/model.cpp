#include "growthmc/model.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace growthmc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

constexpr std::array<std::string_view, kNumCoefs> kNames = {
    "beta0_a", "betaW_a", "betaA_a", "sigma_a", "beta0_b", "betaW_b",
    "betaA_b", "sigma_b", "beta0_c", "betaW_c", "sigma"};

constexpr std::array<std::string_view, kNumCoefs> kLabels = {
    "β₀^(a)", "β_W^(a)", "β_Age^(a)", "σ_a", "β₀^(b)", "β_W^(b)",
    "β_Age^(b)", "σ_b", "β₀^(c)", "β_W^(c)", "σ"};

double normal_log_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * kLogTwoPi - std::log(sd) - 0.5 * z * z;
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_real(std::string_view s, std::string_view context) {
  s = strip(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("bad number '" + std::string(s) + "' in prior '" + std::string(context) + "'");
  return v;
}

}  // namespace

std::string_view coef_name(Coef c) { return kNames[index(c)]; }
std::string_view coef_label(Coef c) { return kLabels[index(c)]; }

std::optional<Coef> parse_coef(std::string_view name) {
  for (Coef c : kAllCoefs)
    if (coef_name(c) == name) return c;
  return std::nullopt;
}

Block coef_block(Coef c) {
  switch (c) {
    case Coef::beta0_a:
    case Coef::betaW_a:
    case Coef::betaA_a: return Block::a;
    case Coef::beta0_b:
    case Coef::betaW_b:
    case Coef::betaA_b: return Block::b;
    case Coef::beta0_c:
    case Coef::betaW_c: return Block::c;
    default: return Block::none;
  }
}

Covariate coef_covariate(Coef c) {
  switch (c) {
    case Coef::beta0_a:
    case Coef::beta0_b:
    case Coef::beta0_c: return Covariate::intercept;
    case Coef::betaW_a:
    case Coef::betaW_b:
    case Coef::betaW_c: return Covariate::woman;
    case Coef::betaA_a:
    case Coef::betaA_b: return Covariate::age;
    default: return Covariate::none;
  }
}

FixedEffects FixedEffects::reference_posterior_means() {
  FixedEffects t;
  t[Coef::beta0_a] = 5.597;
  t[Coef::betaW_a] = -0.344;
  t[Coef::betaA_a] = 0.110;
  t[Coef::sigma_a] = 1.743;
  t[Coef::beta0_b] = 0.922;
  t[Coef::betaW_b] = -0.246;
  t[Coef::betaA_b] = 0.120;
  t[Coef::sigma_b] = 0.733;
  t[Coef::beta0_c] = 2.184;
  t[Coef::betaW_c] = -0.245;
  t[Coef::sigma] = 0.361;
  return t;
}

GrowthParamsd predictors(const FixedEffects& t, double u_a, double u_b, const Covariates& cov) {
  return {t[Coef::beta0_a] + u_a + t[Coef::betaW_a] * cov.woman + t[Coef::betaA_a] * cov.std_age,
          t[Coef::beta0_b] + u_b + t[Coef::betaW_b] * cov.woman + t[Coef::betaA_b] * cov.std_age,
          t[Coef::beta0_c] + t[Coef::betaW_c] * cov.woman};
}

ModelData ModelData::from(const Dataset& dataset) {
  ModelData m;
  const auto n = static_cast<Eigen::Index>(dataset.size());
  const auto total = static_cast<Eigen::Index>(dataset.observation_count());
  m.x.resize(total);
  m.y.resize(total);
  m.woman.resize(n);
  m.std_age.resize(n);
  m.offset.reserve(n + 1);
  const auto& s = dataset.standardization;
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = dataset.patients[i];
    m.offset.push_back(k);
    m.woman[i] = p.gender == Gender::Woman ? 1.0 : 0.0;
    m.std_age[i] = standardize_age(p.age, s);
    for (const auto& o : p.observations) {
      m.x[k] = standardize_pressure(o.pressure, s);
      m.y[k] = o.volume;
      ++k;
    }
  }
  m.offset.push_back(k);
  return m;
}

bool ScalarPrior::in_support(double x) const {
  if (kind == Kind::uniform) return x > p1 && x < p2;
  return std::isfinite(x);
}

double ScalarPrior::log_density(double x) const {
  if (kind == Kind::uniform) return in_support(x) ? -std::log(p2 - p1) : kNegInf;
  return normal_log_density(x, p1, p2);
}

void ScalarPrior::validate() const {
  if (!std::isfinite(p1) || !std::isfinite(p2))
    throw std::invalid_argument("prior parameters must be finite");
  if (kind == Kind::uniform && !(p1 < p2))
    throw std::invalid_argument("uniform prior needs lower < upper");
  if (kind == Kind::normal && !(p2 > 0.0)) throw std::invalid_argument("normal prior needs sd > 0");
}

std::string ScalarPrior::to_string() const {
  std::ostringstream os;
  os << (kind == Kind::uniform ? "uniform(" : "normal(") << format_double(p1) << ", " << format_double(p2)
     << ')';
  return os.str();
}

ScalarPrior ScalarPrior::parse(std::string_view text) {
  const auto body = strip(text);
  const auto open = body.find('(');
  const auto close = body.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open || close + 1 != body.size())
    throw std::invalid_argument("prior must look like uniform(lo, hi) or normal(mean, sd): '" +
                                std::string(text) + "'");
  const auto family = strip(body.substr(0, open));
  const auto args = body.substr(open + 1, close - open - 1);
  const auto comma = args.find(',');
  if (comma == std::string_view::npos)
    throw std::invalid_argument("prior needs two arguments: '" + std::string(text) + "'");
  const double p1 = parse_real(args.substr(0, comma), text);
  const double p2 = parse_real(args.substr(comma + 1), text);
  ScalarPrior prior;
  if (family == "uniform" || family == "U") {
    prior = uniform(p1, p2);
  } else if (family == "normal" || family == "N") {
    prior = normal(p1, p2);
  } else {
    throw std::invalid_argument("unknown prior family '" + std::string(family) + "'");
  }
  prior.validate();
  return prior;
}

PriorSpec::PriorSpec() {
  coef.fill(ScalarPrior::normal(0.0, 10.0));
  for (Coef c : {Coef::sigma_a, Coef::sigma_b, Coef::sigma}) (*this)[c] = ScalarPrior::uniform(0.0, 10.0);
  (*this)[Coef::beta0_a] = ScalarPrior::uniform(0.0, 20.0);
  (*this)[Coef::beta0_c] = ScalarPrior::uniform(0.0, 10.0);
}

void PriorSpec::validate() const {
  for (Coef c : kAllCoefs) {
    try {
      (*this)[c].validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(coef_name(c)) + ": " + e.what());
    }
  }
  for (Coef c : {Coef::sigma_a, Coef::sigma_b, Coef::sigma}) {
    const auto& p = (*this)[c];
    if (p.kind != ScalarPrior::Kind::uniform || p.p1 < 0.0)
      throw std::invalid_argument(std::string(coef_name(c)) + ": sd priors must be uniform on a subset of (0, inf)");
  }
}

void ModelSpec::apply(FixedEffects& theta) const {
  for (Coef c : kAllCoefs)
    if (!is_free(c)) theta[c] = *pinned[index(c)];
}

std::vector<Coef> ModelSpec::free_coefs() const {
  std::vector<Coef> out;
  for (Coef c : kAllCoefs)
    if (is_free(c)) out.push_back(c);
  return out;
}

double patient_log_likelihood(const FixedEffects& theta, double u_a, double u_b, const ModelData& data,
                              Eigen::Index i) {
  const double sigma = theta[Coef::sigma];
  if (!(sigma > 0.0)) return kNegInf;
  const auto p = predictors(theta, u_a, u_b, data.covariates(i));
  if (!(p.a > 0.0)) return kNegInf;
  double total = 0.0;
  for (Eigen::Index k = data.offset[i]; k < data.offset[i + 1]; ++k)
    total += normal_log_density(data.y[k], logistic_mean(p, data.x[k]), sigma);
  return total;
}

double log_likelihood(const FixedEffects& theta, const RandomEffects& u, const ModelData& data) {
  if (u.rows() != data.patients())
    throw std::invalid_argument("random effects have " + std::to_string(u.rows()) + " rows for " +
                                std::to_string(data.patients()) + " patients");
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.patients(); ++i) {
    const double term = patient_log_likelihood(theta, u(i, 0), u(i, 1), data, i);
    if (term == kNegInf) return kNegInf;
    total += term;
  }
  return total;
}

double log_likelihood(const FixedEffects& theta, const RandomEffects& u, const Dataset& dataset) {
  return log_likelihood(theta, u, ModelData::from(dataset));
}

double log_prior(const FixedEffects& theta, const RandomEffects& u, const PriorSpec& prior,
                 const ModelSpec& spec) {
  double total = 0.0;
  for (Coef c : kAllCoefs) {
    if (!spec.is_free(c)) continue;
    const double term = prior[c].log_density(theta[c]);
    if (term == kNegInf) return kNegInf;
    total += term;
  }
  const std::pair<bool, Coef> blocks[] = {{spec.has_random_a(), Coef::sigma_a},
                                          {spec.has_random_b(), Coef::sigma_b}};
  for (int col = 0; col < 2; ++col) {
    if (!blocks[col].first) continue;
    const double sd = theta[blocks[col].second];
    if (!(sd > 0.0)) return kNegInf;
    const auto n = static_cast<double>(u.rows());
    total += -0.5 * n * kLogTwoPi - n * std::log(sd) - 0.5 * u.col(col).squaredNorm() / (sd * sd);
  }
  return total;
}

double log_posterior(const FixedEffects& theta, const RandomEffects& u, const ModelData& data,
                     const PriorSpec& prior, const ModelSpec& spec) {
  const double lp = log_prior(theta, u, prior, spec);
  if (lp == kNegInf) return kNegInf;
  const double ll = log_likelihood(theta, u, data);
  if (ll == kNegInf) return kNegInf;
  return lp + ll;
}

double log_posterior(const FixedEffects& theta, const RandomEffects& u, const Dataset& dataset,
                     const PriorSpec& prior, const ModelSpec& spec) {
  return log_posterior(theta, u, ModelData::from(dataset), prior, spec);
}

}  // namespace growthmc
