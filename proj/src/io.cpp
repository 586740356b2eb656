#include "growthmc/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#ifndef GROWTHMC_VERSION
#define GROWTHMC_VERSION "0.0.0"
#endif

namespace growthmc {
namespace {

namespace fs = std::filesystem;

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_cell(std::string_view s, const fs::path& file, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError(DataErrorKind::Format, file.string() + ":" + std::to_string(line) + ": bad number '" +
                                               std::string(s) + "'");
  return v;
}

std::string chain_file(int k) { return "chain_" + std::to_string(k + 1) + ".csv"; }

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

Json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::Io, "cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataErrorKind::Format, path.string() + ": " + e.what());
  }
}

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

std::string_view tool_version() { return GROWTHMC_VERSION; }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("bad hex fingerprint '" + std::string(s) + "'");
  return v;
}

std::uint64_t hash_text(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Json config_json(const McmcConfig& c) {
  return Json{{"chains", c.chains},          {"iterations", c.iterations},
              {"burn_in", c.burn_in_sweeps()}, {"thin", c.thin},
              {"seed", c.seed},              {"adapt_window", c.adapt_window},
              {"target_accept", c.target_accept}};
}

Json prior_json(const PriorSpec& prior) {
  Json j = Json::object();
  for (Coef c : kAllCoefs) j[std::string(coef_name(c))] = prior[c].to_string();
  return j;
}

Json spec_json(const ModelSpec& spec) {
  Json j = Json::object();
  for (Coef c : kAllCoefs)
    if (!spec.is_free(c)) j[std::string(coef_name(c))] = *spec.pinned[index(c)];
  return j;
}

Json draws_meta(const Draws& draws) {
  Json j;
  j["tool_version"] = tool_version();
  j["config"] = config_json(draws.config);
  j["prior"] = prior_json(draws.prior);
  j["pinned"] = spec_json(draws.spec);
  j["dataset_fingerprint"] = hex64(draws.dataset_fingerprint);
  const auto& s = draws.standardization;
  j["standardization"] = {{"pressure_mean", s.pressure_mean},
                          {"pressure_sd", s.pressure_sd},
                          {"age_mean", s.age_mean},
                          {"age_sd", s.age_sd}};
  Json patients = Json::array();
  for (std::size_t i = 0; i < draws.patient_ids.size(); ++i) {
    patients.push_back({{"id", draws.patient_ids[i]},
                        {"woman", draws.covariates[i].woman},
                        {"std_age", draws.covariates[i].std_age}});
  }
  j["patients"] = std::move(patients);
  Json chains = Json::array();
  for (const auto& ch : draws.chains) {
    Json acc = Json::object();
    for (Coef c : draws.spec.free_coefs()) acc[std::string(coef_name(c))] = ch.acceptance_theta[index(c)];
    chains.push_back({{"file", chain_file(ch.index)},
                      {"stream", ch.index},
                      {"draws", ch.size()},
                      {"acceptance", acc},
                      {"acceptance_u", std::vector<double>(ch.acceptance_u.begin(), ch.acceptance_u.end())}});
  }
  j["chains"] = std::move(chains);
  j["rng"] = "splitmix64 counter stream per chain keyed by (seed, chain index); Box-Muller normals";
  return j;
}

void write_draws(const Draws& draws, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& ch : draws.chains) {
    std::ostringstream os;
    os << "iteration,log_posterior";
    for (Coef c : kAllCoefs) os << ',' << coef_name(c);
    for (const auto& id : draws.patient_ids) os << ",u_a[" << id << ']';
    for (const auto& id : draws.patient_ids) os << ",u_b[" << id << ']';
    os << '\n';
    for (Eigen::Index k = 0; k < ch.size(); ++k) {
      os << (k + 1) * draws.config.thin << ',' << format_double(ch.log_posterior[k]);
      for (int c = 0; c < kNumCoefs; ++c) os << ',' << format_double(ch.theta(k, c));
      for (Eigen::Index i = 0; i < ch.u_a.cols(); ++i) os << ',' << format_double(ch.u_a(k, i));
      for (Eigen::Index i = 0; i < ch.u_b.cols(); ++i) os << ',' << format_double(ch.u_b(k, i));
      os << '\n';
    }
    write_file_atomic(dir / chain_file(ch.index), os.str());
  }
  write_file_atomic(dir / "draws_meta.json", draws_meta(draws).dump(2) + "\n");
}

Draws read_draws(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError(DataErrorKind::Io, "fit directory '" + dir.string() + "' not found");
  const Json meta = read_json(dir / "draws_meta.json");
  Draws d;
  try {
    const auto& c = meta.at("config");
    d.config.chains = c.at("chains").get<int>();
    d.config.iterations = c.at("iterations").get<long>();
    d.config.burn_in = c.at("burn_in").get<long>();
    d.config.thin = c.at("thin").get<long>();
    d.config.seed = c.at("seed").get<std::uint64_t>();
    d.config.adapt_window = c.at("adapt_window").get<int>();
    d.config.target_accept = c.at("target_accept").get<double>();
    for (const auto& [name, text] : meta.at("prior").items()) {
      const auto coef = parse_coef(name);
      if (!coef) throw DataError(DataErrorKind::Format, "unknown coefficient '" + name + "' in draws_meta.json");
      d.prior[*coef] = ScalarPrior::parse(text.get<std::string>());
    }
    for (const auto& [name, value] : meta.at("pinned").items()) {
      const auto coef = parse_coef(name);
      if (!coef) throw DataError(DataErrorKind::Format, "unknown coefficient '" + name + "' in draws_meta.json");
      d.spec.pin(*coef, value.get<double>());
    }
    d.dataset_fingerprint = parse_hex64(meta.at("dataset_fingerprint").get<std::string>());
    const auto& s = meta.at("standardization");
    d.standardization = {s.at("pressure_mean").get<double>(), s.at("pressure_sd").get<double>(),
                         s.at("age_mean").get<double>(), s.at("age_sd").get<double>()};
    for (const auto& p : meta.at("patients")) {
      d.patient_ids.push_back(p.at("id").get<std::string>());
      d.covariates.push_back({p.at("woman").get<double>(), p.at("std_age").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataErrorKind::Format, (dir / "draws_meta.json").string() + ": " + e.what());
  }

  const auto n = static_cast<Eigen::Index>(d.patient_ids.size());
  const Eigen::Index columns = 2 + kNumCoefs + 2 * n;
  for (int k = 0; k < d.config.chains; ++k) {
    const fs::path file = dir / chain_file(k);
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError(DataErrorKind::Io, "cannot open '" + file.string() + "'");
    std::string line;
    std::getline(in, line);
    const auto header = split_commas(strip(line));
    if (static_cast<Eigen::Index>(header.size()) != columns)
      throw DataError(DataErrorKind::Format, file.string() + ": expected " + std::to_string(columns) + " columns");
    for (int c = 0; c < kNumCoefs; ++c) {
      if (header[static_cast<std::size_t>(2 + c)] != coef_name(static_cast<Coef>(c)))
        throw DataError(DataErrorKind::Format, file.string() + ": unexpected column '" +
                                                   std::string(header[static_cast<std::size_t>(2 + c)]) + "'");
    }
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      const auto row = strip(line);
      if (row.empty()) continue;
      const auto cells = split_commas(row);
      if (static_cast<Eigen::Index>(cells.size()) != columns)
        throw DataError(DataErrorKind::Format, file.string() + ":" + std::to_string(lineno) + ": wrong field count");
      std::vector<double> values(cells.size());
      for (std::size_t j = 0; j < cells.size(); ++j) values[j] = parse_cell(cells[j], file, lineno);
      rows.push_back(std::move(values));
    }
    Chain ch;
    ch.index = k;
    const auto m = static_cast<Eigen::Index>(rows.size());
    ch.theta.resize(m, kNumCoefs);
    ch.u_a.resize(m, n);
    ch.u_b.resize(m, n);
    ch.log_posterior.resize(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto& v = rows[static_cast<std::size_t>(r)];
      ch.log_posterior[r] = v[1];
      for (int c = 0; c < kNumCoefs; ++c) ch.theta(r, c) = v[static_cast<std::size_t>(2 + c)];
      for (Eigen::Index i = 0; i < n; ++i) {
        ch.u_a(r, i) = v[static_cast<std::size_t>(2 + kNumCoefs + i)];
        ch.u_b(r, i) = v[static_cast<std::size_t>(2 + kNumCoefs + n + i)];
      }
    }
    const auto& acc = meta["chains"][static_cast<std::size_t>(k)]["acceptance"];
    for (const auto& [name, value] : acc.items())
      if (const auto coef = parse_coef(name)) ch.acceptance_theta[index(*coef)] = value.get<double>();
    const auto& acc_u = meta["chains"][static_cast<std::size_t>(k)]["acceptance_u"];
    ch.acceptance_u = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < acc_u.size() && static_cast<Eigen::Index>(i) < n; ++i)
      ch.acceptance_u[static_cast<Eigen::Index>(i)] = acc_u[i].get<double>();
    d.chains.push_back(std::move(ch));
  }
  for (const auto& ch : d.chains)
    if (ch.size() != d.chains.front().size())
      throw DataError(DataErrorKind::Format, dir.string() + ": chains have different lengths");
  return d;
}

void apply_prior_assignment(PriorSpec& prior, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw std::invalid_argument("prior assignment must look like name=family(p1, p2): '" + std::string(assignment) +
                                "'");
  const auto name = strip(assignment.substr(0, eq));
  const auto coef = parse_coef(name);
  if (!coef) throw std::invalid_argument("unknown coefficient '" + std::string(name) + "'");
  prior[*coef] = ScalarPrior::parse(assignment.substr(eq + 1));
}

PriorSpec parse_prior_config(std::istream& in, std::string_view source, PriorSpec base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view row = line;
    if (const auto hash = row.find('#'); hash != std::string_view::npos) row = row.substr(0, hash);
    row = strip(row);
    if (row.empty()) continue;
    try {
      apply_prior_assignment(base, row);
    } catch (const std::invalid_argument& e) {
      throw DataError(DataErrorKind::Format, std::string(source) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(DataErrorKind::Format, std::string(source) + ": " + e.what());
  }
  return base;
}

PriorSpec read_prior_file(const fs::path& path, PriorSpec base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::Io, "cannot open prior file '" + path.string() + "'");
  return parse_prior_config(in, path.string(), std::move(base));
}

Json diagnostics_json(const DiagnosticsReport& report) {
  Json j;
  j["pass"] = report.pass;
  j["ess_threshold"] = report.ess_threshold;
  j["rhat_threshold"] = report.rhat_threshold;
  Json params = Json::array();
  for (const auto& p : report.params) {
    Json acf = Json::array();
    for (Eigen::Index k = 0; k < p.acf.size(); ++k) acf.push_back(p.acf[k]);
    Json entry{{"name", p.name}, {"ok", p.ok}, {"zero_variance", p.zero_variance}};
    entry["ess"] = p.zero_variance ? Json(nullptr) : Json(p.ess);
    entry["rhat"] = std::isfinite(p.rhat) ? Json(p.rhat) : Json(nullptr);
    entry["acf"] = std::move(acf);
    params.push_back(std::move(entry));
  }
  j["failures"] = report.failures();
  j["params"] = std::move(params);
  return j;
}

std::string diagnostics_table(const DiagnosticsReport& report, bool failures_only) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "parameter" << std::right << std::setw(12) << "ESS" << std::setw(10)
     << "R-hat" << std::setw(10) << "ACF(1)" << "  status\n";
  for (const auto& p : report.params) {
    if (failures_only && p.ok) continue;
    os << std::left << std::setw(20) << p.name << std::right;
    if (p.zero_variance) {
      os << std::setw(12) << "-" << std::setw(10) << "-" << std::setw(10) << "-" << "  zero variance\n";
      continue;
    }
    os << std::setw(12) << fixed(p.ess, 1) << std::setw(10) << fixed(p.rhat, 4) << std::setw(10)
       << (p.acf.size() > 1 ? fixed(p.acf[1], 3) : std::string("-")) << "  " << (p.ok ? "ok" : "FAIL") << '\n';
  }
  os << (report.pass ? "converged" : "NOT converged") << " (ESS > " << report.ess_threshold << ", R-hat < "
     << report.rhat_threshold << ")\n";
  return os.str();
}

void write_summary_csv(const SummaryTable& table, std::ostream& out) {
  out << "name,label,mean,sd,lo,hi\n";
  for (const auto& r : table) {
    out << r.name << ',' << r.label << ',' << format_double(r.mean) << ',' << format_double(r.sd) << ','
        << format_double(r.lower) << ',' << format_double(r.upper) << '\n';
  }
}

std::string summary_table(const SummaryTable& table) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "parameter" << std::right << std::setw(10) << "mean" << std::setw(10) << "sd"
     << "   95% interval\n";
  for (const auto& r : table) {
    os << std::left << std::setw(12) << r.name << std::right << std::setw(10) << fixed(r.mean, 3) << std::setw(10)
       << fixed(r.sd, 3) << "   (" << fixed(r.lower, 3) << ", " << fixed(r.upper, 3) << ")\n";
  }
  return os.str();
}

void write_band_csv(const PredictiveBand& band, std::ostream& out) {
  out << "pressure,mean,lo,hi\n";
  for (Eigen::Index j = 0; j < band.pressure.size(); ++j) {
    out << format_double(band.pressure[j]) << ',' << format_double(band.mean[j]) << ','
        << format_double(band.lower[j]) << ',' << format_double(band.upper[j]) << '\n';
  }
}

void write_sample_csv(const FunctionalSample& sample, std::ostream& out) {
  const bool pair = sample.values.cols() == 2;
  out << (pair ? "pressure_mmhg,volume_l\n" : "volume_l\n");
  for (Eigen::Index k = 0; k < sample.values.rows(); ++k) {
    if (pair) out << format_double(sample.values(k, 0)) << ',';
    out << format_double(sample.values(k, pair ? 1 : 0)) << '\n';
  }
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(DataErrorKind::Io, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError(DataErrorKind::Io, "write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

}  // namespace growthmc
