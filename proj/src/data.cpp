#include "growthmc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "growthmc/log.hpp"

namespace growthmc {
namespace {

constexpr std::string_view kColumns[] = {"patient_id", "gender", "age", "iap_mmhg", "iav_l"};

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view token) {
  token = trim(token);
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string located(std::string_view source, std::size_t line, const std::string& msg) {
  std::ostringstream os;
  os << source << ':' << line << ": " << msg;
  return os.str();
}

void check_header(std::string_view header, std::string_view source) {
  if (header.size() >= 3 && static_cast<unsigned char>(header[0]) == 0xEF &&
      static_cast<unsigned char>(header[1]) == 0xBB && static_cast<unsigned char>(header[2]) == 0xBF) {
    header.remove_prefix(3);
  }
  auto fields = split(trim(header), ',');
  for (auto& f : fields) f = trim(f);
  for (auto column : kColumns) {
    if (std::find(fields.begin(), fields.end(), column) == fields.end()) {
      throw DataError(DataErrorKind::Format,
                      located(source, 1, "missing column '" + std::string(column) + "'; expected header '" +
                                             std::string(kCsvHeader) + "'"));
    }
  }
  if (!std::equal(fields.begin(), fields.end(), std::begin(kColumns), std::end(kColumns))) {
    throw DataError(DataErrorKind::Format,
                    located(source, 1, "expected header '" + std::string(kCsvHeader) + "'"));
  }
}

double sample_mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Like standardize_fit, but a dataset whose ages carry no variance (a single
// patient, say) is centred only, with a warning.
Standardization fit_for_load(const std::vector<Patient>& patients) {
  try {
    return standardize_fit(patients);
  } catch (const DataError& e) {
    if (e.kind() != DataErrorKind::Degenerate || std::string_view(e.what()).find("age") == std::string_view::npos)
      throw;
    std::vector<double> pressures;
    for (const auto& p : patients)
      for (const auto& o : p.observations) pressures.push_back(o.pressure);
    Standardization s;
    s.pressure_mean = sample_mean(pressures);
    s.pressure_sd = sample_sd(pressures, s.pressure_mean);
    s.age_mean = patients.front().age;
    s.age_sd = 1.0;
    warn("ages have zero variance; age is centred but not scaled");
    return s;
  }
}

struct RowGroup {
  Patient patient;
  std::size_t first_line = 0;
  bool valid = true;
  bool covariates_seen = false;
};

}  // namespace

std::string_view gender_token(Gender g) { return g == Gender::Man ? "M" : "W"; }

std::optional<Gender> parse_gender(std::string_view token) {
  token = trim(token);
  if (token == "M") return Gender::Man;
  if (token == "W") return Gender::Woman;
  return std::nullopt;
}

std::size_t Dataset::observation_count() const {
  std::size_t total = 0;
  for (const auto& p : patients) total += p.observations.size();
  return total;
}

std::optional<std::size_t> Dataset::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < patients.size(); ++i)
    if (patients[i].id == id) return i;
  return std::nullopt;
}

Standardization standardize_fit(const std::vector<Patient>& patients) {
  if (patients.empty()) throw DataError(DataErrorKind::Empty, "dataset has no patients");
  std::vector<double> pressures;
  std::vector<double> ages;
  ages.reserve(patients.size());
  for (const auto& p : patients) {
    ages.push_back(p.age);
    for (const auto& o : p.observations) pressures.push_back(o.pressure);
  }
  if (pressures.empty()) throw DataError(DataErrorKind::Empty, "dataset has no observations");

  Standardization s;
  s.pressure_mean = sample_mean(pressures);
  s.pressure_sd = sample_sd(pressures, s.pressure_mean);
  s.age_mean = sample_mean(ages);
  s.age_sd = sample_sd(ages, s.age_mean);
  if (!(s.pressure_sd > 0.0))
    throw DataError(DataErrorKind::Degenerate, "pooled pressures have zero variance");
  if (!(s.age_sd > 0.0))
    throw DataError(DataErrorKind::Degenerate, "patient ages have zero variance");
  return s;
}

Dataset make_dataset(std::vector<Patient> patients) {
  if (patients.empty()) throw DataError(DataErrorKind::Empty, "dataset has no patients");
  std::set<std::string_view> ids;
  for (const auto& p : patients) {
    if (p.observations.empty())
      throw DataError(DataErrorKind::Format, "patient '" + p.id + "' has no observations");
    if (!ids.insert(p.id).second)
      throw DataError(DataErrorKind::Format, "duplicate patient id '" + p.id + "'");
  }
  Dataset d;
  d.standardization = fit_for_load(patients);
  d.patients = std::move(patients);
  return d;
}

Dataset parse_csv(std::istream& in, std::string_view source, std::vector<std::string>* dropped) {
  std::string line;
  if (!std::getline(in, line))
    throw DataError(DataErrorKind::Format, located(source, 1, "missing header row"));
  check_header(line, source);

  std::vector<RowGroup> groups;
  std::unordered_map<std::string, std::size_t> by_id;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto row = trim(line);
    if (row.empty()) continue;
    const auto fields = split(row, ',');
    if (fields.size() != std::size(kColumns)) {
      throw DataError(DataErrorKind::Format,
                      located(source, lineno, "expected 5 fields, found " + std::to_string(fields.size())));
    }
    const std::string id(trim(fields[0]));
    if (id.empty()) throw DataError(DataErrorKind::Format, located(source, lineno, "empty patient_id"));
    const auto gender = parse_gender(fields[1]);
    if (!gender) {
      throw DataError(DataErrorKind::Format, located(source, lineno, "gender must be M or W, got '" +
                                                                         std::string(trim(fields[1])) + "'"));
    }

    auto [it, inserted] = by_id.try_emplace(id, groups.size());
    if (inserted) {
      RowGroup g;
      g.patient.id = id;
      g.patient.gender = *gender;
      g.first_line = lineno;
      groups.push_back(std::move(g));
    }
    RowGroup& g = groups[it->second];
    if (g.patient.gender != *gender) {
      throw DataError(DataErrorKind::Format,
                      located(source, lineno, "patient '" + id + "' changes gender between rows"));
    }

    const auto age = parse_number(fields[2]);
    const auto pressure = parse_number(fields[3]);
    const auto volume = parse_number(fields[4]);
    const bool age_ok = age && *age > 0.0 && *age <= 120.0;
    const bool pressure_ok = pressure && *pressure >= 0.0 && *pressure <= 50.0;
    if (!age_ok || !pressure_ok || !volume) {
      g.valid = false;
      continue;
    }
    if (g.covariates_seen && g.patient.age != *age) {
      throw DataError(DataErrorKind::Format,
                      located(source, lineno, "patient '" + id + "' changes age between rows"));
    }
    g.patient.age = *age;
    g.covariates_seen = true;
    g.patient.observations.push_back({*pressure, *volume});
  }

  std::vector<Patient> kept;
  for (auto& g : groups) {
    if (g.valid) {
      kept.push_back(std::move(g.patient));
    } else if (dropped) {
      dropped->push_back(g.patient.id);
    }
  }
  if (kept.empty()) throw DataError(DataErrorKind::Empty, std::string(source) + ": no usable patients");

  Dataset d;
  d.standardization = fit_for_load(kept);
  d.patients = std::move(kept);
  return d;
}

Dataset load_csv(const std::filesystem::path& path, std::vector<std::string>* dropped) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::Io, "cannot open '" + path.string() + "'");
  return parse_csv(in, path.string(), dropped);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_csv(const Dataset& dataset, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& p : dataset.patients) {
    for (const auto& o : p.observations) {
      out << p.id << ',' << gender_token(p.gender) << ',' << format_double(p.age) << ','
          << format_double(o.pressure) << ',' << format_double(o.volume) << '\n';
    }
  }
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataErrorKind::Io, "cannot write '" + path.string() + "'");
  write_csv(dataset, out);
  if (!out) throw DataError(DataErrorKind::Io, "write failed for '" + path.string() + "'");
}

std::uint64_t fingerprint(const Dataset& dataset) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  for (const auto& p : dataset.patients) {
    feed(p.id);
    feed(gender_token(p.gender));
    feed(format_double(p.age));
    for (const auto& o : p.observations) {
      feed(format_double(o.pressure));
      feed(format_double(o.volume));
    }
  }
  const auto& s = dataset.standardization;
  for (double v : {s.pressure_mean, s.pressure_sd, s.age_mean, s.age_sd}) feed(format_double(v));
  return h;
}

}  // namespace growthmc
