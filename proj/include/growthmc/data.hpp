#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace growthmc {

enum class Gender { Man, Woman };

/// CSV token for a gender: "M" or "W".
std::string_view gender_token(Gender g);
std::optional<Gender> parse_gender(std::string_view token);

/// One (pressure, volume) reading on the raw scale: mmHg and litres.
struct Observation {
  double pressure;
  double volume;
};

struct Patient {
  std::string id;
  Gender gender = Gender::Man;
  double age = 0.0;
  std::vector<Observation> observations;
};

/// Pooled z-score constants. Pressures are pooled over every observation,
/// ages over patients (one age per patient).
struct Standardization {
  double pressure_mean = 0.0;
  double pressure_sd = 1.0;
  double age_mean = 0.0;
  double age_sd = 1.0;

  static Standardization identity() { return {}; }
};

inline double standardize_pressure(double p, const Standardization& s) {
  return (p - s.pressure_mean) / s.pressure_sd;
}
inline double destandardize_pressure(double z, const Standardization& s) {
  return s.pressure_mean + z * s.pressure_sd;
}
inline double standardize_age(double age, const Standardization& s) {
  return (age - s.age_mean) / s.age_sd;
}
inline double destandardize_age(double z, const Standardization& s) {
  return s.age_mean + z * s.age_sd;
}

struct Dataset {
  std::vector<Patient> patients;
  Standardization standardization;

  std::size_t size() const { return patients.size(); }
  std::size_t observation_count() const;

  /// Position of a patient in `patients`, if present.
  std::optional<std::size_t> index_of(std::string_view id) const;
};

enum class DataErrorKind {
  Format,         // malformed header, bad gender token, inconsistent rows
  Empty,          // no usable patients
  Degenerate,     // zero variance in a standardization input
  Io,             // unreadable or unwritable file
};

class DataError : public std::runtime_error {
 public:
  DataError(DataErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  DataErrorKind kind() const { return kind_; }

 private:
  DataErrorKind kind_;
};

inline constexpr std::string_view kCsvHeader = "patient_id,gender,age,iap_mmhg,iav_l";

/// Reads the repeated-measures CSV. A patient with any missing or invalid
/// age, pressure or volume is dropped entirely; ids of dropped patients are
/// appended to `dropped` when given. The returned dataset carries the
/// standardization fitted to the retained patients.
Dataset load_csv(const std::filesystem::path& path, std::vector<std::string>* dropped = nullptr);
Dataset parse_csv(std::istream& in, std::string_view source,
                  std::vector<std::string>* dropped = nullptr);

void write_csv(const Dataset& dataset, std::ostream& out);
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Sample mean and (n-1) sd of pooled pressures and of per-patient ages.
Standardization standardize_fit(const std::vector<Patient>& patients);
inline Standardization standardize_fit(const Dataset& dataset) {
  return standardize_fit(dataset.patients);
}

/// Assembles a dataset and fits its standardization. Throws on duplicate ids
/// or an empty patient list.
Dataset make_dataset(std::vector<Patient> patients);

/// FNV-1a hash over a canonical rendering of the dataset (ids, covariates,
/// observations at round-trip precision, standardization).
std::uint64_t fingerprint(const Dataset& dataset);

/// Shortest round-trip decimal rendering of a double.
std::string format_double(double v);

}  // namespace growthmc
