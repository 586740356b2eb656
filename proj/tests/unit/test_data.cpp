#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "growthmc/data.hpp"
#include "growthmc/log.hpp"
#include "growthmc/model.hpp"
#include "growthmc/simulate.hpp"

using namespace growthmc;

namespace {

Dataset parse(const std::string& text, std::vector<std::string>* dropped = nullptr) {
  std::istringstream in(text);
  return parse_csv(in, "test.csv", dropped);
}

DataErrorKind error_kind(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.kind();
  }
  FAIL("expected a DataError");
  return DataErrorKind::Io;
}

std::string error_message(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

struct QuietWarnings {
  std::vector<std::string> seen;
  WarningSink previous;
  QuietWarnings() {
    previous = set_warning_sink([this](std::string_view m) { seen.emplace_back(m); });
  }
  ~QuietWarnings() { set_warning_sink(previous); }
};

}  // namespace

TEST_CASE("three rows for one patient") {
  QuietWarnings quiet;
  const auto d = parse("patient_id,gender,age,iap_mmhg,iav_l\nA,M,60,8,1.5\nA,M,60,10,2.5\nA,M,60,12,3.1\n");
  REQUIRE(d.size() == 1);
  CHECK(d.patients[0].observations.size() == 3);
  CHECK(d.patients[0].gender == Gender::Man);
  CHECK(d.observation_count() == 3);
  CHECK(d.standardization.pressure_mean == 10.0);
  CHECK(d.standardization.pressure_sd == 2.0);
}

TEST_CASE("a patient with a missing volume is dropped entirely") {
  std::vector<std::string> dropped;
  const auto d = parse(
      "patient_id,gender,age,iap_mmhg,iav_l\n"
      "A,M,60,8,1.5\nA,M,60,12,\n"
      "B,W,70,8,1.2\nB,W,70,12,3.0\n"
      "C,W,50,9,1.1\nC,W,50,13,3.2\n",
      &dropped);
  CHECK(d.size() == 2);
  CHECK(d.patients[0].id == "B");
  CHECK(dropped == std::vector<std::string>{"A"});
  CHECK_FALSE(d.index_of("A").has_value());
  CHECK(d.index_of("C") == 1);
}

TEST_CASE("invalid values drop the patient") {
  std::vector<std::string> dropped;
  const auto d = parse(
      "patient_id,gender,age,iap_mmhg,iav_l\n"
      "A,M,NA,8,1.5\n"
      "B,W,70,-3,1.2\n"
      "C,W,50,9,nan\n"
      "D,M,40,9,1.0\n"
      "E,M,60,10,2.0\n",
      &dropped);
  CHECK(d.size() == 2);
  CHECK(dropped.size() == 3);
}

TEST_CASE("header only is an empty dataset") {
  CHECK(error_kind("patient_id,gender,age,iap_mmhg,iav_l\n") == DataErrorKind::Empty);
  CHECK(error_kind("") == DataErrorKind::Format);
}

TEST_CASE("missing column is named") {
  CHECK(error_kind("patient_id,age,iap_mmhg,iav_l\nA,60,8,1\n") == DataErrorKind::Format);
  CHECK(error_message("patient_id,age,iap_mmhg,iav_l\nA,60,8,1\n").find("gender") != std::string::npos);
}

TEST_CASE("bad gender token is a format error with its line") {
  const std::string text = "patient_id,gender,age,iap_mmhg,iav_l\nA,M,60,8,1\nB,X,60,8,1\n";
  CHECK(error_kind(text) == DataErrorKind::Format);
  CHECK(error_message(text).find("test.csv:3") != std::string::npos);
}

TEST_CASE("a patient whose gender changes between rows is rejected") {
  CHECK(error_kind("patient_id,gender,age,iap_mmhg,iav_l\nA,M,60,8,1\nA,W,60,9,1\nB,M,50,9,1\n") ==
        DataErrorKind::Format);
}

TEST_CASE("wrong field count is rejected") {
  CHECK(error_kind("patient_id,gender,age,iap_mmhg,iav_l\nA,M,60,8\n") == DataErrorKind::Format);
}

TEST_CASE("byte order mark and CRLF line ends are accepted") {
  QuietWarnings quiet;
  const auto d = parse("\xEF\xBB\xBFpatient_id,gender,age,iap_mmhg,iav_l\r\nA,W,60,8,1\r\nB,M,61,9,2\r\n");
  CHECK(d.size() == 2);
  CHECK(d.patients[0].gender == Gender::Woman);
}

TEST_CASE("pooled standardization of two pressures") {
  std::vector<Patient> ps{{"A", Gender::Man, 50, {{8, 1}}}, {"B", Gender::Woman, 70, {{12, 2}}}};
  const auto s = standardize_fit(ps);
  CHECK(s.pressure_mean == 10.0);
  CHECK(s.pressure_sd == doctest::Approx(std::sqrt(8.0)).epsilon(1e-15));
  CHECK(s.age_mean == 60.0);
}

TEST_CASE("single patient with a single age is degenerate") {
  std::vector<Patient> ps{{"A", Gender::Man, 50, {{8, 1}, {12, 2}}}};
  try {
    standardize_fit(ps);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(e.kind() == DataErrorKind::Degenerate);
  }
}

TEST_CASE("loading tolerates a constant age with a warning") {
  QuietWarnings quiet;
  const auto d = parse("patient_id,gender,age,iap_mmhg,iav_l\nA,M,60,8,1\nA,M,60,12,2\n");
  CHECK(d.standardization.age_sd == 1.0);
  CHECK_FALSE(quiet.seen.empty());
}

TEST_CASE("standardization identities") {
  const Standardization s{11.5, 2.5, 64.65, 13.0};
  CHECK(standardize_pressure(11.5, s) == 0.0);
  CHECK(standardize_pressure(14.0, s) == 1.0);
  CHECK(destandardize_pressure(standardize_pressure(13.7, s), s) == doctest::Approx(13.7).epsilon(1e-15));
  CHECK(destandardize_age(standardize_age(80.0, s), s) == doctest::Approx(80.0).epsilon(1e-15));
}

TEST_CASE("simulated cohort ages centre near the design mean") {
  SimDesign design;
  design.patients = 2000;
  design.obs_min = design.obs_max = 2;
  const auto sim = simulate_dataset(FixedEffects::reference_posterior_means(), design, 3);
  CHECK(sim.dataset.standardization.age_mean == doctest::Approx(64.65).epsilon(0.02));
}

TEST_CASE("CSV write and read round-trips exactly") {
  QuietWarnings quiet;
  SimDesign design;
  design.patients = 7;
  design.obs_min = 1;
  design.obs_max = 9;
  design.random_pressures = true;
  const auto sim = simulate_dataset(FixedEffects::reference_posterior_means(), design, 21);
  std::stringstream buffer;
  write_csv(sim.dataset, buffer);
  const auto back = parse_csv(buffer, "buffer");
  REQUIRE(back.size() == sim.dataset.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.patients[i].id == sim.dataset.patients[i].id);
    CHECK(back.patients[i].age == sim.dataset.patients[i].age);
    REQUIRE(back.patients[i].observations.size() == sim.dataset.patients[i].observations.size());
    for (std::size_t j = 0; j < back.patients[i].observations.size(); ++j) {
      CHECK(back.patients[i].observations[j].pressure == sim.dataset.patients[i].observations[j].pressure);
      CHECK(back.patients[i].observations[j].volume == sim.dataset.patients[i].observations[j].volume);
    }
  }
  CHECK(fingerprint(back) == fingerprint(sim.dataset));
}

TEST_CASE("fingerprint changes with any value") {
  QuietWarnings quiet;
  auto d = parse("patient_id,gender,age,iap_mmhg,iav_l\nA,M,60,8,1\nB,W,62,9,2\n");
  const auto f0 = fingerprint(d);
  d.patients[1].observations[0].volume = std::nextafter(2.0, 3.0);
  CHECK(fingerprint(d) != f0);
}

TEST_CASE("make_dataset rejects duplicate ids") {
  std::vector<Patient> ps{{"A", Gender::Man, 50, {{8, 1}}}, {"A", Gender::Woman, 70, {{12, 2}}}};
  CHECK_THROWS(make_dataset(ps));
}

TEST_CASE("load_csv on a missing file is an I/O error") {
  try {
    load_csv("/nonexistent/dir/data.csv");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(e.kind() == DataErrorKind::Io);
  }
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(8) == "8");
  const double x = 1.0 / 3.0;
  CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("gender tokens") {
  CHECK(gender_token(Gender::Woman) == "W");
  CHECK(parse_gender("M") == Gender::Man);
  CHECK_FALSE(parse_gender("F").has_value());
}

TEST_CASE("noise-free simulation puts every observation on its curve") {
  auto theta = FixedEffects::reference_posterior_means();
  theta[Coef::sigma] = theta[Coef::sigma_a] = theta[Coef::sigma_b] = 0.0;
  SimDesign design;
  design.patients = 9;
  design.obs_min = 3;
  design.obs_max = 12;
  const auto sim = simulate_dataset(theta, design, 5);
  CHECK(sim.u.isZero());
  const auto data = ModelData::from(sim.dataset);
  for (Eigen::Index i = 0; i < data.patients(); ++i) {
    const auto p = predictors(theta, 0, 0, data.covariates(i));
    for (Eigen::Index j = data.offset[i]; j < data.offset[i + 1]; ++j)
      CHECK(data.y[j] == doctest::Approx(logistic_mean(p, data.x[j])).epsilon(1e-12));
  }
}

TEST_CASE("simulation is deterministic in its seed") {
  SimDesign design;
  design.patients = 12;
  design.obs_min = 1;
  design.obs_max = 30;
  design.random_pressures = true;
  const auto t = FixedEffects::reference_posterior_means();
  const auto x = simulate_dataset(t, design, 44);
  const auto y = simulate_dataset(t, design, 44);
  const auto z = simulate_dataset(t, design, 45);
  std::ostringstream ox, oy, oz;
  write_csv(x.dataset, ox);
  write_csv(y.dataset, oy);
  write_csv(z.dataset, oz);
  CHECK(ox.str() == oy.str());
  CHECK(ox.str() != oz.str());
  CHECK(x.u == y.u);
}

TEST_CASE("simulation design follows its settings") {
  SimDesign design;
  design.patients = 40;
  design.woman_fraction = 0.25;
  design.obs_min = 2;
  design.obs_max = 6;
  const auto sim = simulate_dataset(FixedEffects::reference_posterior_means(), design, 8);
  int women = 0;
  for (const auto& p : sim.dataset.patients) {
    women += p.gender == Gender::Woman ? 1 : 0;
    CHECK(p.observations.size() >= 2);
    CHECK(p.observations.size() <= 6);
    CHECK(p.age >= design.age_min);
    CHECK(p.age <= design.age_max);
    CHECK(p.observations.front().pressure == 8.0);
    CHECK(p.observations.back().pressure == 15.0);
  }
  CHECK(women == 10);
  design.patients = 0;
  CHECK_THROWS(design.validate());
}
