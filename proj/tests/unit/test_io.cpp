#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "growthmc/io.hpp"
#include "growthmc/simulate.hpp"

using namespace growthmc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("growthmc_io_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Draws small_fit() {
  SimDesign design;
  design.patients = 6;
  design.obs_min = 2;
  design.obs_max = 7;
  const auto sim = simulate_dataset(FixedEffects::reference_posterior_means(), design, 4);
  McmcConfig config;
  config.chains = 2;
  config.iterations = 60;
  config.thin = 3;
  config.seed = 9;
  PriorSpec prior;
  prior[Coef::beta0_c] = ScalarPrior::normal(2, 1);
  ModelSpec spec;
  spec.exclude(Coef::betaA_b);
  return run(sim.dataset, prior, spec, config);
}

}  // namespace

TEST_CASE("hex fingerprints round-trip") {
  CHECK(hex64(0) == "0000000000000000");
  CHECK(hex64(0xDEADBEEFULL) == "00000000deadbeef");
  CHECK(parse_hex64(hex64(0x0123456789abcdefULL)) == 0x0123456789abcdefULL);
  CHECK_THROWS(parse_hex64("xyz"));
  CHECK(hash_text("a") != hash_text("b"));
  CHECK(hash_text("") == 0xcbf29ce484222325ULL);
}

TEST_CASE("draws round-trip through the fit directory") {
  TempDir tmp;
  const auto draws = small_fit();
  write_draws(draws, tmp.path);
  CHECK(fs::exists(tmp.path / "chain_1.csv"));
  CHECK(fs::exists(tmp.path / "chain_2.csv"));
  CHECK(fs::exists(tmp.path / "draws_meta.json"));

  const auto header = slurp(tmp.path / "chain_1.csv").substr(0, 60);
  CHECK(header.rfind("iteration,log_posterior,beta0_a,betaW_a", 0) == 0);

  const auto back = read_draws(tmp.path);
  REQUIRE(back.chains.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(back.chains[k].theta == draws.chains[k].theta);
    CHECK(back.chains[k].u_a == draws.chains[k].u_a);
    CHECK(back.chains[k].u_b == draws.chains[k].u_b);
    CHECK(back.chains[k].log_posterior == draws.chains[k].log_posterior);
  }
  CHECK(back.patient_ids == draws.patient_ids);
  CHECK(back.dataset_fingerprint == draws.dataset_fingerprint);
  CHECK(back.standardization.pressure_sd == draws.standardization.pressure_sd);
  CHECK(back.config.iterations == 60);
  CHECK(back.config.seed == 9);
  CHECK(back.prior[Coef::beta0_c].to_string() == "normal(2, 1)");
  CHECK_FALSE(back.spec.is_free(Coef::betaA_b));
  for (std::size_t i = 0; i < back.covariates.size(); ++i) {
    CHECK(back.covariates[i].woman == draws.covariates[i].woman);
    CHECK(back.covariates[i].std_age == draws.covariates[i].std_age);
  }

  // Writing what was read reproduces the files byte for byte.
  TempDir again;
  write_draws(back, again.path);
  CHECK(slurp(again.path / "chain_2.csv") == slurp(tmp.path / "chain_2.csv"));
  CHECK(slurp(again.path / "draws_meta.json") == slurp(tmp.path / "draws_meta.json"));
}

TEST_CASE("a missing fit directory is an I/O error") {
  try {
    read_draws("/nonexistent/fit");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(e.kind() == DataErrorKind::Io);
  }
}

TEST_CASE("prior config files") {
  std::istringstream in(
      "# priors\n"
      "beta0_a = uniform(0, 30)\n"
      "\n"
      "betaW_c = normal(0, 1)  # tighter\n");
  const auto prior = parse_prior_config(in, "p.cfg");
  CHECK(prior[Coef::beta0_a].p2 == 30);
  CHECK(prior[Coef::betaW_c].p2 == 1);
  CHECK(prior[Coef::sigma].to_string() == "uniform(0, 10)");

  std::istringstream bad("sigma = uniform(0, 10)\nbeta7 = normal(0, 1)\n");
  try {
    parse_prior_config(bad, "p.cfg");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("p.cfg:2") != std::string::npos);
  }

  PriorSpec p;
  apply_prior_assignment(p, "sigma_b=uniform(0, 5)");
  CHECK(p[Coef::sigma_b].p2 == 5);
  CHECK_THROWS(apply_prior_assignment(p, "sigma_b"));
  CHECK_THROWS(apply_prior_assignment(p, "nope=normal(0,1)"));
}

TEST_CASE("band and sample CSV layouts") {
  PredictiveBand band;
  band.pressure = pressure_grid(0, 1, 0.5);
  band.mean = band.lower = band.upper = Eigen::VectorXd::Constant(3, 0.25);
  std::ostringstream os;
  write_band_csv(band, os);
  CHECK(os.str() == "pressure,mean,lo,hi\n0,0.25,0.25,0.25\n0.5,0.25,0.25,0.25\n1,0.25,0.25,0.25\n");

  FunctionalSample two;
  two.values.resize(1, 2);
  two.values << 10.5, 4.25;
  std::ostringstream o2;
  write_sample_csv(two, o2);
  CHECK(o2.str() == "pressure_mmhg,volume_l\n10.5,4.25\n");

  FunctionalSample one;
  one.values.resize(2, 1);
  one.values << 5, 6;
  std::ostringstream o1;
  write_sample_csv(one, o1);
  CHECK(o1.str() == "volume_l\n5\n6\n");
}

TEST_CASE("summary CSV and table") {
  SummaryTable t{{"sigma", "σ", 0.36, 0.01, 0.34, 0.38}};
  std::ostringstream os;
  write_summary_csv(t, os);
  CHECK(os.str() == "name,label,mean,sd,lo,hi\nsigma,σ,0.36,0.01,0.34,0.38\n");
  CHECK(summary_table(t).find("sigma") != std::string::npos);
}

TEST_CASE("diagnostics JSON") {
  DiagnosticsReport r;
  ParamDiagnostics p;
  p.name = "sigma";
  p.ess = 500;
  p.rhat = 1.001;
  p.ok = true;
  r.params.push_back(p);
  r.pass = true;
  const auto j = diagnostics_json(r);
  CHECK(j["pass"] == true);
  CHECK(j["params"][0]["name"] == "sigma");
  CHECK(diagnostics_table(r).find("converged") != std::string::npos);
}

TEST_CASE("atomic writes replace content") {
  TempDir tmp;
  const auto f = tmp.path / "x.txt";
  write_file_atomic(f, "one");
  write_file_atomic(f, "two");
  CHECK(slurp(f) == "two");
  CHECK_THROWS_AS(write_file_atomic("/nonexistent/dir/x.txt", "z"), DataError);
}
