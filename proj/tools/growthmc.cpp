// growthmc: fit and query hierarchical logistic-growth models of
// pressure-volume curves.
//
//   growthmc simulate --out data.csv --patients 50 --seed 7
//   growthmc fit --data data.csv --out fit/
//   growthmc predict --fit fit/ --gender W --age 64.56 --out band.csv

#include <unistd.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "growthmc/data.hpp"
#include "growthmc/diagnostics.hpp"
#include "growthmc/inference.hpp"
#include "growthmc/io.hpp"
#include "growthmc/sampler.hpp"
#include "growthmc/simulate.hpp"

namespace fs = std::filesystem;
using namespace growthmc;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kNotConverged = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Output goes to `path`, or stdout when empty.
template <typename Writer>
void emit(const std::string& path, Writer&& write) {
  std::ostringstream os;
  write(os);
  if (path.empty() || path == "-") {
    std::cout << os.str();
  } else {
    write_file_atomic(path, os.str());
  }
}

Gender gender_arg(const std::string& token) {
  const auto g = parse_gender(token);
  if (!g) throw UsageError("--gender must be M or W");
  return *g;
}

struct FitHandle {
  Draws draws;
  Dataset dataset;
};

// Loads a fit directory and the dataset it was fitted to: `data` when given,
// otherwise the copy stored in the directory. Refuses on fingerprint mismatch.
FitHandle open_fit(const std::string& dir, const std::string& data) {
  FitHandle h;
  h.draws = read_draws(dir);
  const fs::path source = data.empty() ? fs::path(dir) / "dataset.csv" : fs::path(data);
  h.dataset = load_csv(source);
  if (fingerprint(h.dataset) != h.draws.dataset_fingerprint) {
    throw DataError(DataErrorKind::Format, "dataset '" + source.string() + "' does not match fit '" + dir +
                                               "' (fingerprint " + hex64(fingerprint(h.dataset)) + " vs " +
                                               hex64(h.draws.dataset_fingerprint) + ")");
  }
  return h;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string out;
  std::string theta_file;
  SimDesign design;
  std::uint64_t seed = 1;
  bool force = false;
};

FixedEffects read_theta(const std::string& path, Json& echo) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::Io, "cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataErrorKind::Format, path + ": " + e.what());
  }
  const Json& values = j.contains("theta") ? j["theta"] : j;
  FixedEffects theta;
  for (Coef c : kAllCoefs) {
    const auto name = std::string(coef_name(c));
    if (!values.contains(name) || !values[name].is_number())
      throw DataError(DataErrorKind::Format, path + ": missing numeric '" + name + "'");
    theta[c] = values[name].get<double>();
  }
  echo = values;
  return theta;
}

int cmd_simulate(const SimulateArgs& args) {
  if (args.out.empty()) throw UsageError("simulate needs --out");
  if (args.design.patients < 1) throw UsageError("--patients must be >= 1");
  const fs::path csv = args.out;
  fs::path truth = csv;
  truth.replace_extension(".truth.json");
  if (!args.force && (fs::exists(csv) || fs::exists(truth)))
    throw UsageError("'" + csv.string() + "' exists; pass --force to overwrite");

  Json echo;
  const FixedEffects theta =
      args.theta_file.empty() ? FixedEffects::reference_posterior_means() : read_theta(args.theta_file, echo);
  try {
    args.design.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto sim = simulate_dataset(theta, args.design, args.seed);
  if (csv.has_parent_path()) fs::create_directories(csv.parent_path());

  std::ostringstream os;
  write_csv(sim.dataset, os);
  write_file_atomic(csv, os.str());
  write_truth_json(sim, args.design, truth);
  if (!echo.is_null()) {
    std::ifstream in(truth, std::ios::binary);
    Json j = Json::parse(in);
    j["theta"] = echo;
    write_file_atomic(truth, j.dump(2) + "\n");
  }
  std::cout << "wrote " << csv.string() << " (" << sim.dataset.size() << " patients, "
            << sim.dataset.observation_count() << " observations) and " << truth.string() << '\n';
  return kOk;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
  std::string data;
  std::string out;
  McmcConfig config;
  long burn_in = -1;
  std::string prior_file;
  std::array<std::string, kNumCoefs> priors;
  std::vector<std::string> excluded;
  std::vector<std::string> pins;
  double ess_threshold = 100.0;
  double rhat_threshold = 1.05;
  bool force = false;
  bool no_strict = false;
  bool dry_run = false;
};

ModelSpec spec_from(const FitArgs& args) {
  ModelSpec spec;
  for (const auto& name : args.excluded) {
    const auto c = parse_coef(name);
    if (!c) throw UsageError("--exclude: unknown coefficient '" + name + "'");
    if (coef_covariate(*c) != Covariate::woman && coef_covariate(*c) != Covariate::age)
      throw UsageError("--exclude only applies to covariate coefficients (betaW_*, betaA_*)");
    spec.exclude(*c);
  }
  for (const auto& pin : args.pins) {
    const auto eq = pin.find('=');
    const auto c = parse_coef(pin.substr(0, eq));
    if (eq == std::string::npos || !c) throw UsageError("--pin expects name=value, got '" + pin + "'");
    try {
      spec.pin(*c, std::stod(pin.substr(eq + 1)));
    } catch (const std::exception&) {
      throw UsageError("--pin: bad value in '" + pin + "'");
    }
  }
  return spec;
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return hex64(hash_text(os.str()));
}

int cmd_fit(FitArgs args) {
  if (args.data.empty() || args.out.empty()) throw UsageError("fit needs --data and --out");
  if (args.burn_in >= 0) args.config.burn_in = args.burn_in;
  try {
    args.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path out = args.out;
  if (fs::exists(out) && !args.force && !args.dry_run)
    throw UsageError("output directory '" + out.string() + "' exists; pass --force to overwrite");

  std::vector<std::string> dropped;
  const Dataset dataset = load_csv(args.data, &dropped);
  for (const auto& id : dropped) std::cerr << "dropped patient " << id << " (missing or invalid values)\n";

  PriorSpec prior = args.prior_file.empty() ? PriorSpec{} : read_prior_file(args.prior_file);
  try {
    for (Coef c : kAllCoefs)
      if (!args.priors[index(c)].empty())
        apply_prior_assignment(prior, std::string(coef_name(c)) + "=" + args.priors[index(c)]);
    prior.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const ModelSpec spec = spec_from(args);

  std::cerr << "fitting " << dataset.size() << " patients / " << dataset.observation_count() << " observations: "
            << args.config.chains << " chains x " << args.config.iterations << " sweeps (burn-in "
            << args.config.burn_in_sweeps() << ", thin " << args.config.thin << ")\n";
  if (args.dry_run) {
    std::cout << config_json(args.config).dump(2) << '\n'
              << "stored draws per chain: " << args.config.stored_draws() << '\n';
    return kOk;
  }
  const Draws draws = run(dataset, prior, spec, args.config);
  const auto report = check_convergence(draws, args.ess_threshold, args.rhat_threshold);
  const auto table = summarize(draws);

  fs::path staging = out;
  staging += ".tmp-" + std::to_string(::getpid());
  fs::remove_all(staging);
  fs::create_directories(staging);
  write_draws(draws, staging);
  write_csv(dataset, staging / "dataset.csv");
  write_file_atomic(staging / "diagnostics.json", diagnostics_json(report).dump(2) + "\n");
  {
    std::ostringstream os;
    write_summary_csv(table, os);
    write_file_atomic(staging / "summary.csv", os.str());
  }
  Json manifest;
  manifest["tool_version"] = tool_version();
  manifest["command"] = "fit";
  manifest["seed"] = args.config.seed;
  const Json settings{{"config", config_json(args.config)}, {"prior", prior_json(prior)}, {"pinned", spec_json(spec)}};
  manifest["config"] = settings;
  manifest["config_hash"] = hex64(hash_text(settings.dump()));
  manifest["dataset_fingerprint"] = hex64(draws.dataset_fingerprint);
  Json files = Json::object();
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(staging)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  for (const auto& name : names) files[name] = file_hash(staging / name);
  manifest["files"] = files;
  write_file_atomic(staging / "manifest.json", manifest.dump(2) + "\n");

  if (fs::exists(out)) fs::remove_all(out);
  fs::rename(staging, out);

  std::cout << summary_table(table) << '\n' << diagnostics_table(report, true);
  if (!report.pass && !args.no_strict) return kNotConverged;
  return kOk;
}

// ----------------------------------------------------------- query commands

struct QueryArgs {
  std::string fit;
  std::string data;
  std::string out;
  std::string gender = "M";
  double age = 64.65;
  std::string patient;
  std::string point = "ADP";
  std::string functional = "ADP";
  double grid_min = 0.0;
  double grid_max = 16.0;
  double grid_step = 0.5;
  int reps = 1;
  std::uint64_t seed = 1;
  bool curve = false;
  double ess_threshold = 100.0;
  double rhat_threshold = 1.05;
  bool all = false;
  bool strict = false;
  std::vector<std::string> fits;
};

int cmd_diagnose(const QueryArgs& a) {
  const auto h = open_fit(a.fit, a.data);
  const auto report = check_convergence(h.draws, a.ess_threshold, a.rhat_threshold);
  std::cout << diagnostics_table(report, !a.all);
  if (!a.out.empty()) write_file_atomic(a.out, diagnostics_json(report).dump(2) + "\n");
  return report.pass || !a.strict ? kOk : kNotConverged;
}

int cmd_summarize(const QueryArgs& a) {
  const auto h = open_fit(a.fit, a.data);
  const auto table = summarize(h.draws);
  std::cout << summary_table(table);
  if (!a.out.empty()) emit(a.out, [&](std::ostream& os) { write_summary_csv(table, os); });
  return kOk;
}

int cmd_predict(const QueryArgs& a) {
  const auto h = open_fit(a.fit, a.data);
  const auto grid = pressure_grid(a.grid_min, a.grid_max, a.grid_step);
  Rng rng(a.seed, 0);
  PredictiveBand band;
  if (!a.patient.empty()) {
    band = predict_patient(h.draws, a.patient, grid, rng, a.reps);
  } else if (a.curve) {
    band = curve_band(h.draws, gender_arg(a.gender), a.age, grid);
  } else {
    band = predict_new(h.draws, gender_arg(a.gender), a.age, grid, rng, a.reps);
  }
  emit(a.out, [&](std::ostream& os) { write_band_csv(band, os); });
  return kOk;
}

int cmd_critical(const QueryArgs& a) {
  if (a.patient.empty()) throw UsageError("--patient is required");
  const auto h = open_fit(a.fit, a.data);
  const auto sample = individual_critical_posterior(h.draws, a.patient, parse_critical_kind(a.point));
  emit(a.out, [&](std::ostream& os) { write_sample_csv(sample, os); });
  if (!a.out.empty() && sample.values.rows() > 0) {
    const auto p = summarize_sample(sample.values.col(0));
    const auto v = summarize_sample(sample.values.col(1));
    std::cout << a.point << " of " << a.patient << ": pressure " << p.mean << " mmHg (" << p.lower << ", "
              << p.upper << "), volume " << v.mean << " L (" << v.lower << ", " << v.upper << ")\n";
  }
  return kOk;
}

int cmd_population(const QueryArgs& a) {
  const auto h = open_fit(a.fit, a.data);
  Rng rng(a.seed, 0);
  const auto sample =
      population_outcome(h.draws, gender_arg(a.gender), a.age, parse_functional(a.functional), rng, a.reps);
  emit(a.out, [&](std::ostream& os) { write_sample_csv(sample, os); });
  if (!a.out.empty() && sample.values.rows() > 0) {
    std::cout << a.functional << " (" << a.gender << ", age " << a.age << ", " << a.reps
              << " random-effect draws per posterior draw):";
    for (Eigen::Index c = 0; c < sample.values.cols(); ++c) {
      const auto s = summarize_sample(sample.values.col(c));
      std::cout << ' ' << (sample.values.cols() == 2 && c == 0 ? "pressure " : "volume ") << s.mean << " ("
                << s.lower << ", " << s.upper << ")";
    }
    std::cout << '\n';
  }
  return kOk;
}

int cmd_dic(const QueryArgs& a) {
  struct Row {
    std::string fit;
    DicResult r;
  };
  std::vector<Row> rows;
  for (const auto& dir : a.fits) {
    const auto h = open_fit(dir, a.data);
    rows.push_back({dir, dic(h.draws, h.dataset)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.r.dic < y.r.dic; });
  emit(a.out, [&](std::ostream& os) {
    os << "fit,dic,dbar,pd\n";
    for (const auto& row : rows)
      os << row.fit << ',' << format_double(row.r.dic) << ',' << format_double(row.r.dbar) << ','
         << format_double(row.r.pd) << '\n';
  });
  return kOk;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Each `key = value` line sets `--key` unless it was given on the command
// line. Repeated keys accumulate for multi-valued options.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::vector<CLI::Option*> from_file;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    const auto text = trim(line.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(text.substr(0, eq));
    auto value = trim(text.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    CLI::Option* opt = nullptr;
    try {
      opt = cmd->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
    }
    if (!opt || key == "config")
      throw UsageError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    const bool given_on_cli = opt->count() > 0 && std::find(from_file.begin(), from_file.end(), opt) == from_file.end();
    if (given_on_cli) continue;
    opt->add_result(value);
    from_file.push_back(opt);
  }
  for (auto* opt : from_file) opt->run_callback();
}

void add_mcmc_options(CLI::App* cmd, FitArgs& f) {
  cmd->add_option("--chains", f.config.chains, "Number of chains")->capture_default_str();
  cmd->add_option("--iterations,--iters", f.config.iterations, "Sampling sweeps per chain")->capture_default_str();
  cmd->add_option("--burn_in,--burn-in", f.burn_in, "Burn-in sweeps (default: iterations)");
  cmd->add_option("--thin", f.config.thin, "Keep every thin-th sweep")->capture_default_str();
  cmd->add_option("--seed", f.config.seed, "Random seed")->capture_default_str();
  cmd->add_option("--adapt_window,--adapt-window", f.config.adapt_window, "Sweeps per adaptation batch")
      ->capture_default_str();
  cmd->add_option("--target_accept,--target-accept", f.config.target_accept, "Target acceptance rate")
      ->capture_default_str();
  cmd->add_option("--threads", f.config.threads, "Worker threads (0: one per chain)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian hierarchical logistic-growth models for pressure-volume curves"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw a synthetic dataset from the model");
  simulate->add_option("--out", sim.out, "Dataset CSV to write (truth JSON goes next to it)");
  simulate->add_option("--theta", sim.theta_file, "JSON with the true fixed effects (default: reference means)");
  simulate->add_option("--patients,-n", sim.design.patients, "Number of patients")->capture_default_str();
  simulate->add_option("--woman_fraction,--woman-fraction", sim.design.woman_fraction)->capture_default_str();
  simulate->add_option("--age_mean,--age-mean", sim.design.age_mean)->capture_default_str();
  simulate->add_option("--age_sd,--age-sd", sim.design.age_sd)->capture_default_str();
  simulate->add_option("--age_min,--age-min", sim.design.age_min)->capture_default_str();
  simulate->add_option("--age_max,--age-max", sim.design.age_max)->capture_default_str();
  simulate->add_option("--pressure_min,--pressure-min", sim.design.pressure_min)->capture_default_str();
  simulate->add_option("--pressure_max,--pressure-max", sim.design.pressure_max)->capture_default_str();
  simulate->add_option("--obs_min,--obs-min", sim.design.obs_min)->capture_default_str();
  simulate->add_option("--obs_max,--obs-max", sim.design.obs_max)->capture_default_str();
  simulate->add_flag("--random_pressures,--random-pressures", sim.design.random_pressures);
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_flag("--force", sim.force, "Overwrite existing files");
  std::string simulate_config;
  simulate->add_option("--config", simulate_config, "Flat key = value file; command-line flags take precedence");

  FitArgs fit;
  auto* fitc = app.add_subcommand("fit", "Run the MCMC sampler and write a fit directory");
  fitc->add_option("--data", fit.data, "Dataset CSV");
  fitc->add_option("--out", fit.out, "Fit directory to create");
  add_mcmc_options(fitc, fit);
  fitc->add_option("--prior", fit.prior_file, "Prior file: lines of name = family(p1, p2)");
  const PriorSpec defaults;
  for (Coef c : kAllCoefs) {
    const auto name = std::string(coef_name(c));
    fitc->add_option("--" + name, fit.priors[index(c)], "Prior on " + name + " [" + defaults[c].to_string() + "]");
  }
  fitc->add_option("--exclude", fit.excluded, "Drop a covariate coefficient (e.g. betaW_c)");
  fitc->add_option("--pin", fit.pins, "Hold a coefficient fixed: name=value");
  fitc->add_option("--ess_threshold,--ess-threshold", fit.ess_threshold)->capture_default_str();
  fitc->add_option("--rhat_threshold,--rhat-threshold", fit.rhat_threshold)->capture_default_str();
  fitc->add_flag("--force", fit.force, "Replace an existing fit directory");
  fitc->add_flag("--dry_run,--dry-run", fit.dry_run, "Validate inputs and print the run plan without sampling");
  fitc->add_flag("--no_strict,--no-strict", fit.no_strict, "Exit 0 even if the convergence check fails");
  std::string fit_config;
  fitc->add_option("--config", fit_config, "Flat key = value file; command-line flags take precedence");

  QueryArgs q;
  auto add_fit = [&](CLI::App* cmd) {
    cmd->add_option("--fit", q.fit, "Fit directory")->required();
    cmd->add_option("--data", q.data, "Dataset CSV to verify against the fit (default: its stored copy)");
    cmd->add_option("--out", q.out, "Output file (default: stdout)");
  };
  auto add_profile = [&](CLI::App* cmd) {
    cmd->add_option("--gender", q.gender, "M or W")->capture_default_str();
    cmd->add_option("--age", q.age, "Age in years")->capture_default_str();
    cmd->add_option("--reps", q.reps, "Random-effect draws per posterior draw")->capture_default_str();
    cmd->add_option("--seed", q.seed)->capture_default_str();
  };

  auto* diagnose = app.add_subcommand("diagnose", "Convergence diagnostics for a fit");
  add_fit(diagnose);
  diagnose->add_option("--ess_threshold,--ess-threshold", q.ess_threshold)->capture_default_str();
  diagnose->add_option("--rhat_threshold,--rhat-threshold", q.rhat_threshold)->capture_default_str();
  diagnose->add_flag("--all", q.all, "List every parameter, not only failures");
  diagnose->add_flag("--strict", q.strict, "Exit 3 when the check fails");

  auto* summarizec = app.add_subcommand("summarize", "Posterior summary table");
  add_fit(summarizec);

  auto* predict = app.add_subcommand("predict", "Posterior predictive band over a pressure grid");
  add_fit(predict);
  add_profile(predict);
  predict->add_option("--grid_min,--grid-min", q.grid_min)->capture_default_str();
  predict->add_option("--grid_max,--grid-max", q.grid_max)->capture_default_str();
  predict->add_option("--grid_step,--grid-step", q.grid_step)->capture_default_str();
  predict->add_option("--patient", q.patient, "Predict a fitted patient instead of a new individual");
  predict->add_flag("--curve", q.curve, "Credible band of the typical curve (no random effects, no noise)");

  auto* critical = app.add_subcommand("critical", "Posterior of a fitted patient's critical point");
  add_fit(critical);
  critical->add_option("--patient", q.patient)->required();
  critical->add_option("--point", q.point, "IP, ADP, MAP or MDP")->capture_default_str();

  auto* population = app.add_subcommand("population", "Population outcome with random effects integrated out");
  add_fit(population);
  add_profile(population);
  population->add_option("--functional", q.functional, "asymptote, IP, ADP, MAP or MDP")->capture_default_str();

  auto* dicc = app.add_subcommand("dic", "Compare fits by DIC");
  dicc->add_option("--fit", q.fits, "Fit directories")->required();
  dicc->add_option("--data", q.data, "Dataset CSV (default: each fit's stored copy)");
  dicc->add_option("--out", q.out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate && !simulate_config.empty()) apply_config_file(simulate, simulate_config);
    if (*fitc && !fit_config.empty()) apply_config_file(fitc, fit_config);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*fitc) return cmd_fit(fit);
    if (*diagnose) return cmd_diagnose(q);
    if (*summarizec) return cmd_summarize(q);
    if (*predict) return cmd_predict(q);
    if (*critical) return cmd_critical(q);
    if (*population) return cmd_population(q);
    if (*dicc) return cmd_dic(q);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
