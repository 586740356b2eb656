#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "json.hpp"

#include "growthmc/diagnostics.hpp"
#include "growthmc/inference.hpp"
#include "growthmc/model.hpp"
#include "growthmc/sampler.hpp"

namespace growthmc {

using Json = nlohmann::ordered_json;

std::string_view tool_version();

/// 16-digit lowercase hex.
std::string hex64(std::uint64_t v);
std::uint64_t parse_hex64(std::string_view s);
/// FNV-1a over a string.
std::uint64_t hash_text(std::string_view text);

// Draws on disk: chain_<k>.csv (k = 1..M) with columns
// iteration,log_posterior,<coefficients>,u_a[<id>]...,u_b[<id>]... and
// draws_meta.json with the configuration, priors, model variant, patient
// covariates, standardization and dataset fingerprint.
void write_draws(const Draws& draws, const std::filesystem::path& dir);
Draws read_draws(const std::filesystem::path& dir);
Json draws_meta(const Draws& draws);

Json config_json(const McmcConfig& config);
Json prior_json(const PriorSpec& prior);
Json spec_json(const ModelSpec& spec);

/// Flat `name = family(p1, p2)` lines; '#' starts a comment.
PriorSpec read_prior_file(const std::filesystem::path& path, PriorSpec base = {});
PriorSpec parse_prior_config(std::istream& in, std::string_view source, PriorSpec base = {});
/// Applies one `name=family(p1, p2)` assignment.
void apply_prior_assignment(PriorSpec& prior, std::string_view assignment);

Json diagnostics_json(const DiagnosticsReport& report);
std::string diagnostics_table(const DiagnosticsReport& report, bool failures_only = false);

void write_summary_csv(const SummaryTable& table, std::ostream& out);
std::string summary_table(const SummaryTable& table);

/// Header `pressure,mean,lo,hi`.
void write_band_csv(const PredictiveBand& band, std::ostream& out);

/// Header `pressure_mmhg,volume_l` for two-column samples, `volume_l` for one.
void write_sample_csv(const FunctionalSample& sample, std::ostream& out);

/// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace growthmc
