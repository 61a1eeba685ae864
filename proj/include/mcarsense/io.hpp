#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mcarsense/engines.hpp"
#include "mcarsense/sensitivity.hpp"
#include "mcarsense/simulation.hpp"

namespace mcarsense {

using Json = nlohmann::ordered_json;

// Dataset files: header "x,r", one record per line; x is ignored when r = 0.
ObservedDataset parse_dataset_csv(std::string_view text);
std::string format_dataset_csv(const ObservedDataset& data);
ObservedDataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const ObservedDataset& data, const std::string& path);

// Draws files: header "iteration,functional,alpha,eta"; eta is empty for the H engine.
std::string format_draws_csv(const PosteriorDraws& draws);
PosteriorDraws parse_draws_csv(std::string_view text);
void write_draws_csv(const PosteriorDraws& draws, const std::string& path);
PosteriorDraws read_draws_csv(const std::string& path);

/// Full experiment description, read from JSON with sections
/// {scenario, priors, engine, run}. See docs/config.schema.json.
struct RunConfig {
  FitSetup fit;
  std::uint64_t seed = 1;
  std::size_t n = 1000;
  std::vector<std::size_t> ns;
  int reps = 300;
  double level = 0.90;
  int threads = 0;
  std::string out;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const Json& doc);
RunConfig load_run_config(const std::string& path);
Json to_json(const RunConfig& cfg);

/// Posterior summary: mean, sd, 0.05/0.5/0.95 quantiles and a histogram per
/// parameter, plus acceptance rate and the credible interval of the functional.
Json summarize_draws(const PosteriorDraws& draws, double level = 0.90, int bins = 30);

Json to_json(const CoverageReport& report);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace mcarsense
