#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pinnrc/circuits.hpp"
#include "pinnrc/inverse.hpp"
#include "pinnrc/training.hpp"

namespace pinnrc::cli {

/// Schema violation in a run config. The message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SyntheticSpec {
  int n_points = 35;
  std::vector<double> times;  // overrides n_points when non-empty
  double noise_sigma = 0.0;
  std::uint64_t seed = 7;
};

struct InverseSpec {
  std::optional<std::filesystem::path> dataset;  // resolved against the config dir
  std::optional<SyntheticSpec> synthetic;
  double init_scale = 0.5;
  std::optional<TrainableParams> init;  // explicit initial values
  std::vector<bool> free_r;             // empty means all free
  std::vector<bool> free_c;
};

struct SweepSpec {
  std::vector<double> t_ends;
  bool scale_points = true;
};

struct SynthSpec {
  SyntheticSpec data;
  std::string file = "dataset.csv";
};

/// A whole run described by one JSON document.
struct RunConfig {
  std::string name;  // empty: derived from command and timestamp
  std::optional<std::filesystem::path> output_dir;
  std::optional<CircuitCase> circuit;
  TrainConfig train;
  bool include_ic_set = false;  // whether train.include_ic was given
  std::optional<InverseSpec> inverse;
  std::optional<SynthSpec> synth;
  std::optional<SweepSpec> sweep;
};

/// Parses and validates; unknown keys are errors. Relative dataset paths
/// resolve against base_dir.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

CircuitCase parse_case(const nlohmann::json& j, const std::string& where);

}  // namespace pinnrc::cli
