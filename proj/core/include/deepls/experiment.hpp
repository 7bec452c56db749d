#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "deepls/loss.hpp"
#include "deepls/metrics.hpp"
#include "deepls/train.hpp"

namespace deepls {

// Invalid configuration; detected before any output is written.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Filesystem failure while writing or reading run artifacts.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string problem = "poisson";
  double epsilon = 0.01;
  double k = 10.0;
  LossKind loss = LossKind::FOSLS;
  double alpha_d = 1.0;
  double alpha_n = 1.0;
  BoundaryScale boundary_scale = BoundaryScale::Auto;
  Activation activation = Activation::LeakyReLU;
  InitScheme init = InitScheme::He;
  std::vector<int> upper_widths = {24, 14, 14, 1};
  std::vector<int> lower_widths = {24, 14, 14, 1};
  std::size_t points = 800;
  std::optional<double> h;  // when set, points = round(length / h)
  long iterations = 10000;
  double lr = 5e-4;
  std::optional<long> decay_every;
  RefineSchedule refine;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  DenominatorKind denominator = DenominatorKind::ExactPair;
  std::size_t eval_points = 0;  // 0: max(10 x points, 10^4)
  std::string out_dir = "run";
};

// Throws ConfigError on anything the library would reject later.
void validate(const ExperimentConfig& config);

// Number of training elements the configuration resolves to.
std::size_t training_points(const ExperimentConfig& config);

// Flat "key = value" text; '#' starts a comment. Doubles are written with
// round-trip precision so a snapshot reproduces the run exactly.
std::string to_config_text(const ExperimentConfig& config);
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& file);

// Sets one key from its textual value (the same keys as the config file).
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);

std::string refine_to_string(const RefineSchedule& schedule);   // none | local:<every>:<frac> | global:<at>
RefineSchedule parse_refine(std::string_view text);

// table1 .. table5. For table5, mode is "local", "global" or "uniform".
ExperimentConfig preset(std::string_view name, std::string_view mode = "local");
bool is_preset(std::string_view name);

// Worker threads for replicas: DEEPLS_WORKERS if set, else the core count.
std::size_t worker_limit();

struct ExperimentOutcome {
  ErrorReport report;  // median replica
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  std::size_t final_points = 0;
  ReplicatedResult replicated;
};

// Everything run_experiment trains with, resolved from the config.
ReplicaSetup replica_setup(const ExperimentConfig& config);

// Trains every seed, then writes into config.out_dir:
//   config.txt, replica_<seed>/history.csv, replica_<seed>/metrics.json,
//   metrics.json, solution.csv (median replica) and, for refinement runs, partition.csv.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

struct ComparisonTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_text() const;
  std::string to_csv() const;
};

// One row per run directory, in the given order; absent metrics render as "---".
ComparisonTable compare_runs(const std::vector<std::filesystem::path>& dirs);

}  // namespace deepls
