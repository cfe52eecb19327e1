#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpa/attack.hpp"
#include "mpa/dataset.hpp"
#include "mpa/dp.hpp"
#include "mpa/models.hpp"

namespace mpa {

struct DatasetConfig {
  std::string source = "blobs";  // csv | blobs | purchases
  std::string csv_path;
  LabelColumn label_column = std::string("label");
  bool normalize = true;
  int k = 2;
  int per_class = 100;
  int m = 8;
  double spread = 0.15;
  double flip_prob = 0.1;
};

enum class ScenarioKind { Single, SkewSweep, NoiseSweep, TransferMatrix, DpSweep, DepthSweep };

std::string to_string(ScenarioKind kind);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Single;
  // skew_sweep (also used to pre-skew other scenarios when fractions empty)
  int skew_class = 0;
  std::vector<double> fractions;
  // noise_sweep
  std::vector<double> sigmas;
  std::string applied_to = "target_data";  // target_data | shadow_data
  // transfer_matrix
  std::vector<ModelKind> model_kinds;
  // dp_sweep
  std::vector<double> sigma_list;
  std::vector<double> epsilon_list;
  // depth_sweep
  std::vector<int> depths;  // -1 = unbounded
  // single extras
  bool pca_plot = false;
  bool export_attack_dataset = false;
  std::optional<double> base_skew_fraction;  // applied before any scenario point
};

struct AttackerConfig {
  std::string method = "shadow";  // shadow | threshold
  ShadowConfig shadow;
  ModelSpec attack_spec;
  AttackMode mode = AttackMode::Global;
  std::size_t min_class_records = 20;
  bool sort_features = false;
  ThresholdAttackConfig threshold;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  ModelSpec target_model;
  SplitPlan split;
  AttackerConfig attacker;
  std::optional<DPConfig> dp;
  bool dp_delta_given = false;
  ScenarioConfig scenario;
  std::vector<std::uint64_t> seeds = {1};
  std::string output_dir = "out";
};

// Structural checks; each problem string is "config.path: reason". An empty
// result means the config is runnable.
std::vector<std::string> validate_config(const nlohmann::json& j);

// Assumes validate_config passed; throws std::invalid_argument otherwise.
ExperimentConfig parse_config(const nlohmann::json& j);

nlohmann::json load_config_file(const std::string& path);

std::string config_hash(const nlohmann::json& j);

struct RunResult {
  int points_run = 0;
  int points_failed = 0;
  std::vector<std::string> errors;
  std::string manifest_path;
};

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> parallel;
};

RunResult run_experiment(const nlohmann::json& config_json,
                         const RunOverrides& overrides = {});

// Re-renders the flat CSV tables from the report.json records under dir.
void render_report_tables(const std::string& dir);

}  // namespace mpa
