#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "advstat/attacks.hpp"
#include "advstat/detector.hpp"
#include "advstat/mlp.hpp"
#include "advstat/report.hpp"
#include "advstat/synth.hpp"

#include "json.hpp"

namespace advstat {

struct DatasetConfig {
  enum class Kind { idx, synth };
  Kind kind = Kind::idx;
  // kind == idx
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  // kind == synth
  int num_classes = 2;
  int dim = 2;
  double sigma = 1.0;
  int train_per_class = 500;
  int test_per_class = 200;
  std::vector<Eigen::VectorXd> class_means;  // empty: spaced automatically
};

struct AttackSpec {
  AttackId attack = AttackId::fgsm;
  std::vector<double> epsilons;
  int pgd_steps = 40;
  double pgd_step_size = 0.0;  // <= 0: resolved as 2.5 * epsilon / steps
  bool random_start = true;
};

// One config file drives every stage; the global seed derives all stage
// seeds deterministically.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  DatasetConfig dataset;
  std::vector<int> hidden_dims = {256, 128};
  TrainConfig train;
  double clip_min = 0.0;
  double clip_max = 1.0;
  std::vector<AttackSpec> attacks;
  TrialConfig trials;
  nlohmann::json snapshot;  // the parsed file, for metadata
};

// Relative paths in the file resolve against the config file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

std::filesystem::path checkpoint_path(const RunConfig& config);
std::filesystem::path original_records_path(const RunConfig& config);
std::filesystem::path adversarial_records_path(const RunConfig& config,
                                               AttackId attack, double eps);
std::filesystem::path trials_csv_path(const RunConfig& config);
std::filesystem::path auc_csv_path(const RunConfig& config);
std::filesystem::path metadata_path(const RunConfig& config);

// Stage entry points used by the CLI; each is an idempotent function of the
// config plus the artifacts earlier stages left in output_dir.
void cmd_train(const RunConfig& config, std::ostream& out);
void cmd_attack(const RunConfig& config, std::ostream& out);
void cmd_detect(const RunConfig& config, std::ostream& out);
void cmd_recompute(const std::filesystem::path& trials_csv,
                   const std::filesystem::path& auc_csv, std::ostream& out);

}  // namespace advstat
