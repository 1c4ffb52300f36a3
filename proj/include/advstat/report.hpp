#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "advstat/detector.hpp"

#include "json.hpp"

namespace advstat {

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

// Everything needed to reproduce a run: the full config snapshot, every
// derived seed, dataset identities, and per-stage wall-clock timings.
struct RunMetadata {
  std::string artifact_version = kVersion;
  nlohmann::json config_snapshot;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> dataset_checksums;
  std::vector<StageTiming> timings;
};

// Aggregate table: schema comment line, then
// "attack,metric,sample_size,auc_mean_pct,auc_std_pct,cells_pooled,cells_skipped"
// with AUC percentages at 2 decimals, rows sorted by (attack, metric,
// sample_size).
void write_auc_csv(const AucReport& report, const std::filesystem::path& path);

// Full per-trial dump: schema comment line, one "# skipped,..." comment per
// skipped cell, a header, then one row per TrialScore with distances at full
// precision. Together with read_trials_csv this makes the AUC table a pure
// function of the trials file.
void write_trials_csv(const TrialRun& run, const std::filesystem::path& path);
TrialRun read_trials_csv(const std::filesystem::path& path);

void write_metadata(const RunMetadata& meta, const std::filesystem::path& path);

// Content hash used for dataset identity in metadata (FNV-1a, 64-bit).
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

}  // namespace advstat
