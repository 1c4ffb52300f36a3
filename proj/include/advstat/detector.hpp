#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "advstat/distances.hpp"
#include "advstat/records.hpp"

namespace advstat {

enum class Metric { ed, mmd };
enum class TestOrigin { original_test, adversarial_test };

const char* to_string(Metric m);
const char* to_string(TestOrigin o);
Metric metric_from_string(const std::string& s);
TestOrigin test_origin_from_string(const std::string& s);

struct AttackKey {
  AttackId attack = AttackId::none;
  double epsilon = 0.0;
  auto operator<=>(const AttackKey&) const = default;
};

// Per-class split of softmax-normalized activations: a fixed reference
// holdout, the rest of the originals, and the adversarial sets keyed by
// (attack, epsilon) that were misclassified into this class.
struct ClassPartition {
  int class_id = 0;
  SampleSet reference;
  SampleSet rest_original;
  std::map<AttackKey, SampleSet> adversarial;
};

struct TrialConfig {
  std::vector<int> sample_sizes = {1, 5, 10, 20};
  int repetitions = 100;
  std::vector<Metric> metrics = {Metric::ed, Metric::mmd};
  std::uint64_t seed = 0;
};

struct TrialScore {
  int class_id = 0;
  Metric metric = Metric::ed;
  int sample_size = 0;
  AttackId attack_id = AttackId::none;
  double epsilon = 0.0;
  TestOrigin origin = TestOrigin::original_test;
  int repetition = 0;
  double distance = 0.0;
};

// One (class, metric, sample size, attack, epsilon) scoring cell.
struct CellKey {
  AttackId attack = AttackId::none;
  Metric metric = Metric::ed;
  int sample_size = 0;
  int class_id = 0;
  double epsilon = 0.0;
  auto operator<=>(const CellKey&) const = default;
};

struct TrialRun {
  std::vector<TrialScore> scores;
  std::vector<CellKey> skipped_cells;
};

// Per class: min(100, floor(n_c/2)) records drawn uniformly without
// replacement into the reference, remainder into rest_original. Softmax is
// applied to every logit vector on entry unless apply_softmax is false.
// Records are canonically sorted by content first, so the partition is
// independent of input order. A class with fewer than two records is an
// error naming the class.
std::vector<ClassPartition> partition_baseline(
    const std::vector<ActivationRecord>& originals, std::uint64_t seed,
    bool apply_softmax = true);

// Each adversarial record joins the partition of its predicted label, keyed
// by (attack, epsilon). A predicted label with no partition is an error.
void attach_adversaries(std::vector<ClassPartition>& partitions,
                        const std::vector<ActivationRecord>& adversarial,
                        bool apply_softmax = true);

// For every cell and repetition draw sample_size rows without replacement
// from rest_original and from the adversarial set, score each test set
// against the reference, and emit two TrialScores. The MMD bandwidth is
// recomputed per comparison from the pooled reference+test rows. Cells whose
// rest_original or adversarial set is smaller than sample_size are skipped
// with a logged warning. The RNG stream of a repetition is derived from
// (seed, class, metric, sample_size, attack, epsilon, repetition), so any
// cell is reproducible in isolation.
TrialRun run_trials(const std::vector<ClassPartition>& partitions,
                    const TrialConfig& config);

// Mann-Whitney statistic: mean over pairs of [1 if p > n, 0.5 if p == n].
// Computed from pooled average ranks, which equals brute-force pair counting
// exactly.
double auc(const std::vector<double>& positive_scores,
           const std::vector<double>& negative_scores);

struct AucCell {
  CellKey key;
  double auc_value = 0.0;
};

struct AucAggregate {
  AttackId attack = AttackId::none;
  Metric metric = Metric::ed;
  int sample_size = 0;
  double mean = 0.0;
  double stddev = 0.0;
  int cells_pooled = 0;
  int cells_skipped = 0;
};

struct AucReport {
  std::vector<AucCell> cells;
  std::vector<AucAggregate> aggregates;
};

// Per-cell AUC with adversarial-test distances as positives, then mean and
// sample standard deviation over the (class x epsilon) grid per
// (attack, metric, sample_size). A single pooled cell has stddev 0 by
// convention; a row whose cells were all skipped reports NaN statistics.
AucReport aggregate(const TrialRun& run);

}  // namespace advstat
