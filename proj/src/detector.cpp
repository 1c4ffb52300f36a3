#include "advstat/detector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iostream>
#include <limits>
#include <random>
#include <set>

namespace advstat {

namespace {

bool record_less(const ActivationRecord& a, const ActivationRecord& b) {
  if (a.logits != b.logits) {
    return std::lexicographical_compare(a.logits.begin(), a.logits.end(),
                                        b.logits.begin(), b.logits.end());
  }
  return std::tie(a.true_label, a.predicted_label, a.epsilon, a.attack_id,
                  a.origin) < std::tie(b.true_label, b.predicted_label,
                                       b.epsilon, b.attack_id, b.origin);
}

SampleSet rows_from_records(const std::vector<const ActivationRecord*>& records,
                            bool apply_softmax) {
  const Eigen::Index dim =
      static_cast<Eigen::Index>(records.front()->logits.size());
  SampleSet rows(static_cast<Eigen::Index>(records.size()), dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (static_cast<Eigen::Index>(records[i]->logits.size()) != dim) {
      throw DataError("records disagree on logit dimension");
    }
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(
        records[i]->logits.data(), dim);
    rows.row(static_cast<Eigen::Index>(i)) =
        (apply_softmax ? softmax(v) : v).transpose();
  }
  return rows;
}

// Partial Fisher-Yates draw of k row indices out of n, without replacement.
std::vector<Eigen::Index> draw_indices(int k, Eigen::Index n,
                                       std::mt19937_64& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

SampleSet take_rows(const SampleSet& source,
                    const std::vector<Eigen::Index>& idx) {
  SampleSet out(static_cast<Eigen::Index>(idx.size()), source.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = source.row(idx[i]);
  }
  return out;
}

double score_test_set(Metric metric, const SampleSet& test,
                      const SampleSet& reference) {
  if (metric == Metric::ed) {
    return energy_distance(test, reference);
  }
  const KernelSpec kernel{median_heuristic(reference, test)};
  return mmd_biased(test, reference, kernel);
}

}  // namespace

const char* to_string(Metric m) { return m == Metric::ed ? "ed" : "mmd"; }

const char* to_string(TestOrigin o) {
  return o == TestOrigin::original_test ? "original-test" : "adversarial-test";
}

Metric metric_from_string(const std::string& s) {
  if (s == "ed") return Metric::ed;
  if (s == "mmd") return Metric::mmd;
  throw FormatError("unknown metric \"" + s + "\"");
}

TestOrigin test_origin_from_string(const std::string& s) {
  if (s == "original-test") return TestOrigin::original_test;
  if (s == "adversarial-test") return TestOrigin::adversarial_test;
  throw FormatError("unknown test origin \"" + s + "\"");
}

std::vector<ClassPartition> partition_baseline(
    const std::vector<ActivationRecord>& originals, std::uint64_t seed,
    bool apply_softmax) {
  std::map<int, std::vector<const ActivationRecord*>> by_class;
  for (const ActivationRecord& r : originals) {
    if (r.origin != Origin::original) {
      throw std::invalid_argument(
          "partition_baseline expects original-origin records");
    }
    if (r.predicted_label != r.true_label) {
      throw std::invalid_argument(
          "partition_baseline expects correctly classified records");
    }
    by_class[r.true_label].push_back(&r);
  }

  std::vector<ClassPartition> partitions;
  partitions.reserve(by_class.size());
  for (auto& [class_id, records] : by_class) {
    const std::size_t n = records.size();
    if (n < 2) {
      throw DataError("class " + std::to_string(class_id) +
                      " has fewer than 2 original records");
    }
    std::sort(records.begin(), records.end(),
              [](const ActivationRecord* a, const ActivationRecord* b) {
                return record_less(*a, *b);
              });
    const std::size_t reference_size = std::min<std::size_t>(100, n / 2);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(
        derive_seed(seed, 0xba5e11ull, static_cast<std::uint64_t>(class_id)));
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::size_t> ref_idx(order.begin(),
                                     order.begin() + reference_size);
    std::vector<std::size_t> rest_idx(order.begin() + reference_size,
                                      order.end());
    std::sort(ref_idx.begin(), ref_idx.end());
    std::sort(rest_idx.begin(), rest_idx.end());

    auto select = [&](const std::vector<std::size_t>& idx) {
      std::vector<const ActivationRecord*> chosen;
      chosen.reserve(idx.size());
      for (std::size_t i : idx) chosen.push_back(records[i]);
      return rows_from_records(chosen, apply_softmax);
    };

    ClassPartition partition;
    partition.class_id = class_id;
    partition.reference = select(ref_idx);
    partition.rest_original = select(rest_idx);
    partitions.push_back(std::move(partition));
  }
  return partitions;
}

void attach_adversaries(std::vector<ClassPartition>& partitions,
                        const std::vector<ActivationRecord>& adversarial,
                        bool apply_softmax) {
  std::map<int, std::size_t> partition_of;
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    partition_of[partitions[i].class_id] = i;
  }
  std::map<std::pair<int, AttackKey>, std::vector<const ActivationRecord*>>
      groups;
  for (const ActivationRecord& r : adversarial) {
    if (r.origin != Origin::adversarial) {
      throw std::invalid_argument(
          "attach_adversaries expects adversarial-origin records");
    }
    if (r.predicted_label == r.true_label) {
      throw std::invalid_argument(
          "adversarial record with predicted_label == true_label");
    }
    if (!partition_of.contains(r.predicted_label)) {
      throw DataError("adversary predicted into class " +
                      std::to_string(r.predicted_label) +
                      " which has no original partition");
    }
    groups[{r.predicted_label, {r.attack_id, r.epsilon}}].push_back(&r);
  }
  for (auto& [key, records] : groups) {
    std::sort(records.begin(), records.end(),
              [](const ActivationRecord* a, const ActivationRecord* b) {
                return record_less(*a, *b);
              });
    partitions[partition_of[key.first]].adversarial[key.second] =
        rows_from_records(records, apply_softmax);
  }
}

TrialRun run_trials(const std::vector<ClassPartition>& partitions,
                    const TrialConfig& config) {
  if (config.metrics.empty()) {
    throw ConfigError("run_trials: metric list is empty");
  }
  if (config.repetitions < 2) {
    throw ConfigError("run_trials: need at least 2 repetitions");
  }
  for (int s : config.sample_sizes) {
    if (s < 1) throw ConfigError("run_trials: sample sizes must be >= 1");
  }

  std::vector<Metric> metrics = config.metrics;
  std::sort(metrics.begin(), metrics.end());
  metrics.erase(std::unique(metrics.begin(), metrics.end()), metrics.end());
  std::vector<int> sizes = config.sample_sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

  // The attempted grid spans every (attack, epsilon) observed anywhere.
  std::set<AttackKey> attack_keys;
  for (const ClassPartition& p : partitions) {
    for (const auto& [key, rows] : p.adversarial) attack_keys.insert(key);
  }

  TrialRun run;
  for (const ClassPartition& partition : partitions) {
    for (Metric metric : metrics) {
      for (int size : sizes) {
        for (const AttackKey& attack : attack_keys) {
          const auto it = partition.adversarial.find(attack);
          const Eigen::Index adv_count =
              it == partition.adversarial.end() ? 0 : it->second.rows();
          if (partition.rest_original.rows() < size || adv_count < size) {
            run.skipped_cells.push_back({attack.attack, metric, size,
                                         partition.class_id, attack.epsilon});
            std::cerr << "warning: skipping cell class="
                      << partition.class_id << " metric=" << to_string(metric)
                      << " size=" << size << " attack="
                      << to_string(attack.attack) << " eps=" << attack.epsilon
                      << " (rest=" << partition.rest_original.rows()
                      << ", adversarial=" << adv_count << ")\n";
            continue;
          }
          for (int rep = 0; rep < config.repetitions; ++rep) {
            std::mt19937_64 rng(derive_seed(
                config.seed, 0x7a1a15ull,
                static_cast<std::uint64_t>(partition.class_id),
                static_cast<std::uint64_t>(metric),
                static_cast<std::uint64_t>(size),
                static_cast<std::uint64_t>(attack.attack),
                std::bit_cast<std::uint64_t>(attack.epsilon),
                static_cast<std::uint64_t>(rep)));
            const SampleSet original_test = take_rows(
                partition.rest_original,
                draw_indices(size, partition.rest_original.rows(), rng));
            const SampleSet adversarial_test =
                take_rows(it->second, draw_indices(size, adv_count, rng));
            run.scores.push_back(
                {partition.class_id, metric, size, attack.attack,
                 attack.epsilon, TestOrigin::original_test, rep,
                 score_test_set(metric, original_test, partition.reference)});
            run.scores.push_back(
                {partition.class_id, metric, size, attack.attack,
                 attack.epsilon, TestOrigin::adversarial_test, rep,
                 score_test_set(metric, adversarial_test,
                                partition.reference)});
          }
        }
      }
    }
  }
  return run;
}

double auc(const std::vector<double>& positive_scores,
           const std::vector<double>& negative_scores) {
  if (positive_scores.empty() || negative_scores.empty()) {
    throw std::invalid_argument("auc needs non-empty score lists");
  }
  struct Entry {
    double value;
    bool positive;
  };
  std::vector<Entry> pool;
  pool.reserve(positive_scores.size() + negative_scores.size());
  for (double v : positive_scores) pool.push_back({v, true});
  for (double v : negative_scores) pool.push_back({v, false});
  std::sort(pool.begin(), pool.end(),
            [](const Entry& a, const Entry& b) { return a.value < b.value; });

  // Sum of average ranks of the positives; ranks and tie averages are exact
  // multiples of 0.5, so the result equals brute-force pair counting.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < pool.size()) {
    std::size_t j = i;
    while (j < pool.size() && pool[j].value == pool[i].value) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) +
                                   static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (pool[k].positive) rank_sum += avg_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(positive_scores.size());
  const double n = static_cast<double>(negative_scores.size());
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

AucReport aggregate(const TrialRun& run) {
  struct CellScores {
    std::vector<double> positives;
    std::vector<double> negatives;
  };
  std::map<CellKey, CellScores> cells;
  for (const TrialScore& s : run.scores) {
    if (!(s.distance >= 0.0) || !std::isfinite(s.distance)) {
      throw DataError("trial score with invalid distance");
    }
    CellScores& cell = cells[{s.attack_id, s.metric, s.sample_size,
                              s.class_id, s.epsilon}];
    (s.origin == TestOrigin::adversarial_test ? cell.positives
                                              : cell.negatives)
        .push_back(s.distance);
  }

  AucReport report;
  struct RowKey {
    AttackId attack;
    Metric metric;
    int sample_size;
    auto operator<=>(const RowKey&) const = default;
  };
  std::map<RowKey, std::vector<double>> row_aucs;
  for (const auto& [key, cell] : cells) {
    if (cell.positives.empty() || cell.negatives.empty()) {
      throw DataError("cell is missing one test origin");
    }
    const double value = auc(cell.positives, cell.negatives);
    report.cells.push_back({key, value});
    row_aucs[{key.attack, key.metric, key.sample_size}].push_back(value);
  }
  std::map<RowKey, int> row_skips;
  for (const CellKey& key : run.skipped_cells) {
    row_skips[{key.attack, key.metric, key.sample_size}] += 1;
    row_aucs.try_emplace({key.attack, key.metric, key.sample_size});
  }

  for (const auto& [row, values] : row_aucs) {
    AucAggregate agg;
    agg.attack = row.attack;
    agg.metric = row.metric;
    agg.sample_size = row.sample_size;
    agg.cells_pooled = static_cast<int>(values.size());
    const auto skip_it = row_skips.find(row);
    agg.cells_skipped = skip_it == row_skips.end() ? 0 : skip_it->second;
    if (values.empty()) {
      agg.mean = std::numeric_limits<double>::quiet_NaN();
      agg.stddev = std::numeric_limits<double>::quiet_NaN();
    } else {
      double sum = 0.0;
      for (double v : values) sum += v;
      agg.mean = sum / static_cast<double>(values.size());
      if (values.size() == 1) {
        agg.stddev = 0.0;
      } else {
        double ss = 0.0;
        for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
        agg.stddev = std::sqrt(ss / (static_cast<double>(values.size()) - 1.0));
      }
    }
    report.aggregates.push_back(agg);
  }
  return report;
}

}  // namespace advstat
