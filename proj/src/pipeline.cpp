#include "advstat/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace advstat {

namespace {

constexpr std::uint64_t kDataTag = 0xda7aull;
constexpr std::uint64_t kTrainTag = 0x7a111ull;
constexpr std::uint64_t kAttackTag = 0xa77acull;
constexpr std::uint64_t kDetectTag = 0xde7ec7ull;

class StageClock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", eps);
  return buf;
}

void require_file(const std::filesystem::path& path, const char* what) {
  if (!std::filesystem::exists(path)) {
    throw DataError(std::string(what) + " not found: " + path.string());
  }
}

DatasetConfig parse_dataset(const nlohmann::json& obj,
                            const std::filesystem::path& base) {
  DatasetConfig ds;
  const std::string kind = obj.value("kind", "");
  if (kind == "idx") {
    ds.kind = DatasetConfig::Kind::idx;
    for (const char* key :
         {"train_images", "train_labels", "test_images", "test_labels"}) {
      if (!obj.contains(key)) {
        throw ConfigError(std::string("dataset.") + key + " is required");
      }
    }
    auto resolve = [&](const char* key) {
      std::filesystem::path p = obj.at(key).get<std::string>();
      return p.is_absolute() ? p : base / p;
    };
    ds.train_images = resolve("train_images");
    ds.train_labels = resolve("train_labels");
    ds.test_images = resolve("test_images");
    ds.test_labels = resolve("test_labels");
  } else if (kind == "synth") {
    ds.kind = DatasetConfig::Kind::synth;
    ds.num_classes = obj.value("num_classes", 2);
    ds.dim = obj.value("dim", 2);
    ds.sigma = obj.value("sigma", 1.0);
    ds.train_per_class = obj.value("train_per_class", 500);
    ds.test_per_class = obj.value("test_per_class", 200);
    if (obj.contains("class_means")) {
      for (const auto& mean : obj.at("class_means")) {
        const auto values = mean.get<std::vector<double>>();
        ds.class_means.push_back(Eigen::Map<const Eigen::VectorXd>(
            values.data(), static_cast<Eigen::Index>(values.size())));
      }
    }
  } else {
    throw ConfigError("dataset.kind must be \"idx\" or \"synth\"");
  }
  return ds;
}

std::vector<Eigen::VectorXd> default_class_means(const DatasetConfig& ds) {
  std::vector<Eigen::VectorXd> means;
  for (int c = 0; c < ds.num_classes; ++c) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(ds.dim);
    v(c % ds.dim) = 6.0 * ds.sigma * (1.0 + static_cast<double>(c / ds.dim));
    means.push_back(std::move(v));
  }
  return means;
}

SynthBlobConfig synth_config(const DatasetConfig& ds, int per_class,
                             std::uint64_t seed) {
  SynthBlobConfig cfg;
  cfg.num_classes = ds.num_classes;
  cfg.dim = ds.dim;
  cfg.sigma = ds.sigma;
  cfg.samples_per_class = per_class;
  cfg.seed = seed;
  cfg.class_means =
      ds.class_means.empty() ? default_class_means(ds) : ds.class_means;
  return cfg;
}

struct LoadedData {
  ImageSet images;
  LabelSet labels;
};

LoadedData load_split(const RunConfig& config, bool train_split) {
  const DatasetConfig& ds = config.dataset;
  if (ds.kind == DatasetConfig::Kind::idx) {
    const auto& images = train_split ? ds.train_images : ds.test_images;
    const auto& labels = train_split ? ds.train_labels : ds.test_labels;
    require_file(images, "dataset image file");
    require_file(labels, "dataset label file");
    LoadedData data{load_idx_images(images), load_idx_labels(labels)};
    if (data.images.count() !=
        static_cast<Eigen::Index>(data.labels.labels.size())) {
      throw DataError("image/label count mismatch for " + images.string());
    }
    return data;
  }
  const std::uint64_t seed =
      derive_seed(config.seed, kDataTag, train_split ? 0ull : 1ull);
  auto [images, labels] = synth_blobs(
      synth_config(ds, train_split ? ds.train_per_class : ds.test_per_class,
                   seed));
  return {std::move(images), std::move(labels)};
}

AttackConfig attack_config(const RunConfig& config, const AttackSpec& spec,
                           double eps) {
  AttackConfig a;
  a.attack_id = spec.attack;
  a.epsilon = eps;
  a.pgd_steps = spec.pgd_steps;
  a.pgd_step_size = spec.pgd_step_size;
  a.random_start = spec.random_start;
  a.clip_min = config.clip_min;
  a.clip_max = config.clip_max;
  a.seed = derive_seed(config.seed, kAttackTag,
                       static_cast<std::uint64_t>(spec.attack),
                       std::bit_cast<std::uint64_t>(eps));
  return a;
}

std::map<std::string, std::uint64_t> all_seeds(const RunConfig& config) {
  std::map<std::string, std::uint64_t> seeds;
  seeds["global"] = config.seed;
  seeds["train"] = derive_seed(config.seed, kTrainTag);
  if (config.dataset.kind == DatasetConfig::Kind::synth) {
    seeds["data.train"] = derive_seed(config.seed, kDataTag, 0ull);
    seeds["data.test"] = derive_seed(config.seed, kDataTag, 1ull);
  }
  for (const AttackSpec& spec : config.attacks) {
    for (double eps : spec.epsilons) {
      seeds[std::string("attack.") + to_string(spec.attack) + ".eps" +
            eps_tag(eps)] =
          derive_seed(config.seed, kAttackTag,
                      static_cast<std::uint64_t>(spec.attack),
                      std::bit_cast<std::uint64_t>(eps));
    }
  }
  seeds["detect"] = derive_seed(config.seed, kDetectTag);
  return seeds;
}

std::map<std::string, std::string> dataset_checksums(const RunConfig& config) {
  std::map<std::string, std::string> sums;
  const DatasetConfig& ds = config.dataset;
  if (ds.kind == DatasetConfig::Kind::idx) {
    for (const auto& path : {ds.train_images, ds.train_labels, ds.test_images,
                             ds.test_labels}) {
      if (std::filesystem::exists(path)) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                      static_cast<unsigned long long>(fnv1a64_file(path)));
        sums[path.filename().string()] = buf;
      }
    }
  } else {
    std::ostringstream desc;
    desc << "synth:classes=" << ds.num_classes << ",dim=" << ds.dim
         << ",sigma=" << ds.sigma << ",train=" << ds.train_per_class
         << ",test=" << ds.test_per_class;
    sums["synth"] = desc.str();
  }
  return sums;
}

// Each stage records its timing; earlier entries from other stages are kept.
void update_metadata(const RunConfig& config, const std::string& stage,
                     double seconds) {
  RunMetadata meta;
  meta.config_snapshot = config.snapshot;
  meta.seeds = all_seeds(config);
  meta.dataset_checksums = dataset_checksums(config);
  const auto path = metadata_path(config);
  if (std::filesystem::exists(path)) {
    try {
      std::ifstream in(path);
      const auto old = nlohmann::json::parse(in);
      for (const auto& t : old.value("timings", nlohmann::json::array())) {
        const std::string old_stage = t.value("stage", "");
        if (old_stage != stage && !old_stage.empty()) {
          meta.timings.push_back({old_stage, t.value("seconds", 0.0)});
        }
      }
    } catch (const std::exception&) {
      // Unreadable metadata is rebuilt from scratch.
    }
  }
  meta.timings.push_back({stage, seconds});
  write_metadata(meta, path);
}

std::string pct_cell(double mean, double stddev) {
  return fmt_pct2(mean) + " (+/- " + fmt_pct2(stddev) + ")";
}

void print_aggregate_table(const AucReport& report, std::ostream& out) {
  std::set<std::pair<std::string, std::string>> columns;
  std::set<int> sizes;
  for (const AucAggregate& a : report.aggregates) {
    columns.insert({to_string(a.attack), to_string(a.metric)});
    sizes.insert(a.sample_size);
  }
  out << std::left << std::setw(12) << "sample_size";
  for (const auto& [attack, metric] : columns) {
    out << std::setw(22) << (attack + "/" + metric);
  }
  out << '\n';
  for (int size : sizes) {
    out << std::left << std::setw(12) << size;
    for (const auto& [attack, metric] : columns) {
      std::string cell = "-";
      for (const AucAggregate& a : report.aggregates) {
        if (a.sample_size == size && attack == to_string(a.attack) &&
            metric == to_string(a.metric)) {
          cell = pct_cell(a.mean, a.stddev);
        }
      }
      out << std::setw(22) << cell;
    }
    out << '\n';
  }
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
  require_file(path, "config file");
  std::ifstream in(path);
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  const std::filesystem::path base = path.parent_path();
  RunConfig config;
  config.snapshot = obj;
  try {
    config.seed = obj.value("seed", 0ull);
    if (!obj.contains("output_dir")) {
      throw ConfigError("output_dir is required");
    }
    std::filesystem::path out_dir = obj.at("output_dir").get<std::string>();
    config.output_dir = out_dir.is_absolute() ? out_dir : base / out_dir;
    if (!obj.contains("dataset")) {
      throw ConfigError("dataset section is required");
    }
    config.dataset = parse_dataset(obj.at("dataset"), base);

    if (obj.contains("model")) {
      config.hidden_dims =
          obj.at("model").value("hidden_dims", config.hidden_dims);
    }
    if (obj.contains("train")) {
      const auto& t = obj.at("train");
      config.train.epochs = t.value("epochs", config.train.epochs);
      config.train.learning_rate =
          t.value("learning_rate", config.train.learning_rate);
      config.train.batch_size = t.value("batch_size", config.train.batch_size);
      const std::string opt = t.value("optimizer", "adam");
      if (opt == "adam") {
        config.train.optimizer = Optimizer::adam;
      } else if (opt == "sgd") {
        config.train.optimizer = Optimizer::sgd;
      } else {
        throw ConfigError("train.optimizer must be \"adam\" or \"sgd\"");
      }
    }

    const bool synth = config.dataset.kind == DatasetConfig::Kind::synth;
    config.clip_min = synth ? -1e9 : 0.0;
    config.clip_max = synth ? 1e9 : 1.0;
    if (obj.contains("attack_domain")) {
      config.clip_min = obj.at("attack_domain").value("clip_min", config.clip_min);
      config.clip_max = obj.at("attack_domain").value("clip_max", config.clip_max);
    }
    if (!(config.clip_min < config.clip_max)) {
      throw ConfigError("attack_domain requires clip_min < clip_max");
    }

    if (!obj.contains("attacks") || obj.at("attacks").empty()) {
      throw ConfigError("attacks list is required");
    }
    for (const auto& a : obj.at("attacks")) {
      AttackSpec spec;
      spec.attack = attack_from_string(a.value("attack", ""));
      if (spec.attack == AttackId::none) {
        throw ConfigError("attack must be \"fgsm\" or \"pgd\"");
      }
      spec.epsilons = a.value("epsilons", std::vector<double>{});
      if (spec.epsilons.empty()) {
        throw ConfigError("attack needs a non-empty epsilons list");
      }
      for (double eps : spec.epsilons) {
        if (!(eps > 0.0)) throw ConfigError("attack epsilons must be > 0");
      }
      spec.pgd_steps = a.value("steps", spec.pgd_steps);
      spec.pgd_step_size = a.value("step_size", spec.pgd_step_size);
      spec.random_start = a.value("random_start", spec.random_start);
      config.attacks.push_back(std::move(spec));
    }

    if (obj.contains("trials")) {
      const auto& t = obj.at("trials");
      config.trials.sample_sizes =
          t.value("sample_sizes", config.trials.sample_sizes);
      config.trials.repetitions =
          t.value("repetitions", config.trials.repetitions);
      if (t.contains("metrics")) {
        config.trials.metrics.clear();
        for (const auto& m : t.at("metrics")) {
          config.trials.metrics.push_back(
              metric_from_string(m.get<std::string>()));
        }
      }
    }
  } catch (const FormatError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  config.trials.seed = derive_seed(config.seed, kDetectTag);
  return config;
}

std::filesystem::path checkpoint_path(const RunConfig& config) {
  return config.output_dir / "model.json";
}
std::filesystem::path original_records_path(const RunConfig& config) {
  return config.output_dir / "records" / "original.jsonl";
}
std::filesystem::path adversarial_records_path(const RunConfig& config,
                                               AttackId attack, double eps) {
  return config.output_dir / "records" /
         (std::string("adv_") + to_string(attack) + "_eps" + eps_tag(eps) +
          ".jsonl");
}
std::filesystem::path trials_csv_path(const RunConfig& config) {
  return config.output_dir / "trials.csv";
}
std::filesystem::path auc_csv_path(const RunConfig& config) {
  return config.output_dir / "auc.csv";
}
std::filesystem::path metadata_path(const RunConfig& config) {
  return config.output_dir / "metadata.json";
}

void cmd_train(const RunConfig& config, std::ostream& out) {
  StageClock clock;
  std::filesystem::create_directories(config.output_dir);
  const LoadedData train_data = load_split(config, true);
  const LoadedData test_data = load_split(config, false);
  if (train_data.labels.num_classes < 2) {
    throw DataError("training data has fewer than 2 classes");
  }

  std::vector<int> dims;
  dims.push_back(static_cast<int>(train_data.images.dim()));
  dims.insert(dims.end(), config.hidden_dims.begin(),
              config.hidden_dims.end());
  dims.push_back(std::max(train_data.labels.num_classes,
                          test_data.labels.num_classes));

  TrainConfig train_config = config.train;
  train_config.seed = derive_seed(config.seed, kTrainTag);
  MlpModel model = init_model(dims, train_config.seed);
  model = train(std::move(model), train_data.images, train_data.labels,
                train_config);

  const double test_accuracy =
      accuracy(model, test_data.images.pixels, test_data.labels.labels);
  save_model(model, checkpoint_path(config));
  update_metadata(config, "train", clock.seconds());
  out << "trained " << dims.size() - 1 << "-layer model";
  out << " [";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    out << (i ? "x" : "") << dims[i];
  }
  out << "], test accuracy: " << fmt_pct2(test_accuracy) << "%\n";
}

void cmd_attack(const RunConfig& config, std::ostream& out) {
  StageClock clock;
  require_file(checkpoint_path(config), "model checkpoint");
  const MlpModel model = load_model(checkpoint_path(config));
  const LoadedData test_data = load_split(config, false);
  std::filesystem::create_directories(config.output_dir / "records");

  // Only correctly classified test samples feed the detector and attacks.
  const std::vector<int> predicted = predict(model, test_data.images.pixels);
  std::vector<ActivationRecord> originals =
      extract_logits(model, test_data.images.pixels, test_data.labels.labels);
  std::erase_if(originals, [](const ActivationRecord& r) {
    return r.predicted_label != r.true_label;
  });
  write_records(originals, original_records_path(config));
  out << "original records (correctly classified): " << originals.size()
      << " / " << test_data.labels.labels.size() << '\n';

  for (const AttackSpec& spec : config.attacks) {
    for (double eps : spec.epsilons) {
      const AttackConfig attack = attack_config(config, spec, eps);
      const std::vector<ActivationRecord> adversaries =
          generate_adversarial_records(model, test_data.images,
                                       test_data.labels, attack);
      write_records(adversaries,
                    adversarial_records_path(config, spec.attack, eps));
      const double rate = originals.empty()
                              ? 0.0
                              : static_cast<double>(adversaries.size()) /
                                    static_cast<double>(originals.size());
      out << to_string(spec.attack) << " eps=" << eps_tag(eps)
          << ": success rate " << fmt_pct2(rate) << "% (" << adversaries.size()
          << " adversaries)\n";
    }
  }
  update_metadata(config, "attack", clock.seconds());
}

void cmd_detect(const RunConfig& config, std::ostream& out) {
  StageClock clock;
  require_file(original_records_path(config), "original record file");
  const std::vector<ActivationRecord> originals =
      read_records(original_records_path(config));
  std::vector<ActivationRecord> adversaries;
  for (const AttackSpec& spec : config.attacks) {
    for (double eps : spec.epsilons) {
      const auto path = adversarial_records_path(config, spec.attack, eps);
      require_file(path, "adversarial record file");
      const auto batch = read_records(path);
      adversaries.insert(adversaries.end(), batch.begin(), batch.end());
    }
  }

  std::vector<ClassPartition> partitions =
      partition_baseline(originals, derive_seed(config.seed, kDetectTag));
  attach_adversaries(partitions, adversaries);

  TrialConfig trial_config = config.trials;
  trial_config.seed = derive_seed(config.seed, kDetectTag);
  const TrialRun run = run_trials(partitions, trial_config);
  const AucReport report = aggregate(run);

  write_trials_csv(run, trials_csv_path(config));
  write_auc_csv(report, auc_csv_path(config));
  update_metadata(config, "detect", clock.seconds());

  out << "scored " << report.cells.size() << " cells ("
      << run.skipped_cells.size() << " skipped), AUC means in %:\n";
  print_aggregate_table(report, out);
}

void cmd_recompute(const std::filesystem::path& trials_csv,
                   const std::filesystem::path& auc_csv, std::ostream& out) {
  const TrialRun run = read_trials_csv(trials_csv);
  const AucReport report = aggregate(run);
  write_auc_csv(report, auc_csv);
  out << "recomputed " << report.aggregates.size() << " aggregate rows from "
      << run.scores.size() << " trial scores\n";
}

}  // namespace advstat
