#include "advstat/synth.hpp"

#include <random>

namespace advstat {

std::pair<ImageSet, LabelSet> synth_blobs(const SynthBlobConfig& config) {
  if (config.num_classes < 1) {
    throw ConfigError("synth_blobs: num_classes must be >= 1");
  }
  if (config.dim < 1) {
    throw ConfigError("synth_blobs: dim must be >= 1");
  }
  if (!(config.sigma > 0.0)) {
    throw ConfigError("synth_blobs: sigma must be > 0");
  }
  if (config.samples_per_class < 1) {
    throw ConfigError("synth_blobs: samples_per_class must be >= 1");
  }
  if (static_cast<int>(config.class_means.size()) != config.num_classes) {
    throw ConfigError("synth_blobs: need one class mean per class");
  }
  for (int c = 0; c < config.num_classes; ++c) {
    if (config.class_means[c].size() != config.dim) {
      throw ConfigError("synth_blobs: class mean " + std::to_string(c) +
                        " has wrong dimension");
    }
    for (int d = 0; d < c; ++d) {
      if (config.class_means[c] == config.class_means[d]) {
        throw ConfigError("synth_blobs: class means " + std::to_string(d) +
                          " and " + std::to_string(c) + " coincide");
      }
    }
  }

  const int n = config.num_classes * config.samples_per_class;
  ImageSet features;
  features.pixels.resize(n, config.dim);
  LabelSet labels;
  labels.labels.reserve(n);
  labels.num_classes = config.num_classes;

  std::mt19937_64 rng(derive_seed(config.seed, 0x5b0b5ull));
  std::normal_distribution<double> gauss(0.0, 1.0);
  int row = 0;
  for (int c = 0; c < config.num_classes; ++c) {
    for (int s = 0; s < config.samples_per_class; ++s, ++row) {
      for (int d = 0; d < config.dim; ++d) {
        features.pixels(row, d) =
            config.class_means[c](d) + config.sigma * gauss(rng);
      }
      labels.labels.push_back(c);
    }
  }
  return {std::move(features), std::move(labels)};
}

}  // namespace advstat
