#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "advstat/idx.hpp"

namespace advstat {

// Isotropic Gaussian blobs, one per class. Serves as an oracle dataset for
// exercising the detector without training a model.
struct SynthBlobConfig {
  int num_classes = 2;
  int dim = 2;
  std::vector<Eigen::VectorXd> class_means;  // one per class, length dim
  double sigma = 1.0;
  int samples_per_class = 100;
  std::uint64_t seed = 0;
};

// samples_per_class draws per class from N(mean_c, sigma^2 I), emitted in
// class order. Pure function of the config, seed included.
std::pair<ImageSet, LabelSet> synth_blobs(const SynthBlobConfig& config);

}  // namespace advstat
