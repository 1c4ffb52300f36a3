#pragma once

#include <Eigen/Dense>

#include "advstat/common.hpp"

namespace advstat {

// One sample per row; all samples share the row length.
using SampleSet = Eigen::MatrixXd;

// Gaussian RBF is the only kernel family; sigma is the bandwidth.
struct KernelSpec {
  double sigma = 1.0;
};

// Numerically stable softmax: exp(v_i - max v) / sum_j exp(v_j - max v).
Eigen::VectorXd softmax(const Eigen::VectorXd& v);

// exp(-|u - v|^2 / (2 sigma^2)), in (0, 1].
double gaussian_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       double sigma);

// Median of the nonzero pairwise Euclidean distances of the pooled rows of
// x and y (even count: mean of the two middle order statistics). Zero
// distances are excluded so the bandwidth stays positive when the pool
// contains duplicates; if every distance is zero the fallback is 1.
double median_heuristic(const SampleSet& x, const SampleSet& y);

// Energy distance, V-statistic form:
//   sqrt(max(0, 2/(nm) SS|x_i-y_j| - 1/n^2 SS|x_i-x_j| - 1/m^2 SS|y_i-y_j|))
// Within-set sums run over all ordered pairs including i = j. Arguments are
// ordered canonically before accumulation, so d(x, y) == d(y, x) bitwise.
double energy_distance(const SampleSet& x, const SampleSet& y);

// Biased (V-statistic) MMD with a Gaussian kernel:
//   sqrt(max(0, 1/n^2 SS k(x_i,x_j) + 1/m^2 SS k(y_i,y_j) - 2/(nm) SS k(x_i,y_j)))
// Well-defined for singleton sets. Bitwise symmetric like energy_distance.
double mmd_biased(const SampleSet& x, const SampleSet& y,
                  const KernelSpec& kernel);

}  // namespace advstat
