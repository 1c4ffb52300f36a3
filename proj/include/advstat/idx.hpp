#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "advstat/common.hpp"

namespace advstat {

// Flattened sample matrix, one sample per row. For IDX image files the
// pixels lie in [0, 1] and height/width carry the source shape; synthetic
// feature matrices reuse the struct with height = width = 0.
struct ImageSet {
  Eigen::MatrixXd pixels;
  int height = 0;
  int width = 0;

  Eigen::Index count() const { return pixels.rows(); }
  Eigen::Index dim() const { return pixels.cols(); }
};

struct LabelSet {
  std::vector<int> labels;
  int num_classes = 0;
};

// IDX image file: big-endian magic 0x00000803, dims n, h, w, then n*h*w
// unsigned bytes. Each byte b maps to b/255.0.
ImageSet load_idx_images(const std::filesystem::path& path);

// IDX label file: big-endian magic 0x00000801, count n, then n unsigned
// bytes. num_classes == 0 infers C as max label + 1; a positive value is
// enforced (label >= C is a range error).
LabelSet load_idx_labels(const std::filesystem::path& path,
                         int num_classes = 0);

}  // namespace advstat
