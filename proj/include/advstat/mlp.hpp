#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "advstat/idx.hpp"
#include "advstat/records.hpp"

namespace advstat {

// Fully connected net: ReLU on hidden layers, identity on the output layer.
// The pre-softmax output of the final layer is the logit vector.
struct MlpModel {
  std::vector<int> layer_dims;             // [d, h1, ..., C]
  std::vector<Eigen::MatrixXd> weights;    // weights[l]: dims[l] x dims[l+1]
  std::vector<Eigen::VectorXd> biases;     // biases[l]: dims[l+1]

  int input_dim() const { return layer_dims.front(); }
  int num_classes() const { return layer_dims.back(); }
  std::size_t num_layers() const { return weights.size(); }
};

enum class Optimizer { sgd, adam };

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 1e-3;
  int batch_size = 128;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

// Per-layer intermediates of one forward pass, enough to run backward.
// inputs[l] is what entered layer l (inputs[0] is the batch itself);
// pre_activations[l] is inputs[l] * W[l] + b[l] before the nonlinearity.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre_activations;
};

struct ParamGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Weights ~ N(0, 1/fan_in), biases zero, deterministic per seed.
MlpModel init_model(const std::vector<int>& layer_dims, std::uint64_t seed);

// batch: one sample per row. Returns the logits matrix (n x C).
Eigen::MatrixXd forward(const MlpModel& model, const Eigen::MatrixXd& batch,
                        ForwardCache* cache = nullptr);

// Mean cross-entropy over the batch and its gradient w.r.t. every parameter.
std::pair<double, ParamGrads> loss_and_param_grads(
    const MlpModel& model, const Eigen::MatrixXd& batch,
    const std::vector<int>& labels);

// Gradient of the single-sample cross-entropy w.r.t. the input vector.
Eigen::VectorXd input_gradient(const MlpModel& model, const Eigen::VectorXd& x,
                               int label);

// Mini-batch training with seeded shuffling each epoch; bitwise reproducible
// for a fixed seed. Returns the trained model.
MlpModel train(MlpModel model, const ImageSet& images, const LabelSet& labels,
               const TrainConfig& config);

// Argmax over logits, ties broken toward the lowest class index.
int argmax_lowest(const Eigen::VectorXd& v);
std::vector<int> predict(const MlpModel& model, const Eigen::MatrixXd& images);
double accuracy(const MlpModel& model, const Eigen::MatrixXd& images,
                const std::vector<int>& labels);

// One original-origin record per image, carrying the raw logits.
std::vector<ActivationRecord> extract_logits(const MlpModel& model,
                                             const Eigen::MatrixXd& images,
                                             const std::vector<int>& labels);

// Structured-text checkpoint; parameters round-trip exactly.
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace advstat
