#include "advstat/mlp.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"

namespace advstat {

namespace {

void check_model(const MlpModel& model) {
  if (model.layer_dims.size() < 2 ||
      model.weights.size() != model.layer_dims.size() - 1 ||
      model.biases.size() != model.weights.size()) {
    throw std::invalid_argument("malformed model");
  }
}

void check_batch(const MlpModel& model, const Eigen::MatrixXd& batch) {
  if (batch.cols() != model.input_dim()) {
    throw std::invalid_argument(
        "batch dimension " + std::to_string(batch.cols()) +
        " does not match model input dimension " +
        std::to_string(model.input_dim()));
  }
}

// Row-wise softmax minus one-hot(labels), divided by the batch size: the
// gradient of the mean cross-entropy w.r.t. the logits.
Eigen::MatrixXd logit_gradient(const Eigen::MatrixXd& logits,
                               const std::vector<int>& labels,
                               double* loss_out) {
  const Eigen::Index n = logits.rows();
  Eigen::MatrixXd grad(n, logits.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double top = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - top).exp();
    const double z = e.sum();
    grad.row(i) = e / z;
    loss += std::log(z) + top - logits(i, labels[static_cast<std::size_t>(i)]);
    grad(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  }
  grad /= static_cast<double>(n);
  if (loss_out) *loss_out = loss / static_cast<double>(n);
  return grad;
}

// Propagates the logit gradient back through the layers. Fills param_grads
// when non-null; returns the gradient w.r.t. the batch input when requested.
Eigen::MatrixXd backward(const MlpModel& model, const ForwardCache& cache,
                         Eigen::MatrixXd delta, ParamGrads* param_grads,
                         bool want_input_grad) {
  const std::size_t layers = model.num_layers();
  if (param_grads) {
    param_grads->weights.resize(layers);
    param_grads->biases.resize(layers);
  }
  for (std::size_t l = layers; l-- > 0;) {
    if (param_grads) {
      param_grads->weights[l] = cache.inputs[l].transpose() * delta;
      param_grads->biases[l] = delta.colwise().sum();
    }
    if (l > 0) {
      delta = (delta * model.weights[l].transpose()).cwiseProduct(
          (cache.pre_activations[l - 1].array() > 0.0).cast<double>().matrix());
    } else if (want_input_grad) {
      delta = delta * model.weights[0].transpose();
    }
  }
  return delta;
}

void append_flat(std::string& out, const Eigen::MatrixXd& m) {
  out += '[';
  bool first = true;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!first) out += ',';
      first = false;
      out += fmt_g17(m(i, j));
    }
  }
  out += ']';
}

}  // namespace

MlpModel init_model(const std::vector<int>& layer_dims, std::uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw ConfigError("init_model: need at least input and output dims");
  }
  for (int d : layer_dims) {
    if (d <= 0) throw ConfigError("init_model: layer dims must be positive");
  }
  MlpModel model;
  model.layer_dims = layer_dims;
  std::mt19937_64 rng(derive_seed(seed, 0x1217ull));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_in, fan_out);
    for (int i = 0; i < fan_in; ++i) {
      for (int j = 0; j < fan_out; ++j) {
        w(i, j) = scale * gauss(rng);
      }
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return model;
}

Eigen::MatrixXd forward(const MlpModel& model, const Eigen::MatrixXd& batch,
                        ForwardCache* cache) {
  check_model(model);
  check_batch(model, batch);
  if (cache) {
    cache->inputs.clear();
    cache->pre_activations.clear();
  }
  Eigen::MatrixXd a = batch;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    if (cache) cache->inputs.push_back(a);
    Eigen::MatrixXd z =
        (a * model.weights[l]).rowwise() + model.biases[l].transpose();
    if (cache) cache->pre_activations.push_back(z);
    if (l + 1 < model.num_layers()) {
      a = z.cwiseMax(0.0);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

std::pair<double, ParamGrads> loss_and_param_grads(
    const MlpModel& model, const Eigen::MatrixXd& batch,
    const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != batch.rows()) {
    throw std::invalid_argument("labels/batch size mismatch");
  }
  for (int y : labels) {
    if (y < 0 || y >= model.num_classes()) {
      throw std::invalid_argument("label out of range");
    }
  }
  ForwardCache cache;
  const Eigen::MatrixXd logits = forward(model, batch, &cache);
  double loss = 0.0;
  Eigen::MatrixXd delta = logit_gradient(logits, labels, &loss);
  ParamGrads grads;
  backward(model, cache, std::move(delta), &grads, false);
  return {loss, std::move(grads)};
}

Eigen::VectorXd input_gradient(const MlpModel& model, const Eigen::VectorXd& x,
                               int label) {
  if (label < 0 || label >= model.num_classes()) {
    throw std::invalid_argument("label out of range");
  }
  ForwardCache cache;
  const Eigen::MatrixXd logits = forward(model, x.transpose(), &cache);
  Eigen::MatrixXd delta = logit_gradient(logits, {label}, nullptr);
  Eigen::MatrixXd input_grad =
      backward(model, cache, std::move(delta), nullptr, true);
  return input_grad.row(0).transpose();
}

MlpModel train(MlpModel model, const ImageSet& images, const LabelSet& labels,
               const TrainConfig& config) {
  check_model(model);
  check_batch(model, images.pixels);
  if (images.count() != static_cast<Eigen::Index>(labels.labels.size())) {
    throw std::invalid_argument("images/labels size mismatch");
  }
  if (config.epochs < 0 || config.batch_size <= 0 ||
      !(config.learning_rate > 0.0)) {
    throw ConfigError("train: hyperparameters must be positive");
  }

  const std::size_t layers = model.num_layers();
  std::vector<Eigen::MatrixXd> m_w(layers), v_w(layers);
  std::vector<Eigen::VectorXd> m_b(layers), v_b(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    m_w[l] = Eigen::MatrixXd::Zero(model.weights[l].rows(),
                                   model.weights[l].cols());
    v_w[l] = m_w[l];
    m_b[l] = Eigen::VectorXd::Zero(model.biases[l].size());
    v_b[l] = m_b[l];
  }

  std::mt19937_64 rng(derive_seed(config.seed, 0x7ea12ull));
  std::vector<int> order(static_cast<std::size_t>(images.count()));
  std::iota(order.begin(), order.end(), 0);

  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t count =
          std::min<std::size_t>(config.batch_size, order.size() - start);
      Eigen::MatrixXd batch(count, images.dim());
      std::vector<int> batch_labels(count);
      for (std::size_t i = 0; i < count; ++i) {
        batch.row(static_cast<Eigen::Index>(i)) =
            images.pixels.row(order[start + i]);
        batch_labels[i] = labels.labels[static_cast<std::size_t>(
            order[start + i])];
      }
      auto [loss, grads] = loss_and_param_grads(model, batch, batch_labels);
      (void)loss;
      ++step;
      if (config.optimizer == Optimizer::sgd) {
        for (std::size_t l = 0; l < layers; ++l) {
          model.weights[l] -= config.learning_rate * grads.weights[l];
          model.biases[l] -= config.learning_rate * grads.biases[l];
        }
      } else {
        const double b1 = config.adam_beta1;
        const double b2 = config.adam_beta2;
        const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step));
        const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step));
        for (std::size_t l = 0; l < layers; ++l) {
          m_w[l] = b1 * m_w[l] + (1.0 - b1) * grads.weights[l];
          v_w[l] = b2 * v_w[l] +
                   (1.0 - b2) * grads.weights[l].array().square().matrix();
          m_b[l] = b1 * m_b[l] + (1.0 - b1) * grads.biases[l];
          v_b[l] = b2 * v_b[l] +
                   (1.0 - b2) * grads.biases[l].array().square().matrix();
          model.weights[l].array() -=
              config.learning_rate * (m_w[l].array() / bias1) /
              ((v_w[l].array() / bias2).sqrt() + config.adam_epsilon);
          model.biases[l].array() -=
              config.learning_rate * (m_b[l].array() / bias1) /
              ((v_b[l].array() / bias2).sqrt() + config.adam_epsilon);
        }
      }
    }
  }
  return model;
}

int argmax_lowest(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

std::vector<int> predict(const MlpModel& model, const Eigen::MatrixXd& images) {
  const Eigen::MatrixXd logits = forward(model, images);
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = argmax_lowest(logits.row(i).transpose());
  }
  return out;
}

double accuracy(const MlpModel& model, const Eigen::MatrixXd& images,
                const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != images.rows()) {
    throw std::invalid_argument("labels/images size mismatch");
  }
  if (labels.empty()) return 0.0;
  const std::vector<int> predicted = predict(model, images);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predicted[i] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<ActivationRecord> extract_logits(const MlpModel& model,
                                             const Eigen::MatrixXd& images,
                                             const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != images.rows()) {
    throw std::invalid_argument("labels/images size mismatch");
  }
  const Eigen::MatrixXd logits = forward(model, images);
  std::vector<ActivationRecord> records;
  records.reserve(labels.size());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    ActivationRecord r;
    r.logits.assign(logits.row(i).begin(), logits.row(i).end());
    r.true_label = labels[static_cast<std::size_t>(i)];
    r.predicted_label = argmax_lowest(logits.row(i).transpose());
    r.origin = Origin::original;
    r.attack_id = AttackId::none;
    r.epsilon = 0.0;
    records.push_back(std::move(r));
  }
  return records;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  check_model(model);
  std::string out = "{\"schema\":\"advstat-model v1\",\"layer_dims\":[";
  for (std::size_t i = 0; i < model.layer_dims.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(model.layer_dims[i]);
  }
  out += "],\"weights\":[";
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    if (l) out += ',';
    append_flat(out, model.weights[l]);
  }
  out += "],\"biases\":[";
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    if (l) out += ',';
    append_flat(out, model.biases[l]);
  }
  out += "]}\n";
  std::ofstream file(path);
  if (!file || !(file << out).flush()) {
    throw DataError("cannot write model checkpoint " + path.string());
  }
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) {
    throw DataError("cannot open model checkpoint " + path.string());
  }
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(file);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (obj.value("schema", "") != "advstat-model v1") {
    throw FormatError(path.string() +
                      ": expected schema \"advstat-model v1\"");
  }
  MlpModel model;
  try {
    model.layer_dims = obj.at("layer_dims").get<std::vector<int>>();
    const auto weights = obj.at("weights");
    const auto biases = obj.at("biases");
    if (model.layer_dims.size() < 2 ||
        weights.size() != model.layer_dims.size() - 1 ||
        biases.size() != weights.size()) {
      throw FormatError(path.string() + ": inconsistent layer structure");
    }
    for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
      const int rows = model.layer_dims[l];
      const int cols = model.layer_dims[l + 1];
      const auto flat_w = weights[l].get<std::vector<double>>();
      const auto flat_b = biases[l].get<std::vector<double>>();
      if (flat_w.size() != static_cast<std::size_t>(rows) * cols ||
          flat_b.size() != static_cast<std::size_t>(cols)) {
        throw FormatError(path.string() + ": parameter size mismatch at layer " +
                          std::to_string(l));
      }
      Eigen::MatrixXd w(rows, cols);
      std::size_t k = 0;
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
          w(i, j) = flat_w[k++];
        }
      }
      model.weights.push_back(std::move(w));
      model.biases.push_back(Eigen::Map<const Eigen::VectorXd>(
          flat_b.data(), static_cast<Eigen::Index>(flat_b.size())));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return model;
}

}  // namespace advstat
