#include <cmath>
#include <random>

#include "doctest.h"

#include "advstat/mlp.hpp"
#include "advstat/synth.hpp"
#include "test_util.hpp"

using advstat::MlpModel;
using advstat::TrainConfig;

namespace {

MlpModel random_model(const std::vector<int>& dims, std::mt19937_64& rng) {
  MlpModel model = advstat::init_model(dims, rng());
  // Nonzero biases exercise every gradient path.
  std::normal_distribution<double> gauss(0.0, 0.5);
  for (auto& b : model.biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = gauss(rng);
  }
  return model;
}

double batch_loss(const MlpModel& model, const Eigen::MatrixXd& batch,
                  const std::vector<int>& labels) {
  return advstat::loss_and_param_grads(model, batch, labels).first;
}

// Largest relative disagreement between analytic and central finite
// difference derivatives, probing every parameter of the model.
double max_param_grad_error(MlpModel model, const Eigen::MatrixXd& batch,
                            const std::vector<int>& labels, double step) {
  const auto [loss, grads] = advstat::loss_and_param_grads(model, batch, labels);
  (void)loss;
  double worst = 0.0;
  auto probe = [&](double* value, double analytic) {
    const double saved = *value;
    *value = saved + step;
    const double up = batch_loss(model, batch, labels);
    *value = saved - step;
    const double down = batch_loss(model, batch, labels);
    *value = saved;
    const double fd = (up - down) / (2.0 * step);
    const double scale = std::max({std::fabs(fd), std::fabs(analytic), 1e-6});
    worst = std::max(worst, std::fabs(fd - analytic) / scale);
  };
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < model.weights[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < model.weights[l].cols(); ++j) {
        probe(&model.weights[l](i, j), grads.weights[l](i, j));
      }
    }
    for (Eigen::Index i = 0; i < model.biases[l].size(); ++i) {
      probe(&model.biases[l](i), grads.biases[l](i));
    }
  }
  return worst;
}

double max_input_grad_error(const MlpModel& model, Eigen::VectorXd x, int label,
                            double step) {
  const Eigen::VectorXd analytic = advstat::input_gradient(model, x, label);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x(i);
    x(i) = saved + step;
    const double up = batch_loss(model, x.transpose(), {label});
    x(i) = saved - step;
    const double down = batch_loss(model, x.transpose(), {label});
    x(i) = saved;
    const double fd = (up - down) / (2.0 * step);
    const double scale =
        std::max({std::fabs(fd), std::fabs(analytic(i)), 1e-6});
    worst = std::max(worst, std::fabs(fd - analytic(i)) / scale);
  }
  return worst;
}

}  // namespace

TEST_SUITE_BEGIN("mlp");

TEST_CASE("init is deterministic with zero biases and chained shapes") {
  const std::vector<int> dims = {784, 256, 128, 10};
  const MlpModel a = advstat::init_model(dims, 42);
  const MlpModel b = advstat::init_model(dims, 42);
  REQUIRE(a.num_layers() == 3);
  CHECK(a.weights[0].rows() == 784);
  CHECK(a.weights[0].cols() == 256);
  CHECK(a.weights[1].rows() == 256);
  CHECK(a.weights[1].cols() == 128);
  CHECK(a.weights[2].rows() == 128);
  CHECK(a.weights[2].cols() == 10);
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l].isZero(0.0));
  }
  CHECK_THROWS_AS(advstat::init_model({4, 0, 2}, 1), advstat::ConfigError);
  CHECK_THROWS_AS(advstat::init_model({4}, 1), advstat::ConfigError);
}

TEST_CASE("forward through zero parameters gives zero logits") {
  MlpModel model = advstat::init_model({3, 4, 2}, 7);
  for (auto& w : model.weights) w.setZero();
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd batch = test_util::random_matrix(5, 3, rng);
  CHECK(advstat::forward(model, batch).isZero(0.0));
}

TEST_CASE("a single identity layer reproduces its input") {
  MlpModel model = advstat::init_model({4, 4}, 7);
  model.weights[0] = Eigen::MatrixXd::Identity(4, 4);
  model.biases[0].setZero();
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd batch = test_util::random_matrix(3, 4, rng);
  CHECK(advstat::forward(model, batch) == batch);
}

TEST_CASE("forward matches a straight-line re-evaluation on a 3-4-2 net") {
  std::mt19937_64 rng(3);
  const MlpModel model = random_model({3, 4, 2}, rng);
  const Eigen::VectorXd x = test_util::random_matrix(3, 1, rng);
  const Eigen::MatrixXd logits = advstat::forward(model, x.transpose());

  // Hand evaluation of W2' relu(W1' x + b1) + b2, scalar loops only.
  std::vector<double> hidden(4, 0.0);
  for (int j = 0; j < 4; ++j) {
    double z = model.biases[0](j);
    for (int i = 0; i < 3; ++i) z += model.weights[0](i, j) * x(i);
    hidden[std::size_t(j)] = z > 0.0 ? z : 0.0;
  }
  for (int k = 0; k < 2; ++k) {
    double z = model.biases[1](k);
    for (int j = 0; j < 4; ++j) z += model.weights[1](j, k) * hidden[std::size_t(j)];
    CHECK(logits(0, k) == doctest::Approx(z).epsilon(1e-12));
  }
}

TEST_CASE("permuting batch rows permutes logits rows identically") {
  std::mt19937_64 rng(4);
  const MlpModel model = random_model({5, 6, 3}, rng);
  const Eigen::MatrixXd batch = test_util::random_matrix(7, 5, rng);
  const Eigen::MatrixXd logits = advstat::forward(model, batch);
  std::vector<int> perm = {3, 0, 6, 1, 5, 2, 4};
  Eigen::MatrixXd shuffled(batch.rows(), batch.cols());
  for (int i = 0; i < 7; ++i) shuffled.row(i) = batch.row(perm[std::size_t(i)]);
  const Eigen::MatrixXd shuffled_logits = advstat::forward(model, shuffled);
  for (int i = 0; i < 7; ++i) {
    CHECK(shuffled_logits.row(i) == logits.row(perm[std::size_t(i)]));
  }
}

TEST_CASE("uniform logits give loss ln(C)") {
  MlpModel model = advstat::init_model({3, 4}, 7);
  for (auto& w : model.weights) w.setZero();
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd batch = test_util::random_matrix(6, 3, rng);
  const double loss = batch_loss(model, batch, {0, 1, 2, 3, 0, 1});
  CHECK(loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("parameter gradients agree with central finite differences") {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const MlpModel model = random_model({3, 4, 2}, rng);
    const Eigen::MatrixXd batch = test_util::random_matrix(2, 3, rng);
    worst = std::max(worst,
                     max_param_grad_error(model, batch, {0, 1}, 1e-5));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("duplicating every sample leaves loss and gradients unchanged") {
  std::mt19937_64 rng(7);
  const MlpModel model = random_model({3, 4, 2}, rng);
  const Eigen::MatrixXd batch = test_util::random_matrix(3, 3, rng);
  Eigen::MatrixXd doubled(6, 3);
  doubled << batch, batch;
  const auto [loss1, grads1] =
      advstat::loss_and_param_grads(model, batch, {0, 1, 0});
  const auto [loss2, grads2] =
      advstat::loss_and_param_grads(model, doubled, {0, 1, 0, 0, 1, 0});
  CHECK(loss1 == doctest::Approx(loss2).epsilon(1e-12));
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    CHECK((grads1.weights[l] - grads2.weights[l]).lpNorm<Eigen::Infinity>() <
          1e-12);
    CHECK((grads1.biases[l] - grads2.biases[l]).lpNorm<Eigen::Infinity>() <
          1e-12);
  }
}

TEST_CASE("input gradients agree with central finite differences") {
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const MlpModel model = random_model({3, 4, 2}, rng);
    const Eigen::VectorXd x = test_util::random_matrix(3, 1, rng);
    worst = std::max(worst, max_input_grad_error(model, x, t % 2, 1e-5));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("single-layer input gradient matches the closed form") {
  std::mt19937_64 rng(9);
  MlpModel model = advstat::init_model({3, 4}, rng());
  std::normal_distribution<double> gauss(0.0, 0.5);
  for (Eigen::Index i = 0; i < 4; ++i) model.biases[0](i) = gauss(rng);
  const Eigen::VectorXd x = test_util::random_matrix(3, 1, rng);
  const int label = 2;

  const Eigen::VectorXd logits =
      advstat::forward(model, x.transpose()).row(0).transpose();
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  p /= p.sum();
  Eigen::VectorXd one_hot = Eigen::VectorXd::Zero(4);
  one_hot(label) = 1.0;
  const Eigen::VectorXd expected = model.weights[0] * (p - one_hot);

  const Eigen::VectorXd grad = advstat::input_gradient(model, x, label);
  CHECK((grad - expected).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("a saturated correct prediction has a vanishing input gradient") {
  MlpModel model = advstat::init_model({2, 2}, 1);
  model.weights[0] << 40.0, -40.0, 0.0, 0.0;
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;  // logits (40, -40): class 0 with overwhelming confidence
  const Eigen::VectorXd grad = advstat::input_gradient(model, x, 0);
  CHECK(grad.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("training separable blobs reaches 99% accuracy within 20 epochs") {
  advstat::SynthBlobConfig cfg;
  cfg.num_classes = 2;
  cfg.dim = 2;
  cfg.class_means = {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(6.0, 0.0)};
  cfg.sigma = 1.0;
  cfg.samples_per_class = 200;
  cfg.seed = 99;
  const auto [features, labels] = advstat::synth_blobs(cfg);

  TrainConfig train_cfg;
  train_cfg.epochs = 20;
  train_cfg.batch_size = 32;
  train_cfg.seed = 5;
  MlpModel model = advstat::init_model({2, 8, 2}, 5);
  model = advstat::train(std::move(model), features, labels, train_cfg);
  CHECK(advstat::accuracy(model, features.pixels, labels.labels) >= 0.99);
}

TEST_CASE("zero epochs leave the model bitwise unchanged") {
  std::mt19937_64 rng(10);
  const MlpModel before = random_model({4, 5, 3}, rng);
  advstat::SynthBlobConfig cfg;
  cfg.num_classes = 3;
  cfg.dim = 4;
  cfg.class_means = {Eigen::Vector4d(0, 0, 0, 0), Eigen::Vector4d(5, 0, 0, 0),
                     Eigen::Vector4d(0, 5, 0, 0)};
  cfg.samples_per_class = 10;
  const auto [features, labels] = advstat::synth_blobs(cfg);
  TrainConfig train_cfg;
  train_cfg.epochs = 0;
  const MlpModel after = advstat::train(before, features, labels, train_cfg);
  for (std::size_t l = 0; l < before.num_layers(); ++l) {
    CHECK(before.weights[l] == after.weights[l]);
    CHECK(before.biases[l] == after.biases[l]);
  }
}

TEST_CASE("training is bitwise reproducible for a fixed seed") {
  advstat::SynthBlobConfig cfg;
  cfg.num_classes = 2;
  cfg.dim = 3;
  cfg.class_means = {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(4, 0, 0)};
  cfg.samples_per_class = 50;
  cfg.seed = 13;
  const auto [features, labels] = advstat::synth_blobs(cfg);
  TrainConfig train_cfg;
  train_cfg.epochs = 5;
  train_cfg.batch_size = 16;
  train_cfg.seed = 77;
  const MlpModel a = advstat::train(advstat::init_model({3, 6, 2}, 1), features,
                                    labels, train_cfg);
  const MlpModel b = advstat::train(advstat::init_model({3, 6, 2}, 1), features,
                                    labels, train_cfg);
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l] == b.biases[l]);
  }
}

TEST_CASE("predict breaks ties toward the lowest class index") {
  Eigen::VectorXd v(3);
  v << 0.1, 0.9, 0.3;
  CHECK(advstat::argmax_lowest(v) == 1);
  v << 0.5, 0.5, 0.5;
  CHECK(advstat::argmax_lowest(v) == 0);

  MlpModel model = advstat::init_model({2, 3}, 1);
  for (auto& w : model.weights) w.setZero();
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd batch = test_util::random_matrix(4, 2, rng);
  const std::vector<int> predicted = advstat::predict(model, batch);
  for (int p : predicted) CHECK(p == 0);
  CHECK(advstat::accuracy(model, batch, {0, 0, 0, 0}) == 1.0);
}

TEST_CASE("extract_logits mirrors forward and accuracy") {
  std::mt19937_64 rng(12);
  const MlpModel model = random_model({3, 5, 4}, rng);
  const Eigen::MatrixXd batch = test_util::random_matrix(20, 3, rng);
  std::vector<int> labels;
  std::uniform_int_distribution<int> label(0, 3);
  for (int i = 0; i < 20; ++i) labels.push_back(label(rng));

  const auto records = advstat::extract_logits(model, batch, labels);
  REQUIRE(records.size() == 20);
  const Eigen::MatrixXd logits = advstat::forward(model, batch);
  std::size_t correct = 0;
  for (int i = 0; i < 20; ++i) {
    const auto& r = records[std::size_t(i)];
    CHECK(r.origin == advstat::Origin::original);
    CHECK(r.epsilon == 0.0);
    for (int j = 0; j < 4; ++j) CHECK(r.logits[std::size_t(j)] == logits(i, j));
    if (r.predicted_label == r.true_label) ++correct;
  }
  CHECK(double(correct) / 20.0 ==
        advstat::accuracy(model, batch, labels));
}

TEST_CASE("checkpoints round-trip exactly") {
  test_util::TempDir dir("mlp");
  std::mt19937_64 rng(13);
  const MlpModel model = random_model({6, 4, 3}, rng);
  const auto path = dir.path() / "model.json";
  advstat::save_model(model, path);
  const MlpModel back = advstat::load_model(path);
  CHECK(back.layer_dims == model.layer_dims);
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    CHECK(back.weights[l] == model.weights[l]);
    CHECK(back.biases[l] == model.biases[l]);
  }
  CHECK_THROWS_AS(advstat::load_model(dir.path() / "missing.json"),
                  advstat::DataError);
}

TEST_SUITE_END();
