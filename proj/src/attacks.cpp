#include "advstat/attacks.hpp"

#include <iostream>
#include <random>

namespace advstat {

namespace {

void check_attack_config(const AttackConfig& config) {
  if (config.epsilon < 0.0) {
    throw ConfigError("attack epsilon must be >= 0");
  }
  if (!(config.clip_min < config.clip_max)) {
    throw ConfigError("attack domain requires clip_min < clip_max");
  }
  if (config.attack_id == AttackId::pgd && config.pgd_steps < 1) {
    throw ConfigError("pgd needs at least one step");
  }
  if (config.attack_id == AttackId::none) {
    throw ConfigError("attack_id none cannot generate adversaries");
  }
}

inline double sign_or_zero(double g) {
  return static_cast<double>(g > 0.0) - static_cast<double>(g < 0.0);
}

Eigen::VectorXd ascend_and_clip(const MlpModel& model,
                                const Eigen::VectorXd& x, int label,
                                double step, double lo, double hi) {
  const Eigen::VectorXd grad = input_gradient(model, x, label);
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x(i) + step * sign_or_zero(grad(i));
    out(i) = std::min(hi, std::max(lo, v));
  }
  return out;
}

}  // namespace

double resolved_pgd_step(const AttackConfig& config) {
  if (config.pgd_step_size > 0.0) return config.pgd_step_size;
  return 2.5 * config.epsilon / static_cast<double>(config.pgd_steps);
}

Eigen::VectorXd fgsm(const MlpModel& model, const Eigen::VectorXd& x,
                     int true_label, const AttackConfig& config) {
  check_attack_config(config);
  return ascend_and_clip(model, x, true_label, config.epsilon,
                         config.clip_min, config.clip_max);
}

Eigen::VectorXd pgd(const MlpModel& model, const Eigen::VectorXd& x,
                    int true_label, const AttackConfig& config,
                    std::uint64_t sample_index) {
  check_attack_config(config);
  const double step = resolved_pgd_step(config);
  Eigen::VectorXd current = x;
  if (config.random_start && config.epsilon > 0.0) {
    std::mt19937_64 rng(derive_seed(config.seed, 0xa77ac4ull, sample_index));
    std::uniform_real_distribution<double> jitter(-config.epsilon,
                                                  config.epsilon);
    for (Eigen::Index i = 0; i < current.size(); ++i) {
      const double v = current(i) + jitter(rng);
      current(i) = std::min(config.clip_max, std::max(config.clip_min, v));
    }
  }
  for (int s = 0; s < config.pgd_steps; ++s) {
    current = ascend_and_clip(model, current, true_label, step,
                              config.clip_min, config.clip_max);
    // Project back onto the epsilon ball around the original input.
    for (Eigen::Index i = 0; i < current.size(); ++i) {
      const double lo = x(i) - config.epsilon;
      const double hi = x(i) + config.epsilon;
      current(i) = std::min(hi, std::max(lo, current(i)));
    }
  }
  return current;
}

std::vector<ActivationRecord> generate_adversarial_records(
    const MlpModel& model, const ImageSet& images, const LabelSet& labels,
    const AttackConfig& config) {
  check_attack_config(config);
  if (images.count() != static_cast<Eigen::Index>(labels.labels.size())) {
    throw std::invalid_argument("images/labels size mismatch");
  }
  const std::vector<int> predicted = predict(model, images.pixels);
  std::vector<ActivationRecord> records;
  std::size_t attacked = 0;
  for (Eigen::Index i = 0; i < images.count(); ++i) {
    const int label = labels.labels[static_cast<std::size_t>(i)];
    if (predicted[static_cast<std::size_t>(i)] != label) continue;
    ++attacked;
    const Eigen::VectorXd x = images.pixels.row(i).transpose();
    const Eigen::VectorXd adv =
        config.attack_id == AttackId::fgsm
            ? fgsm(model, x, label, config)
            : pgd(model, x, label, config, static_cast<std::uint64_t>(i));
    const Eigen::MatrixXd logits = forward(model, adv.transpose());
    const int adv_label = argmax_lowest(logits.row(0).transpose());
    if (adv_label == label) continue;
    ActivationRecord r;
    r.logits.assign(logits.row(0).begin(), logits.row(0).end());
    r.true_label = label;
    r.predicted_label = adv_label;
    r.origin = Origin::adversarial;
    r.attack_id = config.attack_id;
    r.epsilon = config.epsilon;
    records.push_back(std::move(r));
  }
  if (records.empty()) {
    std::cerr << "warning: " << to_string(config.attack_id)
              << " eps=" << config.epsilon << " produced no successful "
              << "adversaries (" << attacked << " inputs attacked)\n";
  }
  return records;
}

}  // namespace advstat
