#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "advstat/mlp.hpp"
#include "advstat/records.hpp"

namespace advstat {

struct AttackConfig {
  AttackId attack_id = AttackId::fgsm;
  double epsilon = 0.1;        // L-inf budget
  int pgd_steps = 40;          // pgd only
  double pgd_step_size = 0.0;  // pgd only; <= 0 resolves to 2.5*epsilon/steps
  bool random_start = true;    // pgd only
  double clip_min = 0.0;       // input domain bounds
  double clip_max = 1.0;
  std::uint64_t seed = 0;
};

double resolved_pgd_step(const AttackConfig& config);

// x' = clip(x + epsilon * sign(grad_x loss), clip_min, clip_max), sign(0) = 0.
Eigen::VectorXd fgsm(const MlpModel& model, const Eigen::VectorXd& x,
                     int true_label, const AttackConfig& config);

// Iterated FGSM projected onto the L-inf ball around the starting point,
// with an optional uniform random start. The per-sample RNG stream is
// derived from (config.seed, sample_index), so parallel and serial
// generation agree. With one step, step size epsilon and no random start
// this degenerates to fgsm exactly.
Eigen::VectorXd pgd(const MlpModel& model, const Eigen::VectorXd& x,
                    int true_label, const AttackConfig& config,
                    std::uint64_t sample_index = 0);

// The attack-set protocol: keep only correctly classified inputs, attack
// each, keep only attacks that change the predicted label, and emit one
// adversarial-origin record per surviving attack. An empty surviving set is
// a warning, not an error.
std::vector<ActivationRecord> generate_adversarial_records(
    const MlpModel& model, const ImageSet& images, const LabelSet& labels,
    const AttackConfig& config);

}  // namespace advstat
