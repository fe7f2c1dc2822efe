#pragma once

#include <vector>

#include "pqadv/attacks.hpp"
#include "pqadv/nnet.hpp"

namespace pqadv {

struct AdvTrainConfig {
  int pretrain_epochs = 15;  // informational: the input model is already trained
  int adv_epochs = 10;
  double mix_ratio = 0.5;  // fraction of adversarial samples per batch
  bool regenerate = false; // false: one fixed adversarial set for all epochs
  // implementation knobs
  int rho_eval_count = 256;  // SSA sample for the per-epoch robustness estimate
  SsaConfig ssa;
  double fgsm_eps = 0.5;  // when hardening against FGSM instead of SSA
};

struct AdvTraceRow {
  int epoch = 0;  // 0 = pre-defense state
  double clean_train_acc = 0.0;
  double clean_test_acc = 0.0;
  double adv_train_acc = 0.0;
  double adv_test_acc = 0.0;
  double rho_adv = 0.0;
};

struct AdvTrainResult {
  NetworkModel hardened;
  std::vector<AdvTraceRow> trace;          // epoch 0 .. adv_epochs
  std::vector<NetworkModel> checkpoints;   // aligned with trace
};

/// Retrain an already-trained model on batches mixing clean and adversarial
/// signals (adversarial set generated once from the training split, keeping
/// the clean ground-truth labels). The trace records accuracies on the fixed
/// clean/adversarial train and test sets plus the SSA robustness estimate
/// after every epoch.
AdvTrainResult adversarial_train(const NetworkModel& pretrained, const Dataset& data,
                                 const AdvTrainConfig& cfg, uint64_t seed,
                                 const AdamConfig& adam = AdamConfig{},
                                 AttackKind attack = AttackKind::Ssa);

/// Average robustness (mean ||r||/||x|| over successful SSA attacks) for each
/// checkpoint; the per-checkpoint success count is reported alongside.
struct RobustnessPoint {
  double rho_adv = 0.0;
  int successes = 0;
  int evaluated = 0;
};
std::vector<RobustnessPoint> robustness_curve(const std::vector<NetworkModel>& checkpoints,
                                              const std::vector<SignalVector>& eval_set,
                                              const SsaConfig& cfg = SsaConfig{});

/// One robustness estimate for a single model.
RobustnessPoint estimate_robustness(const NetworkModel& m,
                                    const std::vector<SignalVector>& eval_set,
                                    const SsaConfig& cfg = SsaConfig{});

}  // namespace pqadv
