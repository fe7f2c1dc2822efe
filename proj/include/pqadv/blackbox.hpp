#pragma once

#include <vector>

#include "pqadv/attacks.hpp"
#include "pqadv/nnet.hpp"

namespace pqadv {

enum class BoxType {
  TypeI = 1,   // same architecture, unknown parameters
  TypeII = 2,  // different architecture (one conv block more or fewer)
};

struct SubstituteSpec {
  BoxType box_type = BoxType::TypeI;
  double data_ratio = 0.05;  // fraction of the training split the attacker holds
  uint64_t seed = 0;
};

/// The training-split subset an attacker with this ratio/seed holds; also
/// exactly what train_substitute trains on. Throws InsufficientData when the
/// subset is too small or misses a class.
std::vector<SignalVector> attacker_subset(const Dataset& data, double ratio, uint64_t seed,
                                          int n_classes = kNumClasses);

/// Train a substitute on attacker_subset(data, spec.data_ratio, spec.seed).
/// TypeII picks the +/- one-conv-block variant of the target architecture by
/// seed parity.
NetworkModel train_substitute(const SubstituteSpec& spec, const Dataset& data,
                              const NetworkModel& target,
                              const AdamConfig& adam = AdamConfig{});

struct TransferParams {
  AttackKind attack_kind = AttackKind::Ssa;
  SsaConfig ssa;
  // SSA: evaluate transfer on this many test signals (seeded subset; 0 = all)
  int ssa_eval_count = 0;
  // SAA: universal perturbation built from the attacker's own data subset
  SaaConfig saa;
  int saa_train_count = 850;
};

struct TransferReport {
  SubstituteSpec spec;
  AttackKind attack_kind = AttackKind::Ssa;
  double substitute_test_acc = 0.0;
  /// Fraction of evaluated signals whose target prediction changes. For SSA
  /// the denominator counts only signals the substitute attack itself fooled;
  /// transfer_rate_over_all keeps the all-signals denominator for reference.
  double transfer_rate = 0.0;
  double transfer_rate_over_all = 0.0;
  int substitute_successes = 0;
  int evaluated = 0;
  double saa_training_fool_rate = 0.0;  // SAA only
};

/// Craft adversarial signals against `substitute`, measure how often they
/// change `target`'s predictions on the test set.
TransferReport transfer_attack(const NetworkModel& substitute, const NetworkModel& target,
                               const std::vector<SignalVector>& test_set,
                               const TransferParams& params,
                               const std::vector<SignalVector>& attacker_train,
                               uint64_t seed);

}  // namespace pqadv
