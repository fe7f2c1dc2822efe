#include "pqadv/blackbox.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "pqadv/error.hpp"

namespace pqadv {

std::vector<SignalVector> attacker_subset(const Dataset& data, double ratio, uint64_t seed,
                                          int n_classes) {
  const int n_train = static_cast<int>(data.train.size());
  const int subset_size = static_cast<int>(ratio * n_train);
  require(subset_size >= n_classes, Errc::InsufficientData,
          "attacker subset holds only " + std::to_string(subset_size) + " signals");

  std::vector<int> idx(n_train);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = Rng::stream(seed, "subset");
  rng.shuffle(idx);

  std::vector<SignalVector> subset;
  std::set<int> classes;
  for (int i = 0; i < subset_size; ++i) {
    const SignalVector& s = data.train[idx[i]];
    subset.push_back(s);
    classes.insert(s.label);
  }
  require(static_cast<int>(classes.size()) == n_classes, Errc::InsufficientData,
          "attacker subset misses " +
              std::to_string(n_classes - static_cast<int>(classes.size())) + " class(es)");
  return subset;
}

NetworkModel train_substitute(const SubstituteSpec& spec, const Dataset& data,
                              const NetworkModel& target, const AdamConfig& adam) {
  Dataset sub;
  sub.seed = spec.seed;
  sub.train = attacker_subset(data, spec.data_ratio, spec.seed, target.n_classes);
  sub.test = data.test;  // evaluation only; not seen by the optimizer

  std::vector<LayerSpec> specs;
  std::string arch_id;
  if (spec.box_type == BoxType::TypeI) {
    for (const auto& l : target.layers) specs.push_back(l.spec);
    arch_id = target.arch_id;
  } else if (spec.seed % 2 == 0) {
    specs = architecture_minus_block();
    arch_id = "target-minus-one-block";
  } else {
    specs = architecture_plus_block();
    arch_id = "target-plus-one-block";
  }

  NetworkModel sub_model =
      build_model(specs, target.input_len, target.n_classes, spec.seed, arch_id);
  train(sub_model, sub, adam, spec.seed);
  return sub_model;
}

TransferReport transfer_attack(const NetworkModel& substitute, const NetworkModel& target,
                               const std::vector<SignalVector>& test_set,
                               const TransferParams& params,
                               const std::vector<SignalVector>& attacker_train,
                               uint64_t seed) {
  require(!test_set.empty(), Errc::EmptySet, "empty test set");
  require(substitute.input_len == target.input_len, Errc::ShapeMismatch,
          "substitute/target input size mismatch");

  const NetClassifier f_sub(substitute);
  TransferReport rep;
  rep.attack_kind = params.attack_kind;

  {
    std::vector<std::vector<double>> xs;
    std::vector<int> labels;
    for (const auto& s : test_set) {
      xs.push_back(s.values);
      labels.push_back(s.label);
    }
    auto preds = predict_batch(substitute, xs);
    int64_t hit = 0;
    for (size_t i = 0; i < preds.size(); ++i)
      if (preds[i] == labels[i]) ++hit;
    rep.substitute_test_acc = static_cast<double>(hit) / static_cast<double>(preds.size());
  }

  if (params.attack_kind == AttackKind::Saa) {
    require(!attacker_train.empty(), Errc::EmptySet, "SAA transfer needs attacker data");
    std::vector<const std::vector<double>*> X;
    const int n_saa = std::min<int>(params.saa_train_count,
                                    static_cast<int>(attacker_train.size()));
    for (int i = 0; i < n_saa; ++i) X.push_back(&attacker_train[i].values);
    SaaConfig saa = params.saa;
    saa.seed = seed;
    const UniversalPerturbation up = saa_universal(f_sub, X, saa);
    rep.saa_training_fool_rate = up.training_fool_rate;

    const int n = static_cast<int>(test_set.size());
    rep.evaluated = n;
    std::vector<int> flips(n, 0);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      const int clean = predict(target, test_set[i].values);
      std::vector<double> xv = test_set[i].values;
      for (size_t j = 0; j < xv.size(); ++j) xv[j] += up.v[j];
      flips[i] = predict(target, xv) != clean ? 1 : 0;
    }
    int64_t fooled = 0;
    for (int v : flips) fooled += v;
    rep.transfer_rate = static_cast<double>(fooled) / n;
    rep.transfer_rate_over_all = rep.transfer_rate;
    rep.substitute_successes = n;
    return rep;
  }

  // SSA: per-signal attacks crafted on the substitute, replayed on the target
  std::vector<int> eval_idx(test_set.size());
  std::iota(eval_idx.begin(), eval_idx.end(), 0);
  if (params.ssa_eval_count > 0 &&
      params.ssa_eval_count < static_cast<int>(test_set.size())) {
    Rng rng = Rng::stream(seed, "subset").split(1);
    rng.shuffle(eval_idx);
    eval_idx.resize(params.ssa_eval_count);
  }
  const int n = static_cast<int>(eval_idx.size());
  rep.evaluated = n;

  std::vector<int> sub_success(n, 0), target_flip(n, 0);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const SignalVector& s = test_set[eval_idx[i]];
    const SsaResult r = ssa_perturb(f_sub, s.values, params.ssa);
    if (r.status != SsaStatus::Success) continue;
    sub_success[i] = 1;
    const int clean = predict(target, s.values);
    target_flip[i] = predict(target, r.x_adv) != clean ? 1 : 0;
  }
  int64_t succ = 0, fooled = 0;
  for (int i = 0; i < n; ++i) {
    succ += sub_success[i];
    fooled += target_flip[i];
  }
  rep.substitute_successes = static_cast<int>(succ);
  rep.transfer_rate = succ > 0 ? static_cast<double>(fooled) / static_cast<double>(succ) : 0.0;
  rep.transfer_rate_over_all = static_cast<double>(fooled) / static_cast<double>(n);
  return rep;
}

}  // namespace pqadv
