#include "pqadv/defense.hpp"

#include <algorithm>
#include <numeric>

#include "pqadv/error.hpp"

namespace pqadv {

namespace {

double accuracy_on(const NetworkModel& m, const std::vector<std::vector<double>>& xs,
                   const std::vector<int>& labels) {
  auto preds = predict_batch(m, xs);
  int64_t hit = 0;
  for (size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == labels[i]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

// Adversarial copies of `set` against `m`; labels keep the clean ground truth
// (the perturbation is imperceptible by construction). SSA failures fall back
// to the attempted signal so the set stays index-aligned.
std::vector<std::vector<double>> make_adversarial_set(const NetworkModel& m,
                                                      const std::vector<SignalVector>& set,
                                                      AttackKind attack,
                                                      const AdvTrainConfig& cfg) {
  const NetClassifier f(m);
  std::vector<std::vector<double>> out(set.size());
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < static_cast<int64_t>(set.size()); ++i) {
    if (attack == AttackKind::Fgsm) {
      out[i] = fgsm(f, set[i].values, set[i].label, cfg.fgsm_eps).x_adv;
    } else {
      out[i] = ssa_perturb(f, set[i].values, cfg.ssa).x_adv;
    }
  }
  return out;
}

}  // namespace

RobustnessPoint estimate_robustness(const NetworkModel& m,
                                    const std::vector<SignalVector>& eval_set,
                                    const SsaConfig& cfg) {
  require(!eval_set.empty(), Errc::EmptySet, "empty robustness evaluation set");
  const NetClassifier f(m);
  const int n = static_cast<int>(eval_set.size());
  std::vector<double> ratio(n, -1.0);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const SsaResult r = ssa_perturb(f, eval_set[i].values, cfg);
    if (r.status == SsaStatus::Success)
      ratio[i] = r.pert.l2_norm / l2_norm(eval_set[i].values);
  }
  RobustnessPoint pt;
  pt.evaluated = n;
  double sum = 0.0;
  for (double x : ratio)
    if (x >= 0.0) {
      sum += x;
      pt.successes++;
    }
  pt.rho_adv = pt.successes > 0 ? sum / pt.successes : 0.0;
  return pt;
}

std::vector<RobustnessPoint> robustness_curve(const std::vector<NetworkModel>& checkpoints,
                                              const std::vector<SignalVector>& eval_set,
                                              const SsaConfig& cfg) {
  std::vector<RobustnessPoint> out;
  out.reserve(checkpoints.size());
  for (const NetworkModel& m : checkpoints) out.push_back(estimate_robustness(m, eval_set, cfg));
  return out;
}

AdvTrainResult adversarial_train(const NetworkModel& pretrained, const Dataset& data,
                                 const AdvTrainConfig& cfg, uint64_t seed,
                                 const AdamConfig& adam_cfg, AttackKind attack) {
  require(cfg.mix_ratio >= 0.0 && cfg.mix_ratio <= 1.0, Errc::ParamOutOfRange,
          "mix_ratio in [0,1]");
  require(!data.train.empty() && !data.test.empty(), Errc::EmptySet, "empty dataset");

  std::vector<std::vector<double>> clean_train, clean_test;
  std::vector<int> train_labels, test_labels;
  for (const auto& s : data.train) {
    clean_train.push_back(s.values);
    train_labels.push_back(s.label);
  }
  for (const auto& s : data.test) {
    clean_test.push_back(s.values);
    test_labels.push_back(s.label);
  }

  // fixed adversarial sets built against the pre-defense model; test side is
  // only ever used for evaluation
  std::vector<std::vector<double>> adv_train =
      make_adversarial_set(pretrained, data.train, attack, cfg);
  const std::vector<std::vector<double>> adv_test =
      make_adversarial_set(pretrained, data.test, attack, cfg);

  const Rng rho_rng = Rng::stream(seed, "attack");
  std::vector<SignalVector> rho_set;
  {
    const int n_eval = std::min<int>(cfg.rho_eval_count, static_cast<int>(data.test.size()));
    std::vector<int> idx(data.test.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng pick = rho_rng.split(0);
    pick.shuffle(idx);
    for (int i = 0; i < n_eval; ++i) rho_set.push_back(data.test[idx[i]]);
  }

  AdvTrainResult res;
  res.hardened = pretrained;

  auto record = [&](int epoch) {
    AdvTraceRow row;
    row.epoch = epoch;
    row.clean_train_acc = accuracy_on(res.hardened, clean_train, train_labels);
    row.clean_test_acc = accuracy_on(res.hardened, clean_test, test_labels);
    row.adv_train_acc = accuracy_on(res.hardened, adv_train, train_labels);
    row.adv_test_acc = accuracy_on(res.hardened, adv_test, test_labels);
    row.rho_adv = estimate_robustness(res.hardened, rho_set, cfg.ssa).rho_adv;
    res.trace.push_back(row);
    res.checkpoints.push_back(res.hardened);
  };

  record(0);

  AdamState adam = make_adam_state(res.hardened);
  const Rng shuffle_base = Rng::stream(seed, "shuffle");
  const int n = static_cast<int>(data.train.size());
  const int batch = adam_cfg.batch_size;
  const int n_adv_per_batch = static_cast<int>(std::lround(cfg.mix_ratio * batch));

  std::vector<int> clean_order(n), adv_order(n);
  for (int epoch = 1; epoch <= cfg.adv_epochs; ++epoch) {
    if (cfg.regenerate && epoch > 1)
      adv_train = make_adversarial_set(res.hardened, data.train, attack, cfg);

    std::iota(clean_order.begin(), clean_order.end(), 0);
    std::iota(adv_order.begin(), adv_order.end(), 0);
    Rng rng = shuffle_base.split(static_cast<uint64_t>(epoch));
    rng.shuffle(clean_order);
    rng.shuffle(adv_order);

    // one pass over the clean split; each batch swaps in adversarial samples
    // at the configured ratio, cycling through the shuffled adversarial set
    size_t adv_cursor = 0;
    for (int start = 0; start < n; start += batch) {
      const int end = std::min(n, start + batch);
      const int bsz = end - start;
      const int n_adv = std::min(bsz, n_adv_per_batch);
      std::vector<const std::vector<double>*> xs;
      std::vector<int> labels;
      xs.reserve(bsz);
      for (int i = start; i < end - n_adv; ++i) {
        xs.push_back(&clean_train[clean_order[i]]);
        labels.push_back(train_labels[clean_order[i]]);
      }
      for (int j = 0; j < n_adv; ++j) {
        const int idx = adv_order[adv_cursor % adv_order.size()];
        ++adv_cursor;
        xs.push_back(&adv_train[idx]);
        labels.push_back(train_labels[idx]);
      }
      LossGrad lg = loss_and_gradients(res.hardened, pack_batch(xs), labels);
      adam_step(res.hardened, lg.grads, adam, adam_cfg);
    }
    record(epoch);
  }
  return res;
}

}  // namespace pqadv
