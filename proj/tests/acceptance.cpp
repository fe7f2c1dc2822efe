// Acceptance suite: runs every calibrated desk-scale criterion end to end and
// prints one PASS/FAIL line per criterion. The whole pipeline body (dataset
// through projections) is executed twice with identical seeds; the final
// criterion demands bit-identical metrics across the two runs.
//
// Runtime is dominated by the adversarial-training and black-box phases;
// expect on the order of an hour per pipeline pass on a single core.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pqadv/attacks.hpp"
#include "pqadv/blackbox.hpp"
#include "pqadv/dataset_io.hpp"
#include "pqadv/defense.hpp"
#include "pqadv/error.hpp"
#include "pqadv/metrics.hpp"
#include "pqadv/model_io.hpp"
#include "pqadv/nnet.hpp"
#include "pqadv/pqgen.hpp"
#include "pqadv/tsne.hpp"
#include "support/degree_graphs.hpp"
#include "support/oracles.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace fs = std::filesystem;
using namespace pqadv;
using namespace pqadv::testing;

namespace {

using Clock = std::chrono::steady_clock;

constexpr uint64_t kSeed = 42;

// desk scale
constexpr int kPerClass = 500;
constexpr int kTrainEpochs = 15;
constexpr int kAttackCount = 1000;        // criterion 4
constexpr int kSaaSubsets[3] = {425, 850, 1700};  // criterion 6
constexpr int kSaaMaxEpochs = 10;
constexpr double kXi = 1.0;
constexpr double kDelta = 0.26;
constexpr int kBlackboxReps = 3;          // criterion 7
constexpr int kBlackboxRatios[2] = {20, 5};
constexpr int kSsaTransferEval = 500;     // test signals per SSA transfer run
constexpr int kSaaTransferTrain = 425;    // attacker signals behind each SAA build
constexpr int kSaaTransferEpochs = 4;
constexpr int kAdvEpochs = 10;            // criterion 8
constexpr int kRhoEvalCount = 256;
constexpr int kProjectN = 1000;           // criterion 10

struct Criterion {
  std::string id;
  std::string name;
  bool pass = false;
  std::string detail;
  double secs = 0.0;
};

std::vector<Criterion> g_results;

void report(const std::string& id, const std::string& name, bool pass,
            const std::string& detail, double secs) {
  g_results.push_back({id, name, pass, detail, secs});
  std::printf("[%-3s] %s  %s (%.1f s) — %s\n", id.c_str(), pass ? "PASS" : "FAIL",
              name.c_str(), secs, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return std::string(buf);
}

class Timer {
public:
  Timer() : t0_(Clock::now()) {}
  double secs() const { return std::chrono::duration<double>(Clock::now() - t0_).count(); }

private:
  Clock::time_point t0_;
};

using MetricsMap = std::map<std::string, double>;

std::vector<int> seeded_subset(int n, int count, uint64_t seed, uint64_t stream_index) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (count > 0 && count < n) {
    Rng rng = Rng::stream(seed, "subset").split(stream_index);
    rng.shuffle(idx);
    idx.resize(count);
  }
  return idx;
}

// ---------------------------------------------------------------------------
// criteria 1, 2, 5, 9: self-contained, run once

void criterion1_entropy_golden() {
  Timer t;
  bool pass = true;
  std::string detail;
  for (const DegreeCase& c : published_degree_cases()) {
    const ConfusionGraph g = realize_degree_graph(c.in_degree, c.out_degree);
    const double out_h = graph_entropy(g, Direction::Out, false);
    const double in_h = graph_entropy(g, Direction::In, false);
    if (std::abs(out_h - c.expect_unweighted_out) > 0.01 ||
        std::abs(in_h - c.expect_unweighted_in) > 0.01)
      pass = false;
    detail += fmt("%s out=%.3f/%.2f in=%.3f/%.2f  ", c.name, out_h, c.expect_unweighted_out,
                  in_h, c.expect_unweighted_in);
  }
  report("C1", "entropy golden test", pass, detail, t.secs());
}

void criterion2_signal_norm() {
  Timer t;
  const TimeGrid grid;
  const Rng base = Rng::stream(kSeed, "gen");
  const int n = 10000;
  std::vector<double> norms(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const int class_id = i % kNumClasses + 1;
    Rng rng = base.split(static_cast<uint64_t>(i) + (1ull << 32));
    const DisturbanceParams p = sample_params(class_id, rng, grid);
    SignalVector s = synthesize_signal(class_id, p, grid);
    s = add_noise(s, 30.0, rng);
    norms[i] = l2_norm(s.values);
  }
  double mean = 0.0;
  for (double x : norms) mean += x;
  mean /= n;
  const bool pass = mean >= 17.0 && mean <= 19.0;
  report("C2", "mean signal norm over 10k signals", pass,
         fmt("mean_l2=%.4f in [17,19]", mean), t.secs());
}

void criterion5_ssa_affine_oracle() {
  Timer t;
  Rng rng(kSeed + 5);
  int checked = 0, within = 0;
  double worst_ratio = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int dim = rng.range_int(2, 10);
    const int classes = rng.range_int(3, 5);
    std::vector<std::vector<double>> w(classes, std::vector<double>(dim));
    std::vector<double> b(classes);
    for (auto& row : w)
      for (auto& v : row) v = rng.gaussian();
    for (auto& v : b) v = rng.gaussian() * 0.2;
    const AffineClassifier f(std::move(w), std::move(b));
    std::vector<double> x(dim);
    for (auto& v : x) v = rng.gaussian();
    const double dmin = affine_min_boundary_distance(f, x);
    if (!std::isfinite(dmin) || dmin < 1e-9) continue;
    ++checked;
    const SsaResult r = ssa_perturb(f, x);
    if (r.status != SsaStatus::Success) continue;
    const double ratio = r.pert.l2_norm / dmin;
    worst_ratio = std::max(worst_ratio, ratio);
    if (ratio <= 1.03) ++within;
  }
  const bool pass = checked >= 90 && within == checked;
  report("C5", "ssa affine boundary oracle", pass,
         fmt("%d/%d within 1.03x (worst %.4fx)", within, checked, worst_ratio), t.secs());
}

void criterion9_gradients() {
  Timer t;
  Rng rng(kSeed + 9);
  const std::vector<LayerSpec> arch = {
      {LayerKind::Conv1d, 3, 3, 1, 0},   {LayerKind::BatchNorm},
      {LayerKind::Relu},                 {LayerKind::MaxPool1d, 0, 2, 2, 0},
      {LayerKind::Conv1d, 4, 3, 2, 0},   {LayerKind::Relu},
      {LayerKind::Flatten},              {LayerKind::Dense, 0, 0, 1, 6},
      {LayerKind::Relu},                 {LayerKind::Dense, 0, 0, 1, 4},
  };
  double worst_param = 0.0, worst_input = 0.0;
  int64_t skipped = 0, total = 0;
  for (int instance = 0; instance < 20; ++instance) {
    NetworkModel m = build_model(arch, 24, 4, kSeed * 100 + instance);
    Act batch(4, 1, 24);
    for (auto& x : batch.v) x = rng.uniform(-1.0, 1.0);
    std::vector<int> labels;
    for (int i = 0; i < 4; ++i) labels.push_back(rng.range_int(1, 4));

    NetworkModel work = m;
    ForwardCache cache;
    Act logits = nn_forward_train(work, batch, &cache);
    GradSet grads = make_grad_set(work);
    Act dlogits;
    cross_entropy_loss(logits, labels, &dlogits);
    nn_backward(work, cache, dlogits, &grads);
    const FdWorst wp = fd_check_params(m, batch, labels, grads, Mode::Train);
    worst_param = std::max(worst_param, wp.rel_err);
    skipped += wp.skipped;
    total += wp.checked + wp.skipped;

    std::vector<double> x(24);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const int cls = rng.range_int(1, 4);
    const FdWorst wi = fd_check_input(m, x, cls, input_gradient(m, x, cls));
    worst_input = std::max(worst_input, wi.rel_err);
    skipped += wi.skipped;
    total += wi.checked + wi.skipped;
  }

  double worst_softmax = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> z(17);
    for (auto& v : z) v = rng.uniform(-40.0, 40.0);
    const auto p = softmax(z);
    double sum = 0.0;
    for (double v : p) sum += v;
    worst_softmax = std::max(worst_softmax, std::abs(sum - 1.0));
  }

  const bool pass = worst_param < 1e-4 && worst_input < 1e-4 && worst_softmax <= 1e-9 &&
                    skipped * 20 < total;
  report("C9", "finite-difference gradient checks", pass,
         fmt("worst param=%.2e input=%.2e softmax=%.1e (kink-skipped %lld/%lld)", worst_param,
             worst_input, worst_softmax, static_cast<long long>(skipped),
             static_cast<long long>(total)),
         t.secs());
}

// ---------------------------------------------------------------------------
// criteria 3-10 pipeline (run twice for criterion 11)

struct PipelineOutput {
  MetricsMap metrics;
};

PipelineOutput run_pipeline(const std::string& workdir, bool record) {
  PipelineOutput out;
  MetricsMap& mm = out.metrics;
  fs::remove_all(workdir);
  fs::create_directories(workdir);

  // --- dataset + training (criterion 3)
  Timer t3;
  {
    const Dataset generated = build_dataset(kPerClass, 30.0, kSeed);
    DatasetManifest info;
    info.seed = kSeed;
    info.per_class = kPerClass;
    info.snr_db = 30.0;
    save_dataset(workdir + "/dataset", generated, info);
  }
  const Dataset data = load_dataset(workdir + "/dataset");

  NetworkModel model =
      build_model(default_architecture(), kSignalDim, kNumClasses, kSeed, "default");
  AdamConfig adam;
  adam.epochs = kTrainEpochs;
  const TrainResult tr = train(model, data, adam, kSeed);
  save_model(model, workdir + "/model.pqm");
  model = load_model(workdir + "/model.pqm");

  const double test_acc = tr.trace.back().test_acc;
  mm["c3.test_acc"] = test_acc;
  mm["c3.train_acc"] = tr.trace.back().train_acc;
  mm["c3.final_loss"] = tr.trace.back().train_loss;
  if (record)
    report("C3", "clean training at desk scale", test_acc >= 0.90,
           fmt("test_acc=%.4f >= 0.90 (train_acc=%.4f, 500/class, 15 epochs)", test_acc,
               tr.trace.back().train_acc),
           t3.secs());

  const NetClassifier f(model);

  // --- criterion 4: SSA vs FGSM on 1000 test signals
  Timer t4;
  const std::vector<int> atk_idx =
      seeded_subset(static_cast<int>(data.test.size()), kAttackCount, kSeed, 0);
  const int n_atk = static_cast<int>(atk_idx.size());
  std::vector<int> ssa_flip(n_atk, 0), fgsm_flip(n_atk, 0);
  std::vector<double> ssa_ratio(n_atk, -1.0), fgsm_ratio(n_atk, -1.0);
  std::vector<int> pred_clean(n_atk), pred_ssa(n_atk), pred_fgsm(n_atk);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n_atk; ++i) {
    const SignalVector& s = data.test[atk_idx[i]];
    const double xnorm = l2_norm(s.values);
    const SsaResult r = ssa_perturb(f, s.values);
    pred_clean[i] = r.pred_before;
    pred_ssa[i] = r.pred_after;
    if (r.status == SsaStatus::Success) {
      ssa_flip[i] = 1;
      ssa_ratio[i] = r.pert.l2_norm / xnorm;
    }
    const FgsmResult g = fgsm(f, s.values, s.label, 0.5);
    if (g.pred_after != g.pred_before) fgsm_flip[i] = 1;
    fgsm_ratio[i] = g.pert.l2_norm / xnorm;
    pred_fgsm[i] = g.pred_after;
  }
  double ssa_rate = 0.0, fgsm_rate = 0.0, ssa_rho = 0.0, fgsm_rho = 0.0;
  int ssa_succ = 0;
  for (int i = 0; i < n_atk; ++i) {
    ssa_rate += ssa_flip[i];
    fgsm_rate += fgsm_flip[i];
    if (ssa_ratio[i] >= 0.0) {
      ssa_rho += ssa_ratio[i];
      ++ssa_succ;
    }
    fgsm_rho += fgsm_ratio[i];
  }
  ssa_rate /= n_atk;
  fgsm_rate /= n_atk;
  ssa_rho = ssa_succ > 0 ? ssa_rho / ssa_succ : 0.0;
  fgsm_rho /= n_atk;
  mm["c4.ssa_rate"] = ssa_rate;
  mm["c4.ssa_rho"] = ssa_rho;
  mm["c4.fgsm_rate"] = fgsm_rate;
  mm["c4.fgsm_rho"] = fgsm_rho;
  if (record) {
    const bool pass = ssa_rate >= 0.95 && ssa_rho <= 0.02 && fgsm_rho >= 0.5 &&
                      fgsm_rho <= 1.0 && fgsm_rho >= 20.0 * ssa_rho;
    report("C4", "ssa vs fgsm on 1000 test signals", pass,
           fmt("ssa rate=%.3f rho=%.2e | fgsm rate=%.3f rho=%.3f | ratio=%.0fx", ssa_rate,
               ssa_rho, fgsm_rate, fgsm_rho, ssa_rho > 0 ? fgsm_rho / ssa_rho : 0.0),
           t4.secs());
  }

  // --- criterion 6: SAA subset sweep
  Timer t6;
  const auto test_values = [&] {
    std::vector<std::vector<double>> v;
    v.reserve(data.test.size());
    for (const auto& s : data.test) v.push_back(s.values);
    return v;
  }();
  double fool[3] = {0, 0, 0};
  double vnorm[3] = {0, 0, 0};
  std::vector<double> v_final;
  // nested subsets (prefixes of one shuffled order): each size strictly adds
  // training signals, isolating the size effect from subset choice
  const std::vector<int> sweep_order =
      seeded_subset(static_cast<int>(data.train.size()), kSaaSubsets[2], kSeed, 10);
  for (int si = 0; si < 3; ++si) {
    const int subset = kSaaSubsets[si];
    std::vector<const std::vector<double>*> X;
    X.reserve(subset);
    for (int i = 0; i < subset; ++i) X.push_back(&data.train[sweep_order[i]].values);
    SaaConfig cfg;
    cfg.xi = kXi;
    cfg.delta = kDelta;
    cfg.max_epochs = kSaaMaxEpochs;
    cfg.seed = kSeed;
    const UniversalPerturbation up = saa_universal(f, X, cfg);
    fool[si] = fooling_rate(f, test_values, up.v);
    vnorm[si] = l2_norm(up.v);
    mm[fmt("c6.fool_%d", subset)] = fool[si];
    mm[fmt("c6.vnorm_%d", subset)] = vnorm[si];
    mm[fmt("c6.train_fool_%d", subset)] = up.training_fool_rate;
    if (si == 2) v_final = up.v;
  }
  if (record) {
    const bool budget_ok = vnorm[0] <= kXi + 1e-9 && vnorm[1] <= kXi + 1e-9 &&
                           vnorm[2] <= kXi + 1e-9;
    const bool pass = fool[2] >= 0.35 && fool[0] <= fool[1] && fool[1] <= fool[2] && budget_ok;
    report("C6", "universal perturbation subset sweep", pass,
           fmt("test fooling 425:%.3f <= 850:%.3f <= 1700:%.3f (>=0.35); ||v||<=1: %s",
               fool[0], fool[1], fool[2], budget_ok ? "yes" : "no"),
           t6.secs());
  }

  // weighted out-entropy ordering of the class-confusion graphs (SSA spreads
  // misclassifications across classes; FGSM and SAA funnel into a few)
  {
    Timer tx;
    std::vector<int> pred_saa(n_atk);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n_atk; ++i) {
      std::vector<double> xv = data.test[atk_idx[i]].values;
      for (int j = 0; j < kSignalDim; ++j) xv[j] += v_final[j];
      pred_saa[i] = f.predict(xv);
    }
    auto weighted_out = [&](const std::vector<int>& preds) {
      const ConfusionMatrix cmx =
          confusion_matrix_from_predictions(pred_clean, preds, kNumClasses);
      return graph_entropy(confusion_graph(cmx), Direction::Out, true);
    };
    const double h_ssa = weighted_out(pred_ssa);
    const double h_fgsm = weighted_out(pred_fgsm);
    const double h_saa = weighted_out(pred_saa);
    mm["c6x.weighted_out_ssa"] = h_ssa;
    mm["c6x.weighted_out_fgsm"] = h_fgsm;
    mm["c6x.weighted_out_saa"] = h_saa;
    if (record)
      report("C6b", "weighted out-entropy ordering ssa > saa > fgsm",
             h_ssa > h_saa && h_saa > h_fgsm,
             fmt("H_w(out): ssa=%.2f saa=%.2f fgsm=%.2f", h_ssa, h_saa, h_fgsm), tx.secs());
  }

  // --- criterion 7: black-box transfer, SAA >= 5x SSA per cell
  Timer t7;
  bool c7_pass = true;
  std::string c7_detail;
  for (int type = 1; type <= 2; ++type) {
    for (int ratio_den : kBlackboxRatios) {
      const double ratio = 1.0 / ratio_den;
      double ssa_sum = 0.0, saa_sum = 0.0;
      for (int rep = 0; rep < kBlackboxReps; ++rep) {
        SubstituteSpec spec;
        spec.box_type = type == 1 ? BoxType::TypeI : BoxType::TypeII;
        spec.data_ratio = ratio;
        spec.seed = kSeed * 1000 + static_cast<uint64_t>(type) * 100 +
                    static_cast<uint64_t>(ratio_den) * 10 + rep;
        const NetworkModel sub = train_substitute(spec, data, model);
        const std::vector<SignalVector> attacker = attacker_subset(data, ratio, spec.seed);

        TransferParams ssa_params;
        ssa_params.attack_kind = AttackKind::Ssa;
        ssa_params.ssa_eval_count = kSsaTransferEval;
        const TransferReport rs =
            transfer_attack(sub, model, data.test, ssa_params, attacker, spec.seed);

        TransferParams saa_params;
        saa_params.attack_kind = AttackKind::Saa;
        saa_params.saa.xi = kXi;
        saa_params.saa.delta = kDelta;
        saa_params.saa.max_epochs = kSaaTransferEpochs;
        saa_params.saa_train_count = kSaaTransferTrain;
        const TransferReport ra =
            transfer_attack(sub, model, data.test, saa_params, attacker, spec.seed);

        ssa_sum += rs.transfer_rate;
        saa_sum += ra.transfer_rate;
        mm[fmt("c7.ssa_t%d_r%d_rep%d", type, ratio_den, rep)] = rs.transfer_rate;
        mm[fmt("c7.saa_t%d_r%d_rep%d", type, ratio_den, rep)] = ra.transfer_rate;
        mm[fmt("c7.subacc_t%d_r%d_rep%d", type, ratio_den, rep)] = rs.substitute_test_acc;
      }
      const double ssa_mean = ssa_sum / kBlackboxReps;
      const double saa_mean = saa_sum / kBlackboxReps;
      mm[fmt("c7.ssa_t%d_r%d", type, ratio_den)] = ssa_mean;
      mm[fmt("c7.saa_t%d_r%d", type, ratio_den)] = saa_mean;
      if (saa_mean < 5.0 * ssa_mean) c7_pass = false;
      c7_detail += fmt("T%d/r%d ssa=%.3f saa=%.3f (%.1fx)  ", type, ratio_den, ssa_mean,
                       saa_mean, ssa_mean > 0 ? saa_mean / ssa_mean : 999.0);
    }
  }
  if (record)
    report("C7", "black-box transfer ordering", c7_pass, c7_detail, t7.secs());

  // --- criterion 8: adversarial training
  Timer t8;
  AdvTrainConfig atc;
  atc.adv_epochs = kAdvEpochs;
  atc.mix_ratio = 0.5;
  atc.rho_eval_count = kRhoEvalCount;
  const AdvTrainResult at = adversarial_train(model, data, atc, kSeed);
  const AdvTraceRow& first = at.trace.front();
  const AdvTraceRow& third = at.trace[3];
  const AdvTraceRow& last = at.trace.back();
  mm["c8.pre_adv_test_acc"] = first.adv_test_acc;
  mm["c8.post_adv_test_acc"] = last.adv_test_acc;
  mm["c8.pre_clean_test_acc"] = first.clean_test_acc;
  mm["c8.post_clean_test_acc"] = last.clean_test_acc;
  mm["c8.rho_epoch0"] = first.rho_adv;
  mm["c8.rho_epoch3"] = third.rho_adv;
  mm["c8.rho_final"] = last.rho_adv;
  if (record) {
    const bool pass = first.adv_test_acc < 0.10 && last.adv_test_acc >= 0.70 &&
                      last.clean_test_acc < first.clean_test_acc &&
                      third.rho_adv >= 2.0 * first.rho_adv;
    report("C8", "adversarial training trade-off", pass,
           fmt("adv acc %.3f->%.3f (>=0.70); clean %.3f->%.3f (down); rho %.2e->%.2e@3 "
               "(%.1fx)",
               first.adv_test_acc, last.adv_test_acc, first.clean_test_acc,
               last.clean_test_acc, first.rho_adv, third.rho_adv,
               first.rho_adv > 0 ? third.rho_adv / first.rho_adv : 0.0),
           t8.secs());
  }

  // --- criterion 10: t-SNE projection quality
  Timer t10;
  const std::vector<int> proj_idx =
      seeded_subset(static_cast<int>(data.test.size()), kProjectN, kSeed, 20);
  std::vector<std::vector<double>> raw;
  std::vector<int> labels;
  for (int i : proj_idx) {
    raw.push_back(data.test[i].values);
    labels.push_back(data.test[i].label);
  }
  const auto feats = extract_features(model, raw);
  TsneConfig tcfg;
  tcfg.perplexity = 30.0;
  tcfg.iterations = 1000;
  tcfg.seed = kSeed;
  const TsneResult pr_raw = tsne_project(raw, tcfg);
  const TsneResult pr_feat = tsne_project(feats, tcfg);
  const double nh_raw = neighborhood_hit(pr_raw.points, labels, 5);
  const double nh_feat = neighborhood_hit(pr_feat.points, labels, 5);
  mm["c10.nh_raw"] = nh_raw;
  mm["c10.nh_features"] = nh_feat;
  if (record)
    report("C10", "projection quality (feature vs raw)", nh_feat >= 0.75 && nh_feat > nh_raw,
           fmt("NH features=%.4f (>=0.75) > raw=%.4f", nh_feat, nh_raw), t10.secs());

  return out;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  std::string workdir = (fs::temp_directory_path() / "pqadv_acceptance").string();
  bool skip_repeat = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--workdir" && i + 1 < argc)
      workdir = argv[++i];
    else if (arg == "--single-run")
      skip_repeat = true;  // skips criterion 11; for quick inspection only
  }

  std::printf("pqadv acceptance suite (desk scale, seed %llu)\n",
              static_cast<unsigned long long>(kSeed));
  std::fflush(stdout);

  try {
    criterion1_entropy_golden();
    criterion2_signal_norm();
    criterion5_ssa_affine_oracle();
    criterion9_gradients();

    Timer tp;
    const PipelineOutput first = run_pipeline(workdir + "/run1", true);

    if (!skip_repeat) {
      Timer t11;
      const PipelineOutput second = run_pipeline(workdir + "/run2", false);
      bool identical = first.metrics.size() == second.metrics.size();
      std::string mismatch;
      for (const auto& [key, value] : first.metrics) {
        const auto it = second.metrics.find(key);
        if (it == second.metrics.end() ||
            std::memcmp(&value, &it->second, sizeof(double)) != 0) {
          identical = false;
          mismatch = key;
          break;
        }
      }
      report("C11", "bit-identical metrics on repeat", identical,
             identical ? fmt("%zu metrics identical across runs", first.metrics.size())
                       : "first mismatch at " + mismatch,
             t11.secs());
    }
  } catch (const std::exception& e) {
    std::printf("[ERR] acceptance aborted: %s\n", e.what());
    return 99;
  }

  int failures = 0;
  for (const auto& c : g_results)
    if (!c.pass) ++failures;
  std::printf("%zu criteria checked, %d failed\n", g_results.size(), failures);
  return failures;
}
