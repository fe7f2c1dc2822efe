// pqadv — synthesize power-quality disturbance datasets, train the 1D CNN
// classifier, generate white-box and universal adversarial signals, evaluate
// black-box transfer, harden models by adversarial training, and emit the
// evaluation tables.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pqadv/attacks.hpp"
#include "pqadv/blackbox.hpp"
#include "pqadv/dataset_io.hpp"
#include "pqadv/defense.hpp"
#include "pqadv/error.hpp"
#include "pqadv/experiment.hpp"
#include "pqadv/metrics.hpp"
#include "pqadv/model_io.hpp"
#include "pqadv/nnet.hpp"
#include "pqadv/pqgen.hpp"
#include "pqadv/tsne.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif
#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pqadv;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void require_input_path(const std::string& path, const char* flag) {
  require(!path.empty() && fs::exists(path), Errc::ConfigInvalid,
          std::string(flag) + " does not name an existing path: '" + path + "'");
}

std::string parent_dir(const std::string& path) {
  const fs::path p(path);
  const fs::path dir = fs::is_directory(p) ? p : p.parent_path();
  return dir.empty() ? std::string(".") : dir.string();
}

void finalize_report(ExperimentReport& rep, const std::string& out_path) {
  rep.provenance["config_hash"] = fnv1a_hex(rep.config.dump());
  const std::string dir = parent_dir(out_path);
  std::error_code ec;
  fs::create_directories(dir, ec);
  write_report(dir + "/report_" + rep.scenario + ".json", rep);
}

std::vector<std::vector<double>> values_of(const std::vector<SignalVector>& set) {
  std::vector<std::vector<double>> out;
  out.reserve(set.size());
  for (const auto& s : set) out.push_back(s.values);
  return out;
}

std::vector<int> labels_of(const std::vector<SignalVector>& set) {
  std::vector<int> out;
  out.reserve(set.size());
  for (const auto& s : set) out.push_back(s.label);
  return out;
}

/// Seeded subset of [0, n): first `count` entries of a shuffle (count 0 = all).
std::vector<int> pick_indices(int n, int count, uint64_t seed, uint64_t stream_index) {
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
// gen

struct GenOpts {
  int per_class = 500;
  double snr = 30.0;
  uint64_t seed = 1;
  std::string out;
};

ExperimentReport cmd_gen(const GenOpts& o) {
  ExperimentReport rep;
  rep.scenario = "gen";
  rep.config = {{"per_class", o.per_class}, {"snr", o.snr}, {"seed", o.seed}, {"out", o.out}};

  const auto t0 = Clock::now();
  const Dataset ds = build_dataset(o.per_class, o.snr, o.seed);
  const double gen_s = seconds_since(t0);

  DatasetManifest info;
  info.seed = o.seed;
  info.per_class = o.per_class;
  info.snr_db = o.snr;
  save_dataset(o.out, ds, info);

  double norm_sum = 0.0;
  for (const auto& s : ds.train) norm_sum += l2_norm(s.values);
  for (const auto& s : ds.test) norm_sum += l2_norm(s.values);

  rep.metrics = {{"train_count", ds.train.size()},
                 {"test_count", ds.test.size()},
                 {"mean_l2_norm", norm_sum / (ds.train.size() + ds.test.size())}};
  rep.timings = {{"generate_s", gen_s}};
  finalize_report(rep, o.out);
  return rep;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data;
  int epochs = 15;
  uint64_t seed = 1;
  std::string out;
  AdamConfig adam;
  std::string arch = "default";  // default | minus | plus
};

ExperimentReport cmd_train(const TrainOpts& o) {
  require_input_path(o.data, "--data");
  ExperimentReport rep;
  rep.scenario = "train";
  rep.config = {{"data", o.data},     {"epochs", o.epochs},      {"seed", o.seed},
                {"out", o.out},       {"alpha", o.adam.alpha},   {"beta1", o.adam.beta1},
                {"beta2", o.adam.beta2}, {"eps", o.adam.eps},    {"batch_size", o.adam.batch_size},
                {"arch", o.arch}};

  const Dataset ds = load_dataset(o.data);
  std::vector<LayerSpec> specs;
  if (o.arch == "default")
    specs = default_architecture();
  else if (o.arch == "minus")
    specs = architecture_minus_block();
  else if (o.arch == "plus")
    specs = architecture_plus_block();
  else
    fail(Errc::ConfigInvalid, "--arch must be default|minus|plus");

  NetworkModel model = build_model(specs, kSignalDim, kNumClasses, o.seed, o.arch);
  AdamConfig adam = o.adam;
  adam.epochs = o.epochs;

  const auto t0 = Clock::now();
  const TrainResult res = train(model, ds, adam, o.seed);
  const double train_s = seconds_since(t0);

  json trace = json::array();
  for (const auto& row : res.trace)
    trace.push_back({{"epoch", row.epoch},
                     {"train_loss", row.train_loss},
                     {"train_acc", row.train_acc},
                     {"test_acc", row.test_acc}});

  save_model(model, o.out,
             {{"seed", o.seed},
              {"epochs", o.epochs},
              {"adam", {{"alpha", adam.alpha}, {"beta1", adam.beta1}, {"beta2", adam.beta2},
                        {"eps", adam.eps}, {"batch_size", adam.batch_size}}},
              {"data", o.data}});

  rep.metrics = {{"final_train_acc", res.trace.empty() ? 0.0 : res.trace.back().train_acc},
                 {"final_test_acc", res.trace.empty() ? 0.0 : res.trace.back().test_acc},
                 {"trace", trace}};
  rep.timings = {{"train_s", train_s}};
  rep.provenance["model_manifest_hash"] = model_manifest_hash(o.out);
  finalize_report(rep, o.out);
  return rep;
}

// ---------------------------------------------------------------------------
// attack (fgsm | ssa)

struct AttackOpts {
  std::string model;
  std::string data;
  std::string method = "ssa";
  double eps = 0.5;
  int count = 0;  // 0 = entire test split
  uint64_t seed = 1;
  std::string out;
};

ExperimentReport cmd_attack(const AttackOpts& o) {
  require_input_path(o.model, "--model");
  require_input_path(o.data, "--data");
  require(o.method == "fgsm" || o.method == "ssa", Errc::ConfigInvalid,
          "--method must be fgsm or ssa");

  ExperimentReport rep;
  rep.scenario = "attack";
  rep.config = {{"model", o.model}, {"data", o.data},  {"method", o.method},
                {"eps", o.eps},     {"count", o.count}, {"seed", o.seed},
                {"out", o.out}};

  const NetworkModel model = load_model(o.model);
  const Dataset ds = load_dataset(o.data);
  const NetClassifier f(model);

  const std::vector<int> idx =
      pick_indices(static_cast<int>(ds.test.size()), o.count, o.seed, 0);
  const int n = static_cast<int>(idx.size());
  std::vector<AdversarialRow> rows(n);

  const auto t0 = Clock::now();
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const SignalVector& s = ds.test[idx[i]];
    AdversarialRow& row = rows[i];
    row.label = s.label;
    row.orig_label = s.label;
    if (o.method == "fgsm") {
      const FgsmResult r = fgsm(f, s.values, s.label, o.eps);
      row.values = r.x_adv;
      row.pred_before = r.pred_before;
      row.pred_after = r.pred_after;
      row.l2_r = r.pert.l2_norm;
      row.iters = r.pert.iterations;
    } else {
      const SsaResult r = ssa_perturb(f, s.values);
      row.values = r.x_adv;
      row.pred_before = r.pred_before;
      row.pred_after = r.pred_after;
      row.l2_r = r.status == SsaStatus::Success ? r.pert.l2_norm : 0.0;
      row.iters = r.pert.iterations;
    }
  }
  const double attack_s = seconds_since(t0);

  save_adversarial_csv(o.out, rows);

  int64_t flips = 0, successes = 0;
  double rho_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (rows[i].pred_after != rows[i].pred_before) ++flips;
    const bool ok = o.method == "fgsm" || rows[i].pred_after != rows[i].pred_before;
    if (ok && rows[i].l2_r > 0.0) {
      rho_sum += rows[i].l2_r / l2_norm(ds.test[idx[i]].values);
      ++successes;
    }
  }
  rep.metrics = {{"attack_kind", o.method},
                 {"count", n},
                 {"misclassification_rate", static_cast<double>(flips) / n},
                 {"rho_adv", successes > 0 ? rho_sum / successes : 0.0},
                 {"successes", successes},
                 {"avg_time_sec", attack_s / n}};
  rep.timings = {{"attack_s", attack_s}};
  rep.provenance["model_manifest_hash"] = model_manifest_hash(o.model);
  finalize_report(rep, o.out);
  return rep;
}

// ---------------------------------------------------------------------------
// universal (saa)

struct UniversalOpts {
  std::string model;
  std::string data;
  double xi = 1.0;
  double delta = 0.26;
  int subset = 1700;
  int max_epochs = 10;
  uint64_t seed = 1;
  std::string out;
};

ExperimentReport cmd_universal(const UniversalOpts& o) {
  require_input_path(o.model, "--model");
  require_input_path(o.data, "--data");

  ExperimentReport rep;
  rep.scenario = "universal";
  rep.config = {{"model", o.model}, {"data", o.data},   {"xi", o.xi},
                {"delta", o.delta}, {"subset", o.subset}, {"max_epochs", o.max_epochs},
                {"seed", o.seed},   {"out", o.out}};

  const NetworkModel model = load_model(o.model);
  const Dataset ds = load_dataset(o.data);
  const NetClassifier f(model);

  const std::vector<int> idx =
      pick_indices(static_cast<int>(ds.train.size()), o.subset, o.seed, 1);
  std::vector<const std::vector<double>*> X;
  X.reserve(idx.size());
  for (int i : idx) X.push_back(&ds.train[i].values);

  SaaConfig cfg;
  cfg.xi = o.xi;
  cfg.delta = o.delta;
  cfg.max_epochs = o.max_epochs;
  cfg.seed = o.seed;

  const auto t0 = Clock::now();
  const UniversalPerturbation up = saa_universal(f, X, cfg);
  const double build_s = seconds_since(t0);

  const auto test_values = values_of(ds.test);
  const double test_fool = fooling_rate(f, test_values, up.v);

  // application cost: adding v to a signal (the attack itself, not inference)
  const auto t1 = Clock::now();
  {
    std::vector<double> tmp(kSignalDim);
    for (const auto& x : test_values)
      for (int j = 0; j < kSignalDim; ++j) tmp[j] = x[j] + up.v[j];
  }
  const double apply_s = seconds_since(t1) / test_values.size();

  double rho_sum = 0.0;
  const double vnorm = l2_norm(up.v);
  for (const auto& x : test_values) rho_sum += vnorm / l2_norm(x);

  json vj;
  vj["v"] = up.v;
  vj["xi"] = up.xi;
  vj["delta"] = up.delta;
  vj["training_fool_rate"] = up.training_fool_rate;
  vj["epochs_used"] = up.epochs_used;
  vj["subset_size"] = static_cast<int>(idx.size());
  vj["seed"] = o.seed;
  vj["attack_kind"] = "saa";
  write_json_file(o.out, vj);

  rep.metrics = {{"attack_kind", "saa"},
                 {"subset_size", static_cast<int>(idx.size())},
                 {"training_fool_rate", up.training_fool_rate},
                 {"epochs_used", up.epochs_used},
                 {"v_l2_norm", vnorm},
                 {"test_misclassification_rate", test_fool},
                 {"misclassification_rate", test_fool},
                 {"rho_adv", rho_sum / test_values.size()},
                 {"avg_time_sec", apply_s}};
  rep.timings = {{"build_s", build_s}};
  rep.provenance["model_manifest_hash"] = model_manifest_hash(o.model);
  finalize_report(rep, o.out);
  return rep;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string model;
  std::string adv;
  std::string data;  // optional: enables rho_adv and clean-pairing
  std::string kind = "ssa";
  std::string out;
};

void write_confusion_csv(const std::string& path, const ConfusionMatrix& m) {
  std::ofstream outf(path);
  require(outf.good(), Errc::IoFailure, "cannot open " + path);
  outf << "ref\\pred";
  for (int c = 1; c <= m.k; ++c) outf << "," << class_symbol(c);
  outf << "\n";
  const auto norm = m.normalized();
  for (int r = 0; r < m.k; ++r) {
    outf << class_symbol(r + 1);
    for (int c = 0; c < m.k; ++c) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), ",%.6f", norm[r * m.k + c]);
      outf << buf;
    }
    outf << "\n";
  }
}

ExperimentReport cmd_eval(const EvalOpts& o) {
  require_input_path(o.model, "--model");
  ExperimentReport rep;
  rep.scenario = "eval";
  rep.config = {{"model", o.model}, {"adv", o.adv}, {"data", o.data}, {"kind", o.kind},
                {"out", o.out}};

  const NetworkModel model = load_model(o.model);
  fs::create_directories(o.out);

  if (o.adv.empty()) {
    // clean evaluation against ground truth
    require_input_path(o.data, "--data");
    const Dataset ds = load_dataset(o.data);
    const auto xs = values_of(ds.test);
    const auto labels = labels_of(ds.test);
    const auto preds = predict_batch(model, xs);
    int64_t hit = 0;
    for (size_t i = 0; i < preds.size(); ++i)
      if (preds[i] == labels[i]) ++hit;
    const ConfusionMatrix cm = confusion_matrix_from_predictions(labels, preds, kNumClasses);
    write_confusion_csv(o.out + "/confusion.csv", cm);
    rep.metrics = {{"attack_kind", "clean"},
                   {"clean_test_acc", static_cast<double>(hit) / preds.size()},
                   {"count", preds.size()}};
    finalize_report(rep, o.out);
    return rep;
  }

  require_input_path(o.adv, "--adv");
  const std::vector<AdversarialRow> rows = load_adversarial_csv(o.adv);
  require(!rows.empty(), Errc::EmptySet, "no adversarial rows in " + o.adv);

  std::vector<std::vector<double>> adv_values;
  std::vector<int> reference;
  adv_values.reserve(rows.size());
  for (const auto& r : rows) {
    adv_values.push_back(r.values);
    reference.push_back(r.pred_before);
  }
  const std::vector<int> preds = predict_batch(model, adv_values);
  const double rate = misclassification_rate_from_predictions(reference, preds);

  const ConfusionMatrix cm = confusion_matrix_from_predictions(reference, preds, kNumClasses);
  write_confusion_csv(o.out + "/confusion.csv", cm);
  const ConfusionGraph g = confusion_graph(cm);
  const DegreeTable dt = degree_table(g);

  json edges = json::array();
  for (const auto& e : g.edges)
    edges.push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
  write_json_file(o.out + "/graph.json", {{"threshold", g.threshold}, {"edges", edges}});

  rep.metrics = {{"attack_kind", o.kind},
                 {"count", rows.size()},
                 {"misclassification_rate", rate},
                 {"in_degree", dt.in_degree},
                 {"out_degree", dt.out_degree},
                 {"graph_entropy_unweighted_out", graph_entropy(g, Direction::Out, false)},
                 {"graph_entropy_unweighted_in", graph_entropy(g, Direction::In, false)},
                 {"graph_entropy_weighted_out", graph_entropy(g, Direction::Out, true)},
                 {"graph_entropy_weighted_in", graph_entropy(g, Direction::In, true)}};

  if (!o.data.empty()) {
    require_input_path(o.data, "--data");
    const Dataset ds = load_dataset(o.data);
    if (ds.test.size() == rows.size()) {
      std::vector<std::vector<double>> xs, rs;
      for (size_t i = 0; i < rows.size(); ++i) {
        xs.push_back(ds.test[i].values);
        std::vector<double> r(kSignalDim);
        for (int j = 0; j < kSignalDim; ++j) r[j] = rows[i].values[j] - ds.test[i].values[j];
        rs.push_back(std::move(r));
      }
      rep.metrics["rho_adv"] = average_robustness(xs, rs);
    } else {
      rep.metrics["rho_adv_note"] = "row count differs from the test split; rho_adv skipped";
    }
  }

  write_json_file(o.out + "/degrees_entropy.json",
                  {{"attack_kind", o.kind},
                   {"in_degree", dt.in_degree},
                   {"out_degree", dt.out_degree},
                   {"entropy",
                    {{"unweighted_out", rep.metrics["graph_entropy_unweighted_out"]},
                     {"unweighted_in", rep.metrics["graph_entropy_unweighted_in"]},
                     {"weighted_out", rep.metrics["graph_entropy_weighted_out"]},
                     {"weighted_in", rep.metrics["graph_entropy_weighted_in"]}}}});

  rep.provenance["model_manifest_hash"] = model_manifest_hash(o.model);
  finalize_report(rep, o.out);
  return rep;
}

// ---------------------------------------------------------------------------
// project (t-SNE + neighborhood hit)

struct ProjectOpts {
  std::string model;
  std::string data;
  int n = 1000;
  std::string source = "features";  // raw | features
  double perplexity = 30.0;
  int iterations = 1000;
  uint64_t seed = 1;
  std::string out;
};

ExperimentReport cmd_project(const ProjectOpts& o) {
  require_input_path(o.data, "--data");
  require(o.source == "raw" || o.source == "features", Errc::ConfigInvalid,
          "--source must be raw or features");

  ExperimentReport rep;
  rep.scenario = "project";
  rep.config = {{"model", o.model},           {"data", o.data}, {"n", o.n},
                {"source", o.source},         {"perplexity", o.perplexity},
                {"iterations", o.iterations}, {"seed", o.seed}, {"out", o.out}};

  const Dataset ds = load_dataset(o.data);
  const std::vector<int> idx = pick_indices(static_cast<int>(ds.test.size()), o.n, o.seed, 2);
  std::vector<std::vector<double>> xs;
  std::vector<int> labels;
  for (int i : idx) {
    xs.push_back(ds.test[i].values);
    labels.push_back(ds.test[i].label);
  }

  std::vector<std::vector<double>> vectors;
  if (o.source == "features") {
    require_input_path(o.model, "--model");
    const NetworkModel model = load_model(o.model);
    vectors = extract_features(model, xs);
  } else {
    vectors = xs;
  }

  TsneConfig cfg;
  cfg.perplexity = o.perplexity;
  cfg.iterations = o.iterations;
  cfg.seed = o.seed;
  const auto t0 = Clock::now();
  const TsneResult res = tsne_project(vectors, cfg);
  const double tsne_s = seconds_since(t0);

  const double nh = neighborhood_hit(res.points, labels, 5);
  write_projection_csv(o.out, res.points, labels);

  rep.metrics = {{"source", o.source},
                 {"n", static_cast<int>(idx.size())},
                 {"neighborhood_hit", nh},
                 {"kl_final", res.kl_trace.empty() ? 0.0 : res.kl_trace.back()}};
  rep.timings = {{"tsne_s", tsne_s}};
  finalize_report(rep, o.out);
  return rep;
}

// ---------------------------------------------------------------------------
// advtrain

struct AdvTrainOpts {
  std::string model;
  std::string data;
  int epochs = 10;
  double mix = 0.5;
  uint64_t seed = 1;
  std::string out;
  std::string trace_path;
};

ExperimentReport cmd_advtrain(const AdvTrainOpts& o) {
  require_input_path(o.model, "--model");
  require_input_path(o.data, "--data");

  ExperimentReport rep;
  rep.scenario = "advtrain";
  rep.config = {{"model", o.model}, {"data", o.data},       {"epochs", o.epochs},
                {"mix", o.mix},     {"seed", o.seed},        {"out", o.out},
                {"trace", o.trace_path}};

  const NetworkModel model = load_model(o.model);
  const Dataset ds = load_dataset(o.data);

  AdvTrainConfig cfg;
  cfg.adv_epochs = o.epochs;
  cfg.mix_ratio = o.mix;

  const auto t0 = Clock::now();
  const AdvTrainResult res = adversarial_train(model, ds, cfg, o.seed);
  const double total_s = seconds_since(t0);

  save_model(res.hardened, o.out,
             {{"seed", o.seed}, {"adv_epochs", o.epochs}, {"mix", o.mix},
              {"base_model", o.model}});

  if (!o.trace_path.empty()) {
    std::ofstream tr(o.trace_path);
    require(tr.good(), Errc::IoFailure, "cannot open " + o.trace_path);
    tr << "epoch,clean_train_acc,clean_test_acc,adv_train_acc,adv_test_acc,rho_adv\n";
    for (const auto& row : res.trace) {
      char buf[200];
      std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%.8f\n", row.epoch,
                    row.clean_train_acc, row.clean_test_acc, row.adv_train_acc,
                    row.adv_test_acc, row.rho_adv);
      tr << buf;
    }
  }

  json trace = json::array();
  for (const auto& row : res.trace)
    trace.push_back({{"epoch", row.epoch},
                     {"clean_train_acc", row.clean_train_acc},
                     {"clean_test_acc", row.clean_test_acc},
                     {"adv_train_acc", row.adv_train_acc},
                     {"adv_test_acc", row.adv_test_acc},
                     {"rho_adv", row.rho_adv}});
  rep.metrics = {{"attack_kind", "ssa"},
                 {"trace", trace},
                 {"pre_adv_test_acc", res.trace.front().adv_test_acc},
                 {"post_adv_test_acc", res.trace.back().adv_test_acc},
                 {"pre_clean_test_acc", res.trace.front().clean_test_acc},
                 {"post_clean_test_acc", res.trace.back().clean_test_acc}};
  rep.timings = {{"advtrain_s", total_s}};
  rep.provenance["model_manifest_hash"] = model_manifest_hash(o.out);
  finalize_report(rep, o.out);
  return rep;
}

// ---------------------------------------------------------------------------
// transfer

struct TransferOpts {
  std::string target;
  std::string data;
  int type = 1;
  int ratio = 20;  // denominator: 1/20, 1/10, 1/5
  std::string method = "ssa";
  int reps = 3;
  int ssa_eval_count = 500;
  int saa_train_count = 850;
  int saa_max_epochs = 6;
  double xi = 1.0;
  double delta = 0.26;
  uint64_t seed = 1;
  std::string out;
};

ExperimentReport cmd_transfer(const TransferOpts& o) {
  require_input_path(o.target, "--target");
  require_input_path(o.data, "--data");
  require(o.type == 1 || o.type == 2, Errc::ConfigInvalid, "--type must be 1 or 2");
  require(o.ratio == 20 || o.ratio == 10 || o.ratio == 5, Errc::ConfigInvalid,
          "--ratio must be 20, 10 or 5");
  require(o.method == "ssa" || o.method == "saa", Errc::ConfigInvalid,
          "--method must be ssa or saa");
  require(o.reps >= 1, Errc::ConfigInvalid, "--reps must be >= 1");

  ExperimentReport rep;
  rep.scenario = "transfer";
  rep.config = {{"target", o.target}, {"data", o.data},   {"type", o.type},
                {"ratio", o.ratio},   {"method", o.method}, {"reps", o.reps},
                {"seed", o.seed},     {"out", o.out}};

  const NetworkModel target = load_model(o.target);
  const Dataset ds = load_dataset(o.data);
  const double ratio = 1.0 / o.ratio;

  TransferParams params;
  params.attack_kind = o.method == "ssa" ? AttackKind::Ssa : AttackKind::Saa;
  params.ssa_eval_count = o.ssa_eval_count;
  params.saa_train_count = o.saa_train_count;
  params.saa.xi = o.xi;
  params.saa.delta = o.delta;
  params.saa.max_epochs = o.saa_max_epochs;

  const auto t0 = Clock::now();
  json per_rep = json::array();
  double rate_sum = 0.0, rate_sq = 0.0, acc_sum = 0.0;
  for (int r = 0; r < o.reps; ++r) {
    SubstituteSpec spec;
    spec.box_type = o.type == 1 ? BoxType::TypeI : BoxType::TypeII;
    spec.data_ratio = ratio;
    spec.seed = o.seed + static_cast<uint64_t>(r);

    const NetworkModel sub = train_substitute(spec, ds, target);
    const std::vector<SignalVector> attacker = attacker_subset(ds, ratio, spec.seed);
    const TransferReport tr =
        transfer_attack(sub, target, ds.test, params, attacker, spec.seed);

    per_rep.push_back({{"seed", spec.seed},
                       {"substitute_test_acc", tr.substitute_test_acc},
                       {"transfer_rate", tr.transfer_rate},
                       {"transfer_rate_over_all", tr.transfer_rate_over_all},
                       {"substitute_successes", tr.substitute_successes},
                       {"evaluated", tr.evaluated},
                       {"saa_training_fool_rate", tr.saa_training_fool_rate}});
    rate_sum += tr.transfer_rate;
    rate_sq += tr.transfer_rate * tr.transfer_rate;
    acc_sum += tr.substitute_test_acc;
  }
  const double total_s = seconds_since(t0);
  const double mean = rate_sum / o.reps;
  const double var = std::max(0.0, rate_sq / o.reps - mean * mean);

  rep.metrics = {{"attack_kind", o.method},
                 {"box_type", o.type},
                 {"data_ratio", ratio},
                 {"reps", o.reps},
                 {"transfer_rate", mean},
                 {"transfer_rate_std", std::sqrt(var)},
                 {"substitute_test_acc", acc_sum / o.reps},
                 {"per_rep", per_rep}};
  rep.timings = {{"transfer_s", total_s}};
  rep.provenance["model_manifest_hash"] = model_manifest_hash(o.target);
  write_json_file(o.out, rep.to_json());
  finalize_report(rep, o.out);
  return rep;
}

// ---------------------------------------------------------------------------
// tables

struct TablesOpts {
  std::vector<std::string> reports;
  std::string table;
  std::string out;
};

void cmd_tables(const TablesOpts& o) {
  require(!o.reports.empty(), Errc::ConfigInvalid, "--reports needs at least one file");
  std::vector<json> reports;
  for (const auto& path : o.reports) {
    require_input_path(path, "--reports");
    reports.push_back(read_json_file(path));
  }
  const std::string csv = emit_table(reports, o.table);
  std::ofstream outf(o.out);
  require(outf.good(), Errc::IoFailure, "cannot open " + o.out);
  outf << csv;
}

// ---------------------------------------------------------------------------
// reproduce

struct ReproduceOpts {
  std::string scale = "desk";
  uint64_t seed = 1;
  std::string out;
};

ExperimentReport cmd_reproduce(const ReproduceOpts& o) {
  const ScaleSpec sc = scale_by_name(o.scale);
  fs::create_directories(o.out);

  ExperimentReport rep;
  rep.scenario = "reproduce";
  rep.config = {{"scale", sc.name}, {"seed", o.seed}, {"out", o.out}};
  PhaseTimer timer;

  const std::string data_dir = o.out + "/dataset";
  const std::string model_path = o.out + "/model.pqm";

  timer.start("gen");
  GenOpts gen{sc.per_class, 30.0, o.seed, data_dir};
  const ExperimentReport gen_rep = cmd_gen(gen);
  timer.stop();

  timer.start("train");
  TrainOpts train_o;
  train_o.data = data_dir;
  train_o.epochs = sc.train_epochs;
  train_o.seed = o.seed;
  train_o.out = model_path;
  const ExperimentReport train_rep = cmd_train(train_o);
  timer.stop();

  timer.start("attack_ssa");
  AttackOpts ssa_o;
  ssa_o.model = model_path;
  ssa_o.data = data_dir;
  ssa_o.method = "ssa";
  ssa_o.count = sc.attack_count;
  ssa_o.seed = o.seed;
  ssa_o.out = o.out + "/adv_ssa.csv";
  const ExperimentReport ssa_rep = cmd_attack(ssa_o);
  timer.stop();

  timer.start("attack_fgsm");
  AttackOpts fgsm_o = ssa_o;
  fgsm_o.method = "fgsm";
  fgsm_o.out = o.out + "/adv_fgsm.csv";
  const ExperimentReport fgsm_rep = cmd_attack(fgsm_o);
  timer.stop();

  timer.start("universal");
  UniversalOpts uni;
  uni.model = model_path;
  uni.data = data_dir;
  uni.subset = sc.saa_subset;
  uni.max_epochs = sc.saa_max_epochs;
  uni.seed = o.seed;
  uni.out = o.out + "/v.json";
  const ExperimentReport uni_rep = cmd_universal(uni);
  timer.stop();

  // materialize the universal attack as an adversarial CSV for eval
  timer.start("apply_universal");
  {
    const NetworkModel model = load_model(model_path);
    const Dataset ds = load_dataset(data_dir);
    const json vj = read_json_file(uni.out);
    const std::vector<double> v = vj.at("v").get<std::vector<double>>();
    std::vector<AdversarialRow> rows(ds.test.size());
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < static_cast<int64_t>(ds.test.size()); ++i) {
      const SignalVector& s = ds.test[i];
      AdversarialRow& row = rows[i];
      row.values.resize(kSignalDim);
      for (int j = 0; j < kSignalDim; ++j) row.values[j] = s.values[j] + v[j];
      row.label = s.label;
      row.orig_label = s.label;
      row.pred_before = predict(model, s.values);
      row.pred_after = predict(model, row.values);
      row.l2_r = l2_norm(v);
      row.iters = 0;
    }
    save_adversarial_csv(o.out + "/adv_saa.csv", rows);
  }
  timer.stop();

  std::vector<ExperimentReport> eval_reps;
  for (const std::string kind : {"fgsm", "ssa", "saa"}) {
    timer.start("eval_" + kind);
    EvalOpts ev;
    ev.model = model_path;
    ev.adv = o.out + "/adv_" + kind + ".csv";
    ev.data = data_dir;
    ev.kind = kind;
    ev.out = o.out + "/eval_" + kind;
    eval_reps.push_back(cmd_eval(ev));
    timer.stop();
  }

  timer.start("advtrain");
  AdvTrainOpts at;
  at.model = model_path;
  at.data = data_dir;
  at.epochs = sc.advtrain_epochs;
  at.seed = o.seed;
  at.out = o.out + "/hardened.pqm";
  at.trace_path = o.out + "/trace.csv";
  const ExperimentReport at_rep = cmd_advtrain(at);
  timer.stop();

  timer.start("project");
  ProjectOpts pr;
  pr.model = model_path;
  pr.data = data_dir;
  pr.n = sc.project_n;
  pr.perplexity = sc.perplexity;
  pr.seed = o.seed;
  pr.source = "raw";
  pr.out = o.out + "/proj_raw.csv";
  const ExperimentReport raw_rep = cmd_project(pr);
  pr.source = "features";
  pr.out = o.out + "/proj_features.csv";
  const ExperimentReport feat_rep = cmd_project(pr);
  timer.stop();

  // paper-style tables from the collected reports
  const std::vector<json> all_reports = {ssa_rep.to_json(),  fgsm_rep.to_json(),
                                         uni_rep.to_json(),  eval_reps[0].to_json(),
                                         eval_reps[1].to_json(), eval_reps[2].to_json(),
                                         at_rep.to_json()};
  fs::create_directories(o.out + "/tables");
  for (const std::string id : {"comparison", "advtrain", "degrees", "entropy"}) {
    std::ofstream tf(o.out + "/tables/" + id + ".csv");
    tf << emit_table(all_reports, id);
  }

  rep.metrics = {{"clean_test_acc", train_rep.metrics.at("final_test_acc")},
                 {"ssa_misclassification_rate", ssa_rep.metrics.at("misclassification_rate")},
                 {"ssa_rho_adv", ssa_rep.metrics.at("rho_adv")},
                 {"fgsm_misclassification_rate", fgsm_rep.metrics.at("misclassification_rate")},
                 {"fgsm_rho_adv", fgsm_rep.metrics.at("rho_adv")},
                 {"saa_test_misclassification_rate",
                  uni_rep.metrics.at("test_misclassification_rate")},
                 {"saa_v_norm", uni_rep.metrics.at("v_l2_norm")},
                 {"advtrain_pre_adv_test_acc", at_rep.metrics.at("pre_adv_test_acc")},
                 {"advtrain_post_adv_test_acc", at_rep.metrics.at("post_adv_test_acc")},
                 {"nh_raw", raw_rep.metrics.at("neighborhood_hit")},
                 {"nh_features", feat_rep.metrics.at("neighborhood_hit")},
                 {"mean_l2_norm", gen_rep.metrics.at("mean_l2_norm")}};
  rep.timings = timer.to_json();
  finalize_report(rep, o.out);
  write_json_file(o.out + "/report.json", rep.to_json());
  return rep;
}

json g_config;  // loaded from --config, merged into option defaults

template <typename T>
T cfg_or(const char* key, T fallback) {
  if (g_config.contains(key)) return g_config.at(key).get<T>();
  return fallback;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // the attack loops churn multi-megabyte activation buffers; keep them on
  // the heap instead of round-tripping pages through mmap
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  // pre-scan for --config so its values become option defaults
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        g_config = read_json_file(argv[i + 1]);
      } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
      }
    }
  }

  CLI::App app{"power-quality adversarial signal experiments"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with option defaults");
  int threads = cfg_or("threads", 0);
  app.add_option("--threads", threads, "worker thread cap (0 = all cores)");

  GenOpts gen;
  gen.per_class = cfg_or("per-class", gen.per_class);
  gen.snr = cfg_or("snr", gen.snr);
  gen.seed = cfg_or("seed", gen.seed);
  auto* cgen = app.add_subcommand("gen", "synthesize a labeled disturbance dataset");
  cgen->add_option("--per-class", gen.per_class, "signals per class");
  cgen->add_option("--snr", gen.snr, "SNR in dB (inf disables noise)");
  cgen->add_option("--seed", gen.seed, "generation seed");
  cgen->add_option("--out", gen.out, "output dataset directory")->required();

  TrainOpts tr;
  tr.epochs = cfg_or("epochs", tr.epochs);
  tr.seed = cfg_or("seed", tr.seed);
  auto* ctrain = app.add_subcommand("train", "train the 17-class CNN");
  ctrain->add_option("--data", tr.data, "dataset directory")->required();
  ctrain->add_option("--epochs", tr.epochs, "training epochs");
  ctrain->add_option("--seed", tr.seed, "init/shuffle seed");
  ctrain->add_option("--out", tr.out, "model file (.pqm)")->required();
  ctrain->add_option("--alpha", tr.adam.alpha, "Adam learning rate");
  ctrain->add_option("--batch", tr.adam.batch_size, "mini-batch size");
  ctrain->add_option("--arch", tr.arch, "default|minus|plus");

  AttackOpts atk;
  atk.eps = cfg_or("eps", atk.eps);
  atk.count = cfg_or("count", atk.count);
  atk.seed = cfg_or("seed", atk.seed);
  auto* cattack = app.add_subcommand("attack", "per-signal white-box attacks (fgsm/ssa)");
  cattack->add_option("--model", atk.model, "target model")->required();
  cattack->add_option("--data", atk.data, "dataset directory")->required();
  cattack->add_option("--method", atk.method, "fgsm|ssa");
  cattack->add_option("--eps", atk.eps, "FGSM step size");
  cattack->add_option("--count", atk.count, "test signals to attack (0 = all)");
  cattack->add_option("--seed", atk.seed, "subset seed");
  cattack->add_option("--out", atk.out, "adversarial CSV")->required();

  UniversalOpts uni;
  uni.xi = cfg_or("xi", uni.xi);
  uni.delta = cfg_or("delta", uni.delta);
  uni.subset = cfg_or("subset", uni.subset);
  uni.max_epochs = cfg_or("max-epochs", uni.max_epochs);
  uni.seed = cfg_or("seed", uni.seed);
  auto* cuni = app.add_subcommand("universal", "signal-agnostic universal perturbation");
  cuni->add_option("--model", uni.model, "target model")->required();
  cuni->add_option("--data", uni.data, "dataset directory")->required();
  cuni->add_option("--xi", uni.xi, "l2 budget");
  cuni->add_option("--delta", uni.delta, "terminate at fool rate > 1-delta");
  cuni->add_option("--subset", uni.subset, "training signals used");
  cuni->add_option("--max-epochs", uni.max_epochs, "passes over the subset");
  cuni->add_option("--seed", uni.seed, "subset/order seed");
  cuni->add_option("--out", uni.out, "universal perturbation JSON")->required();

  EvalOpts ev;
  auto* ceval = app.add_subcommand("eval", "metrics for an adversarial (or clean) set");
  ceval->add_option("--model", ev.model, "model to evaluate")->required();
  ceval->add_option("--adv", ev.adv, "adversarial CSV (omit for clean evaluation)");
  ceval->add_option("--data", ev.data, "dataset directory (enables rho_adv)");
  ceval->add_option("--kind", ev.kind, "attack kind recorded in the report");
  ceval->add_option("--out", ev.out, "output directory")->required();

  ProjectOpts pro;
  pro.n = cfg_or("n", pro.n);
  pro.perplexity = cfg_or("perplexity", pro.perplexity);
  pro.iterations = cfg_or("iterations", pro.iterations);
  pro.seed = cfg_or("seed", pro.seed);
  auto* cproj = app.add_subcommand("project", "t-SNE projection + neighborhood hit");
  cproj->add_option("--model", pro.model, "model (required for --source features)");
  cproj->add_option("--data", pro.data, "dataset directory")->required();
  cproj->add_option("--n", pro.n, "signals to project");
  cproj->add_option("--source", pro.source, "raw|features");
  cproj->add_option("--perplexity", pro.perplexity, "t-SNE perplexity");
  cproj->add_option("--iterations", pro.iterations, "t-SNE iterations");
  cproj->add_option("--seed", pro.seed, "subset/init seed");
  cproj->add_option("--out", pro.out, "projection CSV")->required();

  AdvTrainOpts adv;
  adv.epochs = cfg_or("epochs", adv.epochs);
  adv.mix = cfg_or("mix", adv.mix);
  adv.seed = cfg_or("seed", adv.seed);
  auto* cadv = app.add_subcommand("advtrain", "harden a model by adversarial training");
  cadv->add_option("--model", adv.model, "pre-trained model")->required();
  cadv->add_option("--data", adv.data, "dataset directory")->required();
  cadv->add_option("--epochs", adv.epochs, "adversarial retraining epochs");
  cadv->add_option("--mix", adv.mix, "adversarial fraction per batch");
  cadv->add_option("--seed", adv.seed, "shuffle seed");
  cadv->add_option("--out", adv.out, "hardened model file")->required();
  cadv->add_option("--trace", adv.trace_path, "per-epoch trace CSV");

  TransferOpts tf;
  tf.type = cfg_or("type", tf.type);
  tf.ratio = cfg_or("ratio", tf.ratio);
  tf.reps = cfg_or("reps", tf.reps);
  tf.seed = cfg_or("seed", tf.seed);
  auto* ctf = app.add_subcommand("transfer", "black-box transfer via substitute models");
  ctf->add_option("--target", tf.target, "target model")->required();
  ctf->add_option("--data", tf.data, "dataset directory")->required();
  ctf->add_option("--type", tf.type, "1 (same arch) or 2 (different arch)");
  ctf->add_option("--ratio", tf.ratio, "attacker data ratio denominator: 20|10|5");
  ctf->add_option("--method", tf.method, "ssa|saa");
  ctf->add_option("--reps", tf.reps, "independently seeded substitutes");
  ctf->add_option("--ssa-eval", tf.ssa_eval_count, "test signals per SSA transfer run");
  ctf->add_option("--saa-train", tf.saa_train_count, "attacker signals behind SAA");
  ctf->add_option("--saa-epochs", tf.saa_max_epochs, "SAA passes");
  ctf->add_option("--seed", tf.seed, "base seed");
  ctf->add_option("--out", tf.out, "report JSON")->required();

  TablesOpts tab;
  auto* ctab = app.add_subcommand("tables", "rebuild paper-style tables from reports");
  ctab->add_option("--reports", tab.reports, "report JSON files")->required();
  ctab->add_option("--table", tab.table, "comparison|saa_sweep|blackbox_acc|blackbox_ssa|"
                                         "blackbox_saa|advtrain|degrees|entropy")
      ->required();
  ctab->add_option("--out", tab.out, "output CSV")->required();

  ReproduceOpts rp;
  rp.scale = cfg_or("scale", rp.scale);
  rp.seed = cfg_or("seed", rp.seed);
  auto* crep = app.add_subcommand("reproduce", "end-to-end pipeline at a built-in scale");
  crep->add_option("--scale", rp.scale, "desk|smoke|paper");
  crep->add_option("--seed", rp.seed, "experiment seed");
  crep->add_option("--out", rp.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (threads <= 0) {
    if (const char* env = std::getenv("PQADV_THREADS")) threads = std::atoi(env);
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  try {
    if (cgen->parsed()) cmd_gen(gen);
    else if (ctrain->parsed()) cmd_train(tr);
    else if (cattack->parsed()) cmd_attack(atk);
    else if (cuni->parsed()) cmd_universal(uni);
    else if (ceval->parsed()) cmd_eval(ev);
    else if (cproj->parsed()) cmd_project(pro);
    else if (cadv->parsed()) cmd_advtrain(adv);
    else if (ctf->parsed()) cmd_transfer(tf);
    else if (ctab->parsed()) cmd_tables(tab);
    else if (crep->parsed()) cmd_reproduce(rp);
  } catch (const Error& e) {
    std::cerr << "pqadv: " << e.what() << "\n";
    return e.code() == Errc::ConfigInvalid ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "pqadv: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
