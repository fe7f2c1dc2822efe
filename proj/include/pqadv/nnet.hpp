#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pqadv/rng.hpp"
#include "pqadv/signal.hpp"

namespace pqadv {

enum class LayerKind { Conv1d, BatchNorm, Relu, MaxPool1d, Flatten, Dense };

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int out_channels = 0;  // conv1d
  int kernel_size = 0;   // conv1d / maxpool1d
  int stride = 1;        // conv1d / maxpool1d
  int out_features = 0;  // dense
};

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  int64_t size() const { return static_cast<int64_t>(v.size()); }
};

enum class Mode { Train, Eval };

/// Batch of activations, (sample, channel, position) row-major. Dense layers
/// use l == 1 and c == feature count.
struct Act {
  int n = 0, c = 0, l = 0;
  std::vector<double> v;

  Act() = default;
  Act(int n_, int c_, int l_) : n(n_), c(c_), l(l_), v(static_cast<size_t>(n_) * c_ * l_) {}
  double* sample(int i) { return v.data() + static_cast<int64_t>(i) * c * l; }
  const double* sample(int i) const { return v.data() + static_cast<int64_t>(i) * c * l; }
};

struct LayerState {
  LayerSpec spec;
  // conv/dense: {W, b}; batchnorm: {gamma, beta}; others: empty
  std::vector<Tensor> params;
  // batchnorm: {running_mean, running_var}
  std::vector<Tensor> stats;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  // resolved shapes
  int in_c = 0, in_l = 0, out_c = 0, out_l = 0, pad = 0;
};

struct NetworkModel {
  std::vector<LayerState> layers;
  int input_len = kSignalDim;
  int n_classes = kNumClasses;
  uint64_t init_seed = 0;
  std::string arch_id;

  int num_param_tensors() const;
};

/// Target architecture used throughout the experiments:
/// Conv(16,15,1)-BN-ReLU-MaxPool(4,4) / Conv(32,9,1)-BN-ReLU-MaxPool(4,4) /
/// Conv(64,7,1)-BN-ReLU-MaxPool(2,2) / Flatten / Dense(128)-ReLU / Dense(17).
std::vector<LayerSpec> default_architecture();
/// One conv block fewer / one extra, for substitute models.
std::vector<LayerSpec> architecture_minus_block();
std::vector<LayerSpec> architecture_plus_block();

/// Resolve shapes and initialize parameters (fan-in-scaled uniform; BN
/// gamma=1, beta=0). All parameter values are float32-representable so the
/// model file round-trips bit-exactly. Throws ShapeMismatch if the spec chain
/// is inconsistent or the final layer is not `n_classes` wide.
NetworkModel build_model(const std::vector<LayerSpec>& specs, int input_len, int n_classes,
                         uint64_t init_seed, const std::string& arch_id = "");

struct LayerCacheEntry {
  Act in;                                // conv/dense only (parameter gradients)
  std::vector<uint8_t> relu_mask;        // relu: input > 0
  std::vector<int> argmax;               // maxpool
  std::vector<double> mean, invstd;      // batchnorm
  Act xhat;                              // batchnorm
};

struct ForwardCache {
  Mode mode = Mode::Eval;
  std::vector<LayerCacheEntry> layer;
};

/// Per-tensor gradients aligned with model.layers[i].params[j].
struct GradSet {
  std::vector<std::vector<Tensor>> g;
};
GradSet make_grad_set(const NetworkModel& m);

/// Train-mode forward; updates BN running statistics.
Act nn_forward_train(NetworkModel& m, const Act& in, ForwardCache* cache);
/// Eval-mode forward; pure function of (model, input). Thread-safe.
Act nn_forward_eval(const NetworkModel& m, const Act& in, ForwardCache* cache = nullptr);
/// Backward through a cached forward; returns the input gradient. `pg` may be
/// null when only input gradients are needed. Thread-safe (caller owns cache
/// and gradient storage).
Act nn_backward(const NetworkModel& m, const ForwardCache& cache, const Act& grad_out,
                GradSet* pg);

std::vector<double> softmax(std::span<const double> logits);
/// Mean softmax cross-entropy over the batch; labels are class ids 1..K.
/// If `grad` is non-null it receives dLoss/dLogits (n x K).
double cross_entropy_loss(const Act& logits, const std::vector<int>& labels,
                          Act* grad = nullptr);

Act pack_batch(const std::vector<const std::vector<double>*>& xs);
Act pack_batch(const std::vector<std::vector<double>>& xs);

// --- spec-level operations ------------------------------------------------

std::vector<double> logits_eval(const NetworkModel& m, std::span<const double> x);
/// One row of logits per signal. Parallel across signals.
std::vector<std::vector<double>> logits_eval_batch(const NetworkModel& m,
                                                   const std::vector<std::vector<double>>& xs);

/// argmax class id (1-based); ties break to the lowest class id.
int argmax_class(std::span<const double> logits);
int predict(const NetworkModel& m, std::span<const double> x);
std::vector<int> predict_batch(const NetworkModel& m,
                               const std::vector<std::vector<double>>& xs);

struct LossGrad {
  double loss = 0.0;
  GradSet grads;
};
/// Train-mode loss + parameter gradients for one batch.
LossGrad loss_and_gradients(NetworkModel& m, const Act& batch, const std::vector<int>& labels);

/// Exact gradient of logit `class_id` w.r.t. the input signal (eval mode).
std::vector<double> input_gradient(const NetworkModel& m, std::span<const double> x,
                                   int class_id);
/// All K logit gradients at once; rows indexed by class id - 1.
std::vector<std::vector<double>> logit_jacobian(const NetworkModel& m,
                                                std::span<const double> x);
/// Logits and the full jacobian from a single forward pass.
struct LogitsJacobian {
  std::vector<double> logits;
  std::vector<std::vector<double>> jac;
};
LogitsJacobian logits_and_jacobian(const NetworkModel& m, std::span<const double> x);
/// Gradient of the training loss w.r.t. the input (eval mode), used by FGSM.
std::vector<double> loss_input_gradient(const NetworkModel& m, std::span<const double> x,
                                        int label);

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 64;
  int epochs = 15;
};

struct AdamState {
  std::vector<std::vector<Tensor>> m, v;
  int64_t t = 0;
};
AdamState make_adam_state(const NetworkModel& m);
/// One Adam update with bias correction; parameters are rounded through
/// float32 after the step so serialized models reproduce exactly.
void adam_step(NetworkModel& m, const GradSet& g, AdamState& st, const AdamConfig& cfg);

struct TrainTraceRow {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
};

struct TrainResult {
  std::vector<TrainTraceRow> trace;
};

/// Mini-batch Adam training with per-epoch shuffling; records eval-mode train
/// and test accuracy after each epoch.
TrainResult train(NetworkModel& m, const Dataset& data, const AdamConfig& cfg, uint64_t seed);

/// Post-activation output of the last hidden layer (input to the final dense).
std::vector<std::vector<double>> last_hidden_features(const NetworkModel& m,
                                                      const std::vector<std::vector<double>>& xs);

}  // namespace pqadv
