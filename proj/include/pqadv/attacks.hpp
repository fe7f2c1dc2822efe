#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pqadv/nnet.hpp"

namespace pqadv {

/// Read-only view of a multiclass model as seen by the attack algorithms:
/// logits, per-class input gradients and the training-loss input gradient.
/// Implementations must be safe to query concurrently.
class Classifier {
public:
  virtual ~Classifier() = default;
  virtual int num_classes() const = 0;
  virtual int input_dim() const = 0;
  virtual std::vector<double> logits(std::span<const double> x) const = 0;
  /// Rows indexed by class id - 1; default loops over input_gradient.
  virtual std::vector<std::vector<double>> jacobian(std::span<const double> x) const;
  /// Both at once; the network adapter serves them from one forward pass.
  virtual LogitsJacobian logits_and_jacobian(std::span<const double> x) const;
  virtual std::vector<double> input_gradient(std::span<const double> x, int class_id) const = 0;
  virtual std::vector<double> loss_gradient(std::span<const double> x, int label) const;

  int predict(std::span<const double> x) const { return argmax_class(logits(x)); }
};

/// Eval-mode adapter over a trained NetworkModel.
class NetClassifier : public Classifier {
public:
  explicit NetClassifier(const NetworkModel& m) : m_(&m) {}
  int num_classes() const override { return m_->n_classes; }
  int input_dim() const override { return m_->input_len; }
  std::vector<double> logits(std::span<const double> x) const override {
    return logits_eval(*m_, x);
  }
  std::vector<std::vector<double>> jacobian(std::span<const double> x) const override {
    return logit_jacobian(*m_, x);
  }
  LogitsJacobian logits_and_jacobian(std::span<const double> x) const override {
    return pqadv::logits_and_jacobian(*m_, x);
  }
  std::vector<double> input_gradient(std::span<const double> x, int class_id) const override {
    return pqadv::input_gradient(*m_, x, class_id);
  }
  std::vector<double> loss_gradient(std::span<const double> x, int label) const override {
    return loss_input_gradient(*m_, x, label);
  }
  const NetworkModel& model() const { return *m_; }

private:
  const NetworkModel* m_;
};

enum class AttackKind { Fgsm, Ssa, Saa };
const char* attack_kind_name(AttackKind k);

struct Perturbation {
  std::vector<double> r;
  double l2_norm = 0.0;
  double linf_norm = 0.0;
  int iterations = 0;
  AttackKind attack_kind = AttackKind::Fgsm;
};
Perturbation make_perturbation(std::vector<double> r, int iterations, AttackKind kind);

struct SsaConfig {
  int max_iter = 50;          // the boundary-projection loop has no natural cap
  double overshoot = 0.02;    // pushes the final point strictly across the boundary
  double grad_floor = 1e-10;  // below this every gradient difference is degenerate
};

enum class SsaStatus { Success, NotConverged, DegenerateGradient };
const char* ssa_status_name(SsaStatus s);

struct SsaResult {
  SsaStatus status = SsaStatus::NotConverged;
  std::vector<double> x_adv;
  Perturbation pert;
  int pred_before = 0;
  int pred_after = 0;
};

/// Signal-specific attack: iteratively project toward the nearest linearized
/// decision boundary (per-class gradient/logit differences), accumulate the
/// steps, then return x + (1+overshoot) * sum(r_j). Success requires the
/// returned signal's prediction to differ from the clean prediction.
SsaResult ssa_perturb(const Classifier& f, std::span<const double> x,
                      const SsaConfig& cfg = SsaConfig{});

struct FgsmResult {
  std::vector<double> x_adv;
  Perturbation pert;
  int pred_before = 0;
  int pred_after = 0;
};

/// x + eps * sign(d loss / d x) with the ground-truth label.
FgsmResult fgsm(const Classifier& f, std::span<const double> x, int true_label, double eps);

/// Euclidean projection onto the l2 ball of radius xi: v unchanged inside,
/// radially rescaled outside.
std::vector<double> project_l2_ball(std::span<const double> v, double xi);

struct UniversalPerturbation {
  std::vector<double> v;
  double xi = 0.0;
  double delta = 0.0;
  double training_fool_rate = 0.0;
  int epochs_used = 0;
};

struct SaaConfig {
  double xi = 1.0;
  double delta = 0.26;  // terminate once the training fooling rate exceeds 1 - delta
  int max_epochs = 10;
  uint64_t seed = 0;  // per-epoch visiting order
  SsaConfig ssa;
};

/// Signal-agnostic universal perturbation (sequential over X within an
/// epoch): for every signal still classified like its clean version, run the
/// signal-specific solver at x_i + v and project the updated v back onto the
/// xi-ball. Partial results are valid outputs.
UniversalPerturbation saa_universal(const Classifier& f,
                                    const std::vector<const std::vector<double>*>& X,
                                    const SaaConfig& cfg);
UniversalPerturbation saa_universal(const Classifier& f,
                                    const std::vector<std::vector<double>>& X,
                                    const SaaConfig& cfg);

/// Fraction of X whose prediction changes under +v (against the model's own
/// clean predictions, not ground truth).
double fooling_rate(const Classifier& f, const std::vector<const std::vector<double>*>& X,
                    std::span<const double> v);
double fooling_rate(const Classifier& f, const std::vector<std::vector<double>>& X,
                    std::span<const double> v);

}  // namespace pqadv
