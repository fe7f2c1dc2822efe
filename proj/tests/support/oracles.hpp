#pragma once

// Test-only oracles, independent of the implementation paths they check.

#include <cmath>
#include <vector>

#include "pqadv/attacks.hpp"
#include "pqadv/nnet.hpp"

namespace pqadv::testing {

/// Hash of the piecewise-linear region the forward pass landed in (ReLU sign
/// pattern plus maxpool routing). A central difference is only a valid
/// derivative sample when both probes stay in the same region.
inline uint64_t activation_signature(const NetworkModel& m, const ForwardCache& cache) {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&](uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  for (size_t li = 0; li < m.layers.size(); ++li) {
    const LayerKind kind = m.layers[li].spec.kind;
    const LayerCacheEntry& ce = cache.layer[li];
    if (kind == LayerKind::Relu) {
      for (uint8_t v : ce.relu_mask) mix(v ? 1 : 2);
    } else if (kind == LayerKind::MaxPool1d) {
      for (int a : ce.argmax) mix(static_cast<uint64_t>(a) + 3);
    }
  }
  return h;
}

/// Loss evaluated with a throwaway model copy so BN running-stat updates from
/// probe evaluations never leak into the model under test.
inline double probe_loss(const NetworkModel& m, const Act& batch,
                         const std::vector<int>& labels, Mode mode, uint64_t* sig) {
  NetworkModel copy = m;
  ForwardCache cache;
  Act logits = mode == Mode::Train ? nn_forward_train(copy, batch, &cache)
                                   : nn_forward_eval(copy, batch, &cache);
  if (sig) *sig = activation_signature(copy, cache);
  return cross_entropy_loss(logits, labels, nullptr);
}

struct FdWorst {
  double rel_err = 0.0;
  double analytic = 0.0;
  double numeric = 0.0;
  int64_t checked = 0;
  int64_t skipped = 0;  // probes that straddled a ReLU/maxpool kink
};

/// Central finite differences over every parameter of the model.
inline FdWorst fd_check_params(const NetworkModel& m, const Act& batch,
                               const std::vector<int>& labels, const GradSet& analytic,
                               Mode mode, double h = 1e-4) {
  FdWorst worst;
  NetworkModel probe = m;
  for (size_t li = 0; li < probe.layers.size(); ++li) {
    for (size_t pi = 0; pi < probe.layers[li].params.size(); ++pi) {
      std::vector<double>& theta = probe.layers[li].params[pi].v;
      for (size_t j = 0; j < theta.size(); ++j) {
        const double orig = theta[j];
        uint64_t sig_p = 0, sig_m = 0;
        theta[j] = orig + h;
        const double lp = probe_loss(probe, batch, labels, mode, &sig_p);
        theta[j] = orig - h;
        const double lm = probe_loss(probe, batch, labels, mode, &sig_m);
        theta[j] = orig;
        if (sig_p != sig_m) {
          worst.skipped++;
          continue;
        }
        worst.checked++;
        const double fd = (lp - lm) / (2.0 * h);
        const double an = analytic.g[li][pi].v[j];
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
        const double rel = std::abs(fd - an) / denom;
        if (rel > worst.rel_err) {
          worst.rel_err = rel;
          worst.analytic = an;
          worst.numeric = fd;
        }
      }
    }
  }
  return worst;
}

/// Central finite differences of logit `class_id` w.r.t. each input sample.
inline FdWorst fd_check_input(const NetworkModel& m, const std::vector<double>& x,
                              int class_id, const std::vector<double>& analytic,
                              double h = 1e-4) {
  FdWorst worst;
  std::vector<double> probe = x;
  Act in(1, 1, static_cast<int>(x.size()));
  auto eval = [&](uint64_t* sig) {
    std::copy(probe.begin(), probe.end(), in.v.begin());
    ForwardCache cache;
    Act logits = nn_forward_eval(m, in, &cache);
    if (sig) *sig = activation_signature(m, cache);
    return logits.v[class_id - 1];
  };
  for (size_t j = 0; j < probe.size(); ++j) {
    const double orig = probe[j];
    uint64_t sig_p = 0, sig_m = 0;
    probe[j] = orig + h;
    const double lp = eval(&sig_p);
    probe[j] = orig - h;
    const double lm = eval(&sig_m);
    probe[j] = orig;
    if (sig_p != sig_m) {
      worst.skipped++;
      continue;
    }
    worst.checked++;
    const double fd = (lp - lm) / (2.0 * h);
    const double an = analytic[j];
    const double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
    const double rel = std::abs(fd - an) / denom;
    if (rel > worst.rel_err) {
      worst.rel_err = rel;
      worst.analytic = an;
      worst.numeric = fd;
    }
  }
  return worst;
}

/// Plain affine multiclass model: logits = W x + b.
class AffineClassifier : public Classifier {
public:
  AffineClassifier(std::vector<std::vector<double>> w, std::vector<double> b)
      : w_(std::move(w)), b_(std::move(b)) {}

  int num_classes() const override { return static_cast<int>(w_.size()); }
  int input_dim() const override { return static_cast<int>(w_[0].size()); }

  std::vector<double> logits(std::span<const double> x) const override {
    std::vector<double> z(w_.size());
    for (size_t k = 0; k < w_.size(); ++k) {
      double acc = b_[k];
      for (size_t i = 0; i < w_[k].size(); ++i) acc += w_[k][i] * x[i];
      z[k] = acc;
    }
    return z;
  }

  std::vector<double> input_gradient(std::span<const double>, int class_id) const override {
    return w_[class_id - 1];
  }

private:
  std::vector<std::vector<double>> w_;
  std::vector<double> b_;
};

/// Exact minimum distance from x to any pairwise decision boundary of an
/// affine classifier, by enumeration over the non-predicted classes.
inline double affine_min_boundary_distance(const AffineClassifier& f,
                                           const std::vector<double>& x) {
  const auto z = f.logits(x);
  const int pred = argmax_class(z);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= f.num_classes(); ++k) {
    if (k == pred) continue;
    const auto wk = f.input_gradient(x, k);
    const auto wp = f.input_gradient(x, pred);
    double wnorm2 = 0.0;
    for (size_t i = 0; i < wk.size(); ++i) {
      const double d = wk[i] - wp[i];
      wnorm2 += d * d;
    }
    if (wnorm2 <= 0.0) continue;
    best = std::min(best, std::abs(z[k - 1] - z[pred - 1]) / std::sqrt(wnorm2));
  }
  return best;
}

}  // namespace pqadv::testing
