#include "pqadv/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pqadv/error.hpp"

namespace pqadv {

std::vector<std::vector<double>> Classifier::jacobian(std::span<const double> x) const {
  std::vector<std::vector<double>> rows(num_classes());
  for (int k = 1; k <= num_classes(); ++k) rows[k - 1] = input_gradient(x, k);
  return rows;
}

LogitsJacobian Classifier::logits_and_jacobian(std::span<const double> x) const {
  return {logits(x), jacobian(x)};
}

std::vector<double> Classifier::loss_gradient(std::span<const double> x, int label) const {
  // d CE / dx = J^T (softmax(z) - onehot(label))
  const std::vector<double> p = softmax(logits(x));
  const auto jac = jacobian(x);
  std::vector<double> g(input_dim(), 0.0);
  for (int k = 0; k < num_classes(); ++k) {
    const double w = p[k] - (k == label - 1 ? 1.0 : 0.0);
    for (int i = 0; i < input_dim(); ++i) g[i] += w * jac[k][i];
  }
  return g;
}

const char* attack_kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::Fgsm: return "fgsm";
    case AttackKind::Ssa: return "ssa";
    case AttackKind::Saa: return "saa";
  }
  return "?";
}

const char* ssa_status_name(SsaStatus s) {
  switch (s) {
    case SsaStatus::Success: return "success";
    case SsaStatus::NotConverged: return "not_converged";
    case SsaStatus::DegenerateGradient: return "degenerate_gradient";
  }
  return "?";
}

Perturbation make_perturbation(std::vector<double> r, int iterations, AttackKind kind) {
  Perturbation p;
  p.l2_norm = l2_norm(r);
  p.linf_norm = linf_norm(r);
  p.r = std::move(r);
  p.iterations = iterations;
  p.attack_kind = kind;
  return p;
}

SsaResult ssa_perturb(const Classifier& f, std::span<const double> x, const SsaConfig& cfg) {
  const int dim = f.input_dim();
  const int K = f.num_classes();
  require(static_cast<int>(x.size()) == dim, Errc::ShapeMismatch, "bad input length");

  SsaResult res;
  std::vector<double> xi(x.begin(), x.end());     // current iterate
  std::vector<double> r_sum(dim, 0.0);            // accumulated perturbation
  const int pred0 = f.predict(x);
  res.pred_before = pred0;

  int iter = 0;
  bool flipped = false;
  while (iter < cfg.max_iter) {
    const LogitsJacobian lj = f.logits_and_jacobian(xi);
    const std::vector<double>& z = lj.logits;
    if (argmax_class(z) != pred0) {
      flipped = true;
      break;
    }
    const auto& jac = lj.jac;
    const std::vector<double>& g_pred = jac[pred0 - 1];

    // nearest linearized boundary over all non-predicted classes
    int best_k = -1;
    double best_ratio = 0.0, best_fk = 0.0, best_wnorm2 = 0.0;
    bool any_usable = false;
    for (int k = 1; k <= K; ++k) {
      if (k == pred0) continue;
      double wnorm2 = 0.0;
      for (int i = 0; i < dim; ++i) {
        const double d = jac[k - 1][i] - g_pred[i];
        wnorm2 += d * d;
      }
      const double wnorm = std::sqrt(wnorm2);
      if (!(wnorm >= cfg.grad_floor) || !std::isfinite(wnorm)) continue;
      const double fk = z[k - 1] - z[pred0 - 1];
      if (!std::isfinite(fk)) continue;
      const double ratio = std::abs(fk) / wnorm;
      if (!any_usable || ratio < best_ratio) {
        any_usable = true;
        best_ratio = ratio;
        best_k = k;
        best_fk = fk;
        best_wnorm2 = wnorm2;
      }
    }
    if (!any_usable) {
      res.status = SsaStatus::DegenerateGradient;
      res.x_adv.assign(x.begin(), x.end());
      res.pert = make_perturbation(std::vector<double>(dim, 0.0), iter, AttackKind::Ssa);
      res.pred_after = pred0;
      return res;
    }

    // best_ratio is the step length; numerically on the boundary already,
    // so the overshoot below is what carries the point across
    if (best_ratio <= 1e-12 * std::max(1.0, l2_norm(xi))) break;

    const double scale = std::abs(best_fk) / best_wnorm2;
    for (int i = 0; i < dim; ++i) {
      const double ri = scale * (jac[best_k - 1][i] - g_pred[i]);
      r_sum[i] += ri;
      xi[i] += ri;
    }
    ++iter;
  }

  auto finish = [&](double factor, SsaStatus status_if_flipped) {
    std::vector<double> r(dim);
    std::vector<double> x_adv(dim);
    for (int i = 0; i < dim; ++i) {
      r[i] = factor * r_sum[i];
      x_adv[i] = x[i] + r[i];
    }
    const int pred_after = f.predict(x_adv);
    if (pred_after != pred0) {
      res.status = status_if_flipped;
      res.x_adv = std::move(x_adv);
      res.pert = make_perturbation(std::move(r), iter, AttackKind::Ssa);
      res.pred_after = pred_after;
      return true;
    }
    return false;
  };

  if (finish(1.0 + cfg.overshoot, SsaStatus::Success)) return res;
  // the un-overshot sum flips whenever the loop exited via a label change
  if (flipped && finish(1.0, SsaStatus::Success)) return res;

  res.status = SsaStatus::NotConverged;
  res.x_adv.assign(x.begin(), x.end());
  for (int i = 0; i < dim; ++i) res.x_adv[i] += (1.0 + cfg.overshoot) * r_sum[i];
  std::vector<double> r(dim);
  for (int i = 0; i < dim; ++i) r[i] = (1.0 + cfg.overshoot) * r_sum[i];
  res.pert = make_perturbation(std::move(r), iter, AttackKind::Ssa);
  res.pred_after = f.predict(res.x_adv);
  return res;
}

FgsmResult fgsm(const Classifier& f, std::span<const double> x, int true_label, double eps) {
  require(eps >= 0.0, Errc::ParamOutOfRange, "fgsm eps must be >= 0");
  const int dim = f.input_dim();
  require(static_cast<int>(x.size()) == dim, Errc::ShapeMismatch, "bad input length");

  FgsmResult res;
  res.pred_before = f.predict(x);
  const std::vector<double> g = f.loss_gradient(x, true_label);
  std::vector<double> r(dim);
  for (int i = 0; i < dim; ++i) {
    const double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
    r[i] = eps * s;
  }
  res.x_adv.assign(x.begin(), x.end());
  for (int i = 0; i < dim; ++i) res.x_adv[i] += r[i];
  res.pred_after = f.predict(res.x_adv);
  res.pert = make_perturbation(std::move(r), 1, AttackKind::Fgsm);
  return res;
}

std::vector<double> project_l2_ball(std::span<const double> v, double xi) {
  require(xi > 0.0, Errc::ParamOutOfRange, "xi must be positive");
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  const double norm = std::sqrt(norm2);
  std::vector<double> out(v.begin(), v.end());
  if (norm > xi) {
    const double s = xi / norm;
    for (double& x : out) x *= s;
  }
  return out;
}

namespace {

std::vector<int> clean_predictions(const Classifier& f,
                                   const std::vector<const std::vector<double>*>& X) {
  std::vector<int> preds(X.size());
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < static_cast<int64_t>(X.size()); ++i)
    preds[i] = f.predict(*X[i]);
  return preds;
}

double fooling_rate_impl(const Classifier& f,
                         const std::vector<const std::vector<double>*>& X,
                         std::span<const double> v, const std::vector<int>& clean_preds) {
  int64_t fooled = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : fooled)
  for (int64_t i = 0; i < static_cast<int64_t>(X.size()); ++i) {
    std::vector<double> xv(*X[i]);
    for (size_t j = 0; j < xv.size(); ++j) xv[j] += v[j];
    if (f.predict(xv) != clean_preds[i]) ++fooled;
  }
  return static_cast<double>(fooled) / static_cast<double>(X.size());
}

}  // namespace

UniversalPerturbation saa_universal(const Classifier& f,
                                    const std::vector<const std::vector<double>*>& X,
                                    const SaaConfig& cfg) {
  require(!X.empty(), Errc::EmptySet, "saa_universal needs a nonempty signal set");
  require(cfg.delta > 0.0 && cfg.delta < 1.0, Errc::ParamOutOfRange, "delta in (0,1)");
  const int dim = f.input_dim();

  const std::vector<int> clean_preds = clean_predictions(f, X);
  const Rng order_base = Rng::stream(cfg.seed, "attack");

  UniversalPerturbation up;
  up.xi = cfg.xi;
  up.delta = cfg.delta;
  up.v.assign(dim, 0.0);
  up.training_fool_rate = 0.0;

  std::vector<int> order(X.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> xv(dim);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng rng = order_base.split(static_cast<uint64_t>(epoch));
    rng.shuffle(order);

    // sequential by construction: every step reads the v left by the previous
    for (int idx : order) {
      const std::vector<double>& x = *X[idx];
      for (int i = 0; i < dim; ++i) xv[i] = x[i] + up.v[i];
      if (f.predict(xv) != clean_preds[idx]) continue;
      const SsaResult inner = ssa_perturb(f, xv, cfg.ssa);
      if (inner.status != SsaStatus::Success) continue;  // skip this signal for the epoch
      std::vector<double> cand(dim);
      for (int i = 0; i < dim; ++i) cand[i] = up.v[i] + inner.pert.r[i];
      up.v = project_l2_ball(cand, cfg.xi);
    }

    up.epochs_used = epoch;
    up.training_fool_rate = fooling_rate_impl(f, X, up.v, clean_preds);
    if (up.training_fool_rate > 1.0 - cfg.delta) break;
  }
  return up;
}

UniversalPerturbation saa_universal(const Classifier& f,
                                    const std::vector<std::vector<double>>& X,
                                    const SaaConfig& cfg) {
  std::vector<const std::vector<double>*> ptrs;
  ptrs.reserve(X.size());
  for (const auto& x : X) ptrs.push_back(&x);
  return saa_universal(f, ptrs, cfg);
}

double fooling_rate(const Classifier& f, const std::vector<const std::vector<double>*>& X,
                    std::span<const double> v) {
  require(!X.empty(), Errc::EmptySet, "fooling_rate needs a nonempty signal set");
  return fooling_rate_impl(f, X, v, clean_predictions(f, X));
}

double fooling_rate(const Classifier& f, const std::vector<std::vector<double>>& X,
                    std::span<const double> v) {
  std::vector<const std::vector<double>*> ptrs;
  ptrs.reserve(X.size());
  for (const auto& x : X) ptrs.push_back(&x);
  return fooling_rate(f, ptrs, v);
}

}  // namespace pqadv
