#include "pqadv/tsne.hpp"

#include <algorithm>
#include <cmath>

#include "pqadv/error.hpp"
#include "pqadv/kernels.hpp"
#include "pqadv/rng.hpp"

namespace pqadv {

namespace {

// Gaussian conditional distribution over row `i` of the squared-distance
// matrix at precision beta; returns (entropy in nats, probabilities).
double row_entropy(const double* d_row, int n, int i, double beta, std::vector<double>& p) {
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    p[j] = (j == i) ? 0.0 : std::exp(-d_row[j] * beta);
    sum += p[j];
  }
  if (sum <= 0.0) return 0.0;
  double h = 0.0;
  for (int j = 0; j < n; ++j) {
    if (p[j] <= 0.0) continue;
    h += beta * d_row[j] * p[j];
  }
  h = h / sum + std::log(sum);
  for (int j = 0; j < n; ++j) p[j] /= sum;
  return h;
}

}  // namespace

TsneResult tsne_project(const std::vector<std::vector<double>>& vectors,
                        const TsneConfig& cfg) {
  const int n = static_cast<int>(vectors.size());
  require(cfg.perplexity > 0.0, Errc::ParamOutOfRange, "perplexity must be positive");
  require(n >= static_cast<int>(3.0 * cfg.perplexity) && n >= 4, Errc::TooFewPoints,
          "need at least 3*perplexity points, got " + std::to_string(n));
  const int d = static_cast<int>(vectors[0].size());
  for (const auto& v : vectors)
    require(static_cast<int>(v.size()) == d, Errc::LengthMismatch, "ragged input vectors");

  std::vector<double> x(static_cast<size_t>(n) * d);
  for (int i = 0; i < n; ++i) std::copy(vectors[i].begin(), vectors[i].end(), x.begin() + static_cast<int64_t>(i) * d);
  std::vector<double> dist(static_cast<size_t>(n) * n);
  kernels::pairwise_sq_dists(x.data(), n, d, dist.data());

  // per-point bandwidths via binary search on the precision
  const double target_h = std::log(cfg.perplexity);
  std::vector<double> pcond(static_cast<size_t>(n) * n, 0.0);
  std::vector<int> failed(n, 0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    std::vector<double> p(n);
    const double* d_row = dist.data() + static_cast<int64_t>(i) * n;
    double beta = 1.0, beta_lo = 0.0, beta_hi = 0.0;
    bool has_lo = false, has_hi = false;
    double hdiff = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double h = row_entropy(d_row, n, i, beta, p);
      hdiff = h - target_h;
      if (std::abs(hdiff) < 1e-5) break;
      if (hdiff > 0.0) {  // entropy too high -> sharpen
        beta_lo = beta;
        has_lo = true;
        beta = has_hi ? (beta_lo + beta_hi) / 2.0 : beta * 2.0;
      } else {
        beta_hi = beta;
        has_hi = true;
        beta = has_lo ? (beta_lo + beta_hi) / 2.0 : beta / 2.0;
      }
    }
    if (!(std::abs(hdiff) < 1e-4) || !std::isfinite(beta)) failed[i] = 1;
    std::copy(p.begin(), p.end(), pcond.begin() + static_cast<int64_t>(i) * n);
  }
  for (int i = 0; i < n; ++i)
    require(!failed[i], Errc::PerplexityTooLarge,
            "bandwidth search cannot reach the target perplexity (degenerate or duplicate "
            "inputs at point " + std::to_string(i) + ")");

  // symmetrized joint affinities
  std::vector<double> P(static_cast<size_t>(n) * n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      P[static_cast<int64_t>(i) * n + j] =
          std::max((pcond[static_cast<int64_t>(i) * n + j] +
                    pcond[static_cast<int64_t>(j) * n + i]) /
                       (2.0 * n),
                   1e-12);

  Rng rng = Rng::stream(cfg.seed, "tsne");
  std::vector<double> y(static_cast<size_t>(n) * 2), vel(static_cast<size_t>(n) * 2, 0.0),
      gains(static_cast<size_t>(n) * 2, 1.0);
  for (auto& v : y) v = cfg.init_sigma * rng.gaussian();

  std::vector<double> w(static_cast<size_t>(n) * n), row_sum(n), grad(static_cast<size_t>(n) * 2);
  TsneResult res;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const double ex = iter < cfg.exaggeration_iters ? cfg.early_exaggeration : 1.0;
    const double momentum =
        iter < cfg.exaggeration_iters ? cfg.momentum_initial : cfg.momentum_final;

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      const double yi0 = y[2 * i], yi1 = y[2 * i + 1];
      double* w_row = w.data() + static_cast<int64_t>(i) * n;
#pragma omp simd reduction(+ : s)
      for (int j = 0; j < n; ++j) {
        const double d0 = yi0 - y[2 * j], d1 = yi1 - y[2 * j + 1];
        const double q = 1.0 / (1.0 + d0 * d0 + d1 * d1);
        w_row[j] = q;
        s += q;
      }
      w_row[i] = 0.0;
      row_sum[i] = s - 1.0;  // remove the self term
    }
    double sum_w = 0.0;
    for (int i = 0; i < n; ++i) sum_w += row_sum[i];
    sum_w = std::max(sum_w, 1e-12);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double g0 = 0.0, g1 = 0.0;
      const double yi0 = y[2 * i], yi1 = y[2 * i + 1];
      const double* w_row = w.data() + static_cast<int64_t>(i) * n;
      const double* p_row = P.data() + static_cast<int64_t>(i) * n;
      const double inv_sum = 1.0 / sum_w;
#pragma omp simd reduction(+ : g0, g1)
      for (int j = 0; j < n; ++j) {
        const double mult = (ex * p_row[j] - w_row[j] * inv_sum) * w_row[j];
        g0 += mult * (yi0 - y[2 * j]);
        g1 += mult * (yi1 - y[2 * j + 1]);
      }
      grad[2 * i] = 4.0 * g0;
      grad[2 * i + 1] = 4.0 * g1;
    }

    for (int t = 0; t < 2 * n; ++t) {
      const bool same_sign = (grad[t] > 0.0) == (vel[t] > 0.0);
      gains[t] = same_sign ? std::max(gains[t] * 0.8, 0.01) : gains[t] + 0.2;
      vel[t] = momentum * vel[t] - cfg.learning_rate * gains[t] * grad[t];
      y[t] += vel[t];
    }
    double mean0 = 0.0, mean1 = 0.0;
    for (int i = 0; i < n; ++i) {
      mean0 += y[2 * i];
      mean1 += y[2 * i + 1];
    }
    mean0 /= n;
    mean1 /= n;
    for (int i = 0; i < n; ++i) {
      y[2 * i] -= mean0;
      y[2 * i + 1] -= mean1;
    }

    if (iter >= cfg.iterations - cfg.kl_trace_last) {
      // KL(P || Q) on the un-exaggerated affinities
      std::vector<double> partial(n, 0.0);
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        const double* w_row = w.data() + static_cast<int64_t>(i) * n;
        const double* p_row = P.data() + static_cast<int64_t>(i) * n;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          const double q = std::max(w_row[j] / sum_w, 1e-12);
          s += p_row[j] * std::log(p_row[j] / q);
        }
        partial[i] = s;
      }
      double kl = 0.0;
      for (int i = 0; i < n; ++i) kl += partial[i];
      res.kl_trace.push_back(kl);
    }
  }

  res.points.resize(n);
  for (int i = 0; i < n; ++i) res.points[i] = {y[2 * i], y[2 * i + 1]};
  return res;
}

}  // namespace pqadv
