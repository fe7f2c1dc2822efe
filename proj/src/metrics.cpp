#include "pqadv/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pqadv/error.hpp"
#include "pqadv/kernels.hpp"

namespace pqadv {

std::vector<double> ConfusionMatrix::normalized() const {
  std::vector<double> out(counts.size(), 0.0);
  for (int i = 0; i < k; ++i) {
    int64_t row = 0;
    for (int j = 0; j < k; ++j) row += counts[i * k + j];
    if (row == 0) continue;
    for (int j = 0; j < k; ++j)
      out[i * k + j] = static_cast<double>(counts[i * k + j]) / static_cast<double>(row);
  }
  return out;
}

ConfusionMatrix confusion_matrix_from_predictions(const std::vector<int>& reference_labels,
                                                  const std::vector<int>& predictions, int k) {
  require(reference_labels.size() == predictions.size(), Errc::LengthMismatch,
          "reference/prediction size mismatch");
  ConfusionMatrix m;
  m.k = k;
  m.counts.assign(static_cast<size_t>(k) * k, 0);
  for (size_t i = 0; i < predictions.size(); ++i) {
    const int r = reference_labels[i], p = predictions[i];
    require(r >= 1 && r <= k && p >= 1 && p <= k, Errc::ParamOutOfRange,
            "label outside 1.." + std::to_string(k));
    m.counts[(r - 1) * k + (p - 1)]++;
  }
  return m;
}

ConfusionMatrix confusion_matrix(const NetworkModel& m,
                                 const std::vector<std::vector<double>>& signals,
                                 const std::vector<int>& reference_labels) {
  return confusion_matrix_from_predictions(reference_labels, predict_batch(m, signals),
                                           m.n_classes);
}

ConfusionGraph confusion_graph(const ConfusionMatrix& m, double threshold) {
  require(threshold >= 0.0 && threshold < 1.0, Errc::ParamOutOfRange,
          "threshold must be in [0,1)");
  ConfusionGraph g;
  g.k = m.k;
  g.threshold = threshold;
  const std::vector<double> norm = m.normalized();
  for (int i = 0; i < m.k; ++i)
    for (int j = 0; j < m.k; ++j) {
      if (i == j) continue;
      const double w = norm[i * m.k + j];
      if (w > threshold) g.edges.push_back({i + 1, j + 1, w});
    }
  return g;
}

DegreeTable degree_table(const ConfusionGraph& g) {
  DegreeTable t;
  t.in_degree.assign(g.k, 0);
  t.out_degree.assign(g.k, 0);
  for (const auto& e : g.edges) {
    t.out_degree[e.from - 1]++;
    t.in_degree[e.to - 1]++;
  }
  return t;
}

double node_entropy(const ConfusionGraph& g, int node, Direction dir, bool weighted) {
  require(node >= 1 && node <= g.k, Errc::ParamOutOfRange, "node outside graph");
  std::vector<double> w;
  for (const auto& e : g.edges) {
    const int endpoint = dir == Direction::Out ? e.from : e.to;
    if (endpoint == node) w.push_back(weighted ? e.weight : 1.0);
  }
  if (w.empty()) return 0.0;
  double sum = 0.0;
  for (double x : w) sum += x;
  double h = 0.0;
  for (double x : w) {
    const double p = x / sum;
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

double graph_entropy(const ConfusionGraph& g, Direction dir, bool weighted) {
  double h = 0.0;
  for (int node = 1; node <= g.k; ++node) h += node_entropy(g, node, dir, weighted);
  return h;
}

double misclassification_rate_from_predictions(const std::vector<int>& clean_preds,
                                               const std::vector<int>& adv_preds) {
  require(clean_preds.size() == adv_preds.size(), Errc::LengthMismatch,
          "clean/adversarial size mismatch");
  require(!clean_preds.empty(), Errc::EmptySet, "empty evaluation set");
  int64_t flips = 0;
  for (size_t i = 0; i < clean_preds.size(); ++i)
    if (clean_preds[i] != adv_preds[i]) ++flips;
  return static_cast<double>(flips) / static_cast<double>(clean_preds.size());
}

double misclassification_rate(const NetworkModel& m,
                              const std::vector<std::vector<double>>& clean,
                              const std::vector<std::vector<double>>& adv) {
  require(clean.size() == adv.size(), Errc::LengthMismatch, "clean/adversarial size mismatch");
  return misclassification_rate_from_predictions(predict_batch(m, clean),
                                                 predict_batch(m, adv));
}

double average_robustness(const std::vector<std::vector<double>>& xs,
                          const std::vector<std::vector<double>>& rs) {
  require(xs.size() == rs.size(), Errc::LengthMismatch, "signal/perturbation size mismatch");
  require(!xs.empty(), Errc::EmptySet, "empty evaluation set");
  double sum = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double nx = l2_norm(xs[i]);
    require(nx > 0.0, Errc::ZeroSignal, "zero-norm signal at index " + std::to_string(i));
    sum += l2_norm(rs[i]) / nx;
  }
  return sum / static_cast<double>(xs.size());
}

std::vector<std::vector<double>> extract_features(const NetworkModel& m,
                                                  const std::vector<std::vector<double>>& xs) {
  return last_hidden_features(m, xs);
}

double neighborhood_hit(const std::vector<std::array<double, 2>>& points,
                        const std::vector<int>& labels, int k) {
  require(points.size() == labels.size(), Errc::LengthMismatch, "points/labels size mismatch");
  const int n = static_cast<int>(points.size());
  require(n > k, Errc::TooFewPoints,
          "need more than k=" + std::to_string(k) + " points, got " + std::to_string(n));

  std::vector<double> hits(n, 0.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> d;
    d.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = points[i][0] - points[j][0];
      const double dy = points[i][1] - points[j][1];
      d.emplace_back(dx * dx + dy * dy, j);
    }
    std::partial_sort(d.begin(), d.begin() + k, d.end());  // pair ordering breaks ties by index
    int same = 0;
    for (int t = 0; t < k; ++t)
      if (labels[d[t].second] == labels[i]) ++same;
    hits[i] = static_cast<double>(same) / static_cast<double>(k);
  }
  double total = 0.0;
  for (double h : hits) total += h;
  return total / static_cast<double>(n);
}

}  // namespace pqadv
