#pragma once

#include <array>
#include <vector>

#include "pqadv/nnet.hpp"

namespace pqadv {

/// Row = reference class (ground truth for clean evaluation, the model's
/// clean prediction for attacked sets), column = predicted class.
struct ConfusionMatrix {
  int k = kNumClasses;
  std::vector<int64_t> counts;  // k*k row-major

  int64_t at(int ref, int pred) const { return counts[(ref - 1) * k + (pred - 1)]; }
  /// Row-stochastic; all-zero rows stay zero.
  std::vector<double> normalized() const;
};

ConfusionMatrix confusion_matrix(const NetworkModel& m,
                                 const std::vector<std::vector<double>>& signals,
                                 const std::vector<int>& reference_labels);
ConfusionMatrix confusion_matrix_from_predictions(const std::vector<int>& reference_labels,
                                                  const std::vector<int>& predictions, int k);

struct ConfusionGraph {
  struct Edge {
    int from = 0, to = 0;  // class ids
    double weight = 0.0;   // in (0, 1]
  };
  int k = kNumClasses;
  double threshold = 0.0;
  std::vector<Edge> edges;  // no self-loops; every weight > threshold
};

/// Edge i->j kept iff i != j and normalized[i][j] > threshold
/// (default threshold: chance level 1/17).
ConfusionGraph confusion_graph(const ConfusionMatrix& m, double threshold = 1.0 / 17.0);

struct DegreeTable {
  std::vector<int> in_degree, out_degree;  // index = class id - 1
};
DegreeTable degree_table(const ConfusionGraph& g);

enum class Direction { In, Out };

/// Base-2 entropy of the edge-weight distribution at one node. Unweighted
/// treats all weights as 1, giving log2(degree); isolated nodes score 0.
double node_entropy(const ConfusionGraph& g, int node, Direction dir, bool weighted);
/// Sum of node entropies over all nodes.
double graph_entropy(const ConfusionGraph& g, Direction dir, bool weighted);

/// Fraction of index-aligned pairs whose predictions differ.
double misclassification_rate(const NetworkModel& m,
                              const std::vector<std::vector<double>>& clean,
                              const std::vector<std::vector<double>>& adv);
double misclassification_rate_from_predictions(const std::vector<int>& clean_preds,
                                               const std::vector<int>& adv_preds);

/// Mean of ||r||/||x|| over the evaluated pairs.
double average_robustness(const std::vector<std::vector<double>>& xs,
                          const std::vector<std::vector<double>>& rs);

/// Post-activation outputs of the last hidden layer, one row per signal.
std::vector<std::vector<double>> extract_features(const NetworkModel& m,
                                                  const std::vector<std::vector<double>>& xs);

/// Mean fraction of each point's k nearest Euclidean neighbours (self
/// excluded, distance ties broken by lower index) sharing its label.
double neighborhood_hit(const std::vector<std::array<double, 2>>& points,
                        const std::vector<int>& labels, int k);

}  // namespace pqadv
