#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pqadv/error.hpp"
#include "pqadv/metrics.hpp"
#include "pqadv/rng.hpp"
#include "support/degree_graphs.hpp"

using namespace pqadv;
using namespace pqadv::testing;

TEST_CASE("confusion matrix counts match a hand enumeration") {
  // 3-class toy: reference labels vs predictions
  const std::vector<int> ref = {1, 1, 1, 2, 2, 3, 3, 3, 3};
  const std::vector<int> pred = {1, 2, 1, 2, 2, 3, 1, 3, 3};
  const ConfusionMatrix m = confusion_matrix_from_predictions(ref, pred, 3);
  CHECK(m.at(1, 1) == 2);
  CHECK(m.at(1, 2) == 1);
  CHECK(m.at(2, 2) == 2);
  CHECK(m.at(3, 1) == 1);
  CHECK(m.at(3, 3) == 3);
  const auto norm = m.normalized();
  CHECK(norm[0] == doctest::Approx(2.0 / 3.0));
  CHECK(norm[8] == doctest::Approx(0.75));
  for (int r = 0; r < 3; ++r) {
    double row = 0.0;
    for (int c = 0; c < 3; ++c) row += norm[r * 3 + c];
    CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("a perfect classifier yields the identity matrix and an empty graph") {
  std::vector<int> labels;
  for (int c = 1; c <= 17; ++c)
    for (int rep = 0; rep < 3; ++rep) labels.push_back(c);
  const ConfusionMatrix m = confusion_matrix_from_predictions(labels, labels, 17);
  const auto norm = m.normalized();
  for (int r = 0; r < 17; ++r)
    for (int c = 0; c < 17; ++c) CHECK(norm[r * 17 + c] == (r == c ? 1.0 : 0.0));

  const ConfusionGraph g = confusion_graph(m);
  CHECK(g.edges.empty());
  const DegreeTable t = degree_table(g);
  for (int i = 0; i < 17; ++i) {
    CHECK(t.in_degree[i] == 0);
    CHECK(t.out_degree[i] == 0);
  }
  CHECK(graph_entropy(g, Direction::Out, false) == 0.0);
}

TEST_CASE("graph edges require strictly more than the threshold") {
  ConfusionMatrix m;
  m.k = 3;
  m.counts = {8, 1, 1,   // normalized row: .8 .1 .1
              0, 10, 0,  //
              5, 0, 5};
  const ConfusionGraph g = confusion_graph(m, 0.1);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].from == 3);
  CHECK(g.edges[0].to == 1);
  CHECK(g.edges[0].weight == doctest::Approx(0.5));
  CHECK_THROWS_AS(confusion_graph(m, 1.0), Error);
}

TEST_CASE("node entropy in bits") {
  ConfusionGraph g;
  g.k = 4;
  g.edges = {{1, 2, 0.3}, {3, 1, 0.2}, {3, 2, 0.2}, {4, 1, 0.1}, {4, 2, 0.4}, {4, 3, 0.25}};

  // single outgoing edge
  CHECK(node_entropy(g, 1, Direction::Out, false) == 0.0);
  CHECK(node_entropy(g, 1, Direction::Out, true) == 0.0);
  // two equal-weight edges: one bit either way
  CHECK(node_entropy(g, 3, Direction::Out, false) == doctest::Approx(1.0));
  CHECK(node_entropy(g, 3, Direction::Out, true) == doctest::Approx(1.0));
  // unweighted degree-3 node
  CHECK(node_entropy(g, 4, Direction::Out, false) == doctest::Approx(std::log2(3.0)));
  // weighted never exceeds the uniform bound
  CHECK(node_entropy(g, 4, Direction::Out, true) <= std::log2(3.0));
  // isolated in the out direction
  CHECK(node_entropy(g, 2, Direction::Out, false) == 0.0);
  // in-direction picks up the incoming edges
  CHECK(node_entropy(g, 2, Direction::In, false) == doctest::Approx(std::log2(3.0)));

  const DegreeTable t = degree_table(g);
  int in_sum = 0, out_sum = 0;
  for (int i = 0; i < 4; ++i) {
    in_sum += t.in_degree[i];
    out_sum += t.out_degree[i];
  }
  CHECK(in_sum == static_cast<int>(g.edges.size()));
  CHECK(out_sum == static_cast<int>(g.edges.size()));
}

TEST_CASE("published degree tables reproduce the published entropies in base 2") {
  for (const DegreeCase& c : published_degree_cases()) {
    CAPTURE(c.name);
    const ConfusionGraph g = realize_degree_graph(c.in_degree, c.out_degree);
    CHECK(graph_entropy(g, Direction::Out, false) ==
          doctest::Approx(c.expect_unweighted_out).epsilon(0.005 / c.expect_unweighted_out));
    CHECK(graph_entropy(g, Direction::In, false) ==
          doctest::Approx(c.expect_unweighted_in).epsilon(0.005 / c.expect_unweighted_in));
  }
}

TEST_CASE("weighted entropy equals unweighted under equal weights") {
  Rng rng(71);
  ConfusionGraph g;
  g.k = 17;
  for (int i = 1; i <= 17; ++i)
    for (int j = 1; j <= 17; ++j)
      if (i != j && rng.uniform() < 0.2) g.edges.push_back({i, j, 0.25});
  for (int node = 1; node <= 17; ++node) {
    CHECK(node_entropy(g, node, Direction::Out, true) ==
          doctest::Approx(node_entropy(g, node, Direction::Out, false)).epsilon(1e-12));
    CHECK(node_entropy(g, node, Direction::In, true) ==
          doctest::Approx(node_entropy(g, node, Direction::In, false)).epsilon(1e-12));
  }
}

TEST_CASE("misclassification rate on aligned prediction vectors") {
  const std::vector<int> clean = {1, 2, 3, 4};
  CHECK(misclassification_rate_from_predictions(clean, clean) == 0.0);
  const std::vector<int> adv = {1, 2, 7, 4};
  CHECK(misclassification_rate_from_predictions(clean, adv) == doctest::Approx(0.25));
  const std::vector<int> short_vec = {1, 2};
  CHECK_THROWS_AS(misclassification_rate_from_predictions(clean, short_vec), Error);
}

TEST_CASE("average robustness is the mean norm ratio") {
  CHECK(average_robustness({{3.0, 4.0}}, {{0.0, 0.0}}) == 0.0);
  CHECK(average_robustness({{3.0, 4.0}}, {{0.3, 0.4}}) == doctest::Approx(0.1));
  CHECK_THROWS_AS(average_robustness({{0.0, 0.0}}, {{0.3, 0.4}}), Error);
  CHECK_THROWS_AS(average_robustness({}, {}), Error);
}

TEST_CASE("neighborhood hit on hand geometries") {
  // all same label
  std::vector<std::array<double, 2>> pts;
  std::vector<int> labels;
  Rng rng(72);
  for (int i = 0; i < 10; ++i) {
    pts.push_back({rng.uniform(), rng.uniform()});
    labels.push_back(4);
  }
  CHECK(neighborhood_hit(pts, labels, 5) == 1.0);

  // 6 points, 3+3 labels: every 5-NN set holds exactly 2 same-label points
  std::vector<std::array<double, 2>> six = {{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}};
  const std::vector<int> two_labels = {1, 1, 1, 2, 2, 2};
  CHECK(neighborhood_hit(six, two_labels, 5) == doctest::Approx(0.4));

  CHECK_THROWS_AS(neighborhood_hit(six, two_labels, 6), Error);
}

TEST_CASE("neighborhood hit is invariant under rigid motion") {
  Rng rng(73);
  std::vector<std::array<double, 2>> pts;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    pts.push_back({rng.gaussian(), rng.gaussian()});
    labels.push_back(rng.range_int(1, 3));
  }
  const double nh = neighborhood_hit(pts, labels, 5);
  const double c = std::cos(0.7), s = std::sin(0.7);
  std::vector<std::array<double, 2>> moved;
  for (const auto& p : pts)
    moved.push_back({c * p[0] - s * p[1] + 3.25, s * p[0] + c * p[1] - 1.5});
  CHECK(neighborhood_hit(moved, labels, 5) == nh);
}
