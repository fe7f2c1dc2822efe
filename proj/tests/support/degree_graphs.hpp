#pragma once

// Published class-confusion degree tables and their expected unweighted
// entropies, plus a helper that realizes a simple digraph with the given
// degree sequences so the entropy path can be exercised end to end.

#include <algorithm>
#include <array>
#include <vector>

#include "pqadv/error.hpp"
#include "pqadv/metrics.hpp"

namespace pqadv::testing {

struct DegreeCase {
  const char* name;
  std::array<int, 17> in_degree;
  std::array<int, 17> out_degree;
  double expect_unweighted_out;
  double expect_unweighted_in;
};

inline const std::array<DegreeCase, 3>& published_degree_cases() {
  static const std::array<DegreeCase, 3> cases = {{
      {"fgsm",
       {0, 0, 0, 0, 0, 0, 8, 0, 0, 0, 0, 0, 3, 11, 0, 0, 16},
       {2, 2, 2, 3, 2, 2, 2, 3, 2, 2, 2, 2, 2, 2, 3, 2, 3},
       19.34,
       12.04},
      {"ssa",
       {1, 2, 5, 1, 2, 3, 7, 5, 4, 1, 3, 3, 4, 4, 2, 1, 5},
       {4, 1, 1, 3, 5, 3, 1, 5, 5, 2, 3, 4, 3, 4, 3, 3, 3},
       25.06,
       23.53},
      {"saa",
       {0, 0, 0, 0, 0, 0, 6, 4, 1, 0, 0, 0, 6, 5, 0, 0, 16},
       {1, 2, 3, 3, 1, 1, 2, 3, 4, 1, 3, 3, 2, 2, 3, 3, 1},
       17.09,
       13.49},
  }};
  return cases;
}

/// Build a simple directed graph (no self-loops, no parallel edges) realizing
/// the given in/out degree sequences. Greedy Kleitman-Wang-style matching;
/// throws if the sequences cannot be realized this way.
inline ConfusionGraph realize_degree_graph(const std::array<int, 17>& in_degree,
                                           const std::array<int, 17>& out_degree) {
  const int k = 17;
  std::vector<int> out_left(out_degree.begin(), out_degree.end());
  std::vector<int> in_left(in_degree.begin(), in_degree.end());

  ConfusionGraph g;
  g.k = k;
  g.threshold = 1.0 / 17.0;
  std::vector<std::vector<bool>> used(k, std::vector<bool>(k, false));

  // fill receivers from the largest remaining in-degree down; for each,
  // take senders with the most remaining out-capacity
  while (true) {
    int recv = -1;
    for (int j = 0; j < k; ++j)
      if (in_left[j] > 0 && (recv < 0 || in_left[j] > in_left[recv])) recv = j;
    if (recv < 0) break;

    while (in_left[recv] > 0) {
      int send = -1;
      for (int i = 0; i < k; ++i) {
        if (i == recv || used[i][recv] || out_left[i] <= 0) continue;
        if (send < 0 || out_left[i] > out_left[send]) send = i;
      }
      require(send >= 0, Errc::ParamOutOfRange, "degree sequence not realizable greedily");
      used[send][recv] = true;
      out_left[send]--;
      in_left[recv]--;
      g.edges.push_back({send + 1, recv + 1, 0.5});
    }
  }
  for (int i = 0; i < k; ++i)
    require(out_left[i] == 0, Errc::ParamOutOfRange, "out-degree left over");

  const DegreeTable t = degree_table(g);
  for (int i = 0; i < k; ++i) {
    require(t.in_degree[i] == in_degree[i], Errc::ParamOutOfRange, "in-degree mismatch");
    require(t.out_degree[i] == out_degree[i], Errc::ParamOutOfRange, "out-degree mismatch");
  }
  return g;
}

}  // namespace pqadv::testing
