#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pqadv/error.hpp"
#include "pqadv/metrics.hpp"
#include "pqadv/rng.hpp"
#include "pqadv/tsne.hpp"

using namespace pqadv;

TEST_CASE("too few points for the requested perplexity") {
  std::vector<std::vector<double>> x(20, std::vector<double>(3, 0.5));
  TsneConfig cfg;
  cfg.perplexity = 30.0;
  CHECK_THROWS_AS(tsne_project(x, cfg), Error);
}

TEST_CASE("identical points cannot satisfy the bandwidth search") {
  std::vector<std::vector<double>> x(60, std::vector<double>(4, 1.0));
  TsneConfig cfg;
  cfg.perplexity = 10.0;
  cfg.iterations = 10;
  try {
    tsne_project(x, cfg);
    FAIL("expected PerplexityTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PerplexityTooLarge);
  }
}

TEST_CASE("well-separated clusters stay separated and the objective settles") {
  Rng rng = Rng::stream(99, "tsne");
  std::vector<std::vector<double>> x;
  std::vector<int> labels;
  for (int cluster = 0; cluster < 2; ++cluster) {
    for (int i = 0; i < 300; ++i) {
      std::vector<double> v(10);
      for (auto& e : v) e = rng.gaussian() * 0.5 + (cluster == 0 ? -8.0 : 8.0);
      x.push_back(std::move(v));
      labels.push_back(cluster + 1);
    }
  }
  TsneConfig cfg;
  cfg.perplexity = 30.0;
  cfg.iterations = 1000;
  cfg.seed = 7;
  const TsneResult res = tsne_project(x, cfg);
  REQUIRE(res.points.size() == 600);

  CHECK(neighborhood_hit(res.points, labels, 5) > 0.95);

  REQUIRE(res.kl_trace.size() == 100);
  for (size_t i = 1; i < res.kl_trace.size(); ++i) CHECK(res.kl_trace[i] < res.kl_trace[i - 1]);

  // the two clusters are linearly separable along the axis joining their means
  double m0x = 0.0, m0y = 0.0, m1x = 0.0, m1y = 0.0;
  for (int i = 0; i < 300; ++i) {
    m0x += res.points[i][0];
    m0y += res.points[i][1];
    m1x += res.points[300 + i][0];
    m1y += res.points[300 + i][1];
  }
  m0x /= 300; m0y /= 300; m1x /= 300; m1y /= 300;
  const double dx = m1x - m0x, dy = m1y - m0y;
  const double mid = 0.5 * (dx * (m0x + m1x) + dy * (m0y + m1y));
  int misplaced = 0;
  for (int i = 0; i < 600; ++i) {
    const double side = dx * res.points[i][0] + dy * res.points[i][1] - mid;
    if ((i < 300 && side > 0.0) || (i >= 300 && side < 0.0)) ++misplaced;
  }
  CHECK(misplaced == 0);
}

TEST_CASE("projection is deterministic in the seed") {
  Rng rng(55);
  std::vector<std::vector<double>> x;
  for (int i = 0; i < 120; ++i) {
    std::vector<double> v(6);
    for (auto& e : v) e = rng.gaussian();
    x.push_back(std::move(v));
  }
  TsneConfig cfg;
  cfg.perplexity = 15.0;
  cfg.iterations = 120;
  cfg.seed = 3;
  const TsneResult a = tsne_project(x, cfg);
  const TsneResult b = tsne_project(x, cfg);
  CHECK(a.points == b.points);
  cfg.seed = 4;
  const TsneResult c = tsne_project(x, cfg);
  CHECK(a.points != c.points);
}
