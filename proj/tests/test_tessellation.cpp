#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "tpg/tessellation.hpp"

using namespace tpg;

namespace {

TruncationMap random_map(Rng& rng, int nodes, int categories) {
  std::vector<Point2> pts;
  std::vector<Category> colors;
  for (int i = 0; i < nodes; ++i) {
    pts.push_back({1.5 * standard_normal(rng), 1.5 * standard_normal(rng)});
    colors.push_back(static_cast<Category>(uniform_index(rng, categories)));
  }
  return TruncationMap(CategorySet::range(categories), pts, colors);
}

std::size_t brute_nearest(const TruncationMap& map, double x, double y) {
  std::size_t best = 0;
  double best_d = INFINITY;
  for (std::size_t i = 0; i < map.node_count(); ++i) {
    const double d = std::hypot(x - map.nodes()[i].x, y - map.nodes()[i].y);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double polygon_area(const std::vector<Point2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

}  // namespace

TEST_CASE("category set") {
  const CategorySet s({7, 2, 5});
  CHECK(s.size() == 3);
  CHECK(s.index_of(2) == 1);
  CHECK(s.contains(5));
  CHECK_FALSE(s.contains(3));
  CHECK_THROWS_AS(s.index_of(3), std::out_of_range);
  CHECK_THROWS(CategorySet({1, 1}));
}

TEST_CASE("map construction errors") {
  CHECK_THROWS_AS(TruncationMap(CategorySet::range(2), {{0, 0}, {1, 1}}, {0}), LengthMismatch);
  CHECK_THROWS(TruncationMap(CategorySet::range(2), {{0, 0}}, {4}));
  const TruncationMap dup(CategorySet::range(2), {{0, 0}, {0, 0}}, {0, 1});
  CHECK_THROWS_AS(dup.require_separated_nodes(), DegenerateTessellation);
  CHECK_THROWS_AS(triangulate(dup), DegenerateTessellation);
}

TEST_CASE("nearest node matches brute force") {
  Rng rng(3);
  const TruncationMap map = random_map(rng, 25, 4);
  for (int i = 0; i < 20000; ++i) {
    const double x = 4.0 * standard_normal(rng);
    const double y = 4.0 * standard_normal(rng);
    const std::size_t k = map.nearest_node(x, y);
    REQUIRE(k == brute_nearest(map, x, y));
    REQUIRE(map_point(map, x, y) == map.colors()[k]);
  }
  // Equidistant point goes to the lower index.
  const TruncationMap pair(CategorySet::range(2), {{-1, 0}, {1, 0}}, {1, 0});
  CHECK(pair.nearest_node(0.0, 3.0) == 0);
  CHECK(map_point(pair, 0.0, 3.0) == 1);
}

TEST_CASE("map_field") {
  const TruncationMap map(CategorySet::range(2), {{-1, 0}, {1, 0}}, {0, 1});
  const std::vector<double> xs{-2.0, 0.5, 3.0};
  const std::vector<double> ys{0.0, 1.0, -1.0};
  CHECK(map_field(map, xs, ys) == std::vector<Category>{0, 1, 1});
  const std::vector<double> short_ys{0.0};
  CHECK_THROWS_AS(map_field(map, xs, short_ys), LengthMismatch);
}

TEST_CASE("voronoi cells tile the box") {
  Rng rng(9);
  const TruncationMap map = random_map(rng, 15, 3);
  const auto cells = voronoi_cells(map);
  REQUIRE(cells.size() == map.node_count());
  double total = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].empty()) continue;
    const double a = polygon_area(cells[i]);
    CHECK(a > 0.0);  // counterclockwise
    total += a;
    Point2 c{0, 0};
    for (const Point2& p : cells[i]) {
      c.x += p.x / cells[i].size();
      c.y += p.y / cells[i].size();
    }
    CHECK(map.nearest_node(c.x, c.y) == i);
  }
  CHECK(total == doctest::Approx(4.0 * kLatentBound * kLatentBound).epsilon(1e-9));
}

TEST_CASE("regions agree with the map") {
  Rng rng(21);
  const TruncationMap map = random_map(rng, 18, 4);
  const CategoryRegions regions = triangulate(map);
  for (int i = 0; i < 20000; ++i) {
    const Point2 p{3.0 * standard_normal(rng), 3.0 * standard_normal(rng)};
    if (std::abs(p.x) > kLatentBound || std::abs(p.y) > kLatentBound) continue;
    const Category c = map_point(map, p.x, p.y);
    const std::size_t ci = map.categories().index_of(c);
    // Points very close to a boundary may be claimed by both sides within slack.
    REQUIRE(union_contains(regions.region_at(ci), p, 1e-9));
    for (std::size_t other = 0; other < map.categories().size(); ++other) {
      if (other == ci) continue;
      if (union_contains(regions.region_at(other), p, -1e-9)) {
        FAIL("point inside a foreign region");
      }
    }
  }
}

TEST_CASE("proportions") {
  Rng rng(33);
  SUBCASE("sum to one and match Monte Carlo") {
    const TruncationMap map = random_map(rng, 12, 3);
    const std::vector<double> p = category_proportions(map);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    const int n = 400000;
    std::vector<double> freq(3, 0.0);
    for (int i = 0; i < n; ++i) {
      freq[map.categories().index_of(
          map_point(map, standard_normal(rng), standard_normal(rng)))] += 1.0 / n;
    }
    for (int c = 0; c < 3; ++c) {
      const double se = std::sqrt(p[c] * (1 - p[c]) / n) + 1e-9;
      CHECK(std::abs(freq[c] - p[c]) < 4.0 * se);
    }
  }
  SUBCASE("closed forms") {
    const TruncationMap one(CategorySet::range(2), {{0.3, -0.2}}, {1});
    const auto p1 = category_proportions(one);
    CHECK(p1[0] == 0.0);
    CHECK(p1[1] == doctest::Approx(1.0).epsilon(1e-12));
    // Vertical split at x = 0.5.
    const TruncationMap split(CategorySet::range(2), {{0.0, 0.0}, {1.0, 0.0}}, {0, 1});
    const auto p2 = category_proportions(split);
    CHECK(p2[0] == doctest::Approx(std_normal_cdf(0.5)).epsilon(1e-10));
    // Four quadrant nodes: equal shares.
    const TruncationMap quad(CategorySet::range(4), {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}},
                             {0, 1, 2, 3});
    for (double v : category_proportions(quad)) CHECK(v == doctest::Approx(0.25).epsilon(1e-10));
  }
  SUBCASE("unused category has zero mass") {
    const TruncationMap map(CategorySet::range(3), {{0, 0}, {1, 1}}, {0, 2});
    const auto p = category_proportions(map);
    CHECK(p[1] == 0.0);
    CHECK(triangulate(map).region_at(1).empty());
  }
}
