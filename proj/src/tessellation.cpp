#include "tpg/tessellation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace tpg {

namespace {

constexpr int kGhostCount = 16;
constexpr double kGhostRadius = 1e4;
constexpr double kFanMinArea = 1e-14;

// Keep the part of `poly` closer to `site` than to `other` (perpendicular
// bisector half-plane), Sutherland-Hodgman style.
std::vector<Point2> clip_bisector(const std::vector<Point2>& poly, Point2 site,
                                  Point2 other) {
  const double nx = other.x - site.x;
  const double ny = other.y - site.y;
  const double offset = 0.5 * (nx * (other.x + site.x) + ny * (other.y + site.y));
  auto side = [&](Point2 p) { return nx * p.x + ny * p.y - offset; };

  std::vector<Point2> out;
  out.reserve(poly.size() + 1);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2 a = poly[i];
    const Point2 b = poly[(i + 1) % poly.size()];
    const double sa = side(a);
    const double sb = side(b);
    if (sa <= 0.0) out.push_back(a);
    if ((sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0)) {
      const double t = sa / (sa - sb);
      out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  return out;
}

std::vector<Point2> dedupe(const std::vector<Point2>& poly) {
  std::vector<Point2> out;
  for (const Point2& p : poly) {
    if (!out.empty() && std::hypot(p.x - out.back().x, p.y - out.back().y) < 1e-13) {
      continue;
    }
    out.push_back(p);
  }
  while (out.size() > 1 &&
         std::hypot(out.front().x - out.back().x, out.front().y - out.back().y) < 1e-13) {
    out.pop_back();
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

CategorySet::CategorySet(std::vector<Category> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("category set must be non-empty");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0) throw std::invalid_argument("category labels must be non-negative");
    for (std::size_t j = 0; j < i; ++j) {
      if (labels_[i] == labels_[j]) {
        throw std::invalid_argument("category labels must be distinct");
      }
    }
  }
}

CategorySet CategorySet::range(int count) {
  std::vector<Category> labels(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) labels[static_cast<std::size_t>(i)] = i;
  return CategorySet(std::move(labels));
}

std::size_t CategorySet::index_of(Category label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  throw std::out_of_range("category " + std::to_string(label) + " not in category set");
}

bool CategorySet::contains(Category label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

// ---------------------------------------------------------------------------

TruncationMap::TruncationMap(CategorySet categories, std::vector<Point2> nodes,
                             std::vector<Category> colors)
    : categories_(std::move(categories)),
      nodes_(std::move(nodes)),
      colors_(std::move(colors)) {
  if (nodes_.empty()) throw std::invalid_argument("truncation map needs at least one node");
  if (nodes_.size() != colors_.size()) {
    throw LengthMismatch("truncation map: nodes and colors differ in length");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!std::isfinite(nodes_[i].x) || !std::isfinite(nodes_[i].y)) {
      throw std::invalid_argument("truncation map: non-finite node coordinate");
    }
    if (!categories_.contains(colors_[i])) {
      throw std::invalid_argument("truncation map: node color outside category set");
    }
  }
}

std::size_t TruncationMap::nearest_node(double x, double y) const {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double dx = nodes_[i].x - x;
    const double dy = nodes_[i].y - y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

void TruncationMap::require_separated_nodes() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::hypot(nodes_[i].x - nodes_[j].x, nodes_[i].y - nodes_[j].y) <
          kMinNodeSeparation) {
        throw DegenerateTessellation("nodes " + std::to_string(j) + " and " +
                                     std::to_string(i) + " coincide");
      }
    }
  }
}

Category map_point(const TruncationMap& map, double x, double y) {
  return map.colors()[map.nearest_node(x, y)];
}

std::vector<Category> map_field(const TruncationMap& map, std::span<const double> xs,
                                std::span<const double> ys) {
  if (xs.size() != ys.size()) throw LengthMismatch("map_field: x and y differ in length");
  std::vector<Category> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = map_point(map, xs[i], ys[i]);
  return out;
}

// ---------------------------------------------------------------------------

CategoryRegions::CategoryRegions(CategorySet categories, std::vector<TriangleUnion> regions)
    : categories_(std::move(categories)), regions_(std::move(regions)) {
  if (regions_.size() != categories_.size()) {
    throw LengthMismatch("one region per category expected");
  }
}

const TriangleUnion& CategoryRegions::region(Category c) const {
  return regions_[categories_.index_of(c)];
}

std::vector<std::vector<Point2>> voronoi_cells(const TruncationMap& map, double box,
                                               bool with_ghosts) {
  map.require_separated_nodes();
  std::vector<Point2> competitors = map.nodes();
  if (with_ghosts) {
    for (int g = 0; g < kGhostCount; ++g) {
      const double angle = 2.0 * std::numbers::pi * g / kGhostCount;
      competitors.push_back({kGhostRadius * std::cos(angle), kGhostRadius * std::sin(angle)});
    }
  }
  // Clipping starts from the box itself so that vertex coordinates stay at
  // box scale; the ghost bisectors then leave the box polygon untouched.
  std::vector<std::vector<Point2>> cells;
  cells.reserve(map.node_count());
  for (std::size_t i = 0; i < map.node_count(); ++i) {
    const Point2 site = map.nodes()[i];
    std::vector<Point2> poly{{-box, -box}, {box, -box}, {box, box}, {-box, box}};
    for (std::size_t j = 0; j < competitors.size() && !poly.empty(); ++j) {
      if (j == i) continue;
      poly = clip_bisector(poly, site, competitors[j]);
    }
    cells.push_back(dedupe(poly));
  }
  return cells;
}

CategoryRegions triangulate(const TruncationMap& map, bool with_ghosts) {
  const auto cells = voronoi_cells(map, kLatentBound, with_ghosts);
  std::vector<TriangleUnion> regions(map.categories().size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& cell = cells[i];
    if (cell.size() < 3) continue;
    Point2 c{0.0, 0.0};
    for (const Point2& p : cell) {
      c.x += p.x;
      c.y += p.y;
    }
    c.x /= static_cast<double>(cell.size());
    c.y /= static_cast<double>(cell.size());
    auto& region = regions[map.categories().index_of(map.colors()[i])];
    for (std::size_t k = 0; k < cell.size(); ++k) {
      const Point2 a = cell[k];
      const Point2 b = cell[(k + 1) % cell.size()];
      const double area = 0.5 * ((a.x - c.x) * (b.y - c.y) - (b.x - c.x) * (a.y - c.y));
      if (std::abs(area) < kFanMinArea) continue;
      region.emplace_back(c, a, b);
    }
  }
  return CategoryRegions(map.categories(), std::move(regions));
}

std::vector<double> category_proportions(const CategoryRegions& regions) {
  std::vector<double> out(regions.categories().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = union_mass(regions.region_at(i));
  return out;
}

std::vector<double> category_proportions(const TruncationMap& map) {
  return category_proportions(triangulate(map));
}

}  // namespace tpg
