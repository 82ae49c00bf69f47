#pragma once

// Colored Voronoi truncation maps.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpg/gauss_geom.hpp"

namespace tpg {

using Category = int;

class DegenerateTessellation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ordered set of facies labels.
class CategorySet {
 public:
  explicit CategorySet(std::vector<Category> labels);
  /// Labels 0..count-1.
  static CategorySet range(int count);

  const std::vector<Category>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  /// Position of `label` in the set; throws std::out_of_range if absent.
  std::size_t index_of(Category label) const;
  bool contains(Category label) const;

  friend bool operator==(const CategorySet&, const CategorySet&) = default;

 private:
  std::vector<Category> labels_;
};

/// A truncation map: nodes in latent space, each carrying a category.
/// The category of a latent pair is the category of its nearest node.
class TruncationMap {
 public:
  /// Minimum distance between two nodes of a valid map.
  static constexpr double kMinNodeSeparation = 1e-10;

  TruncationMap(CategorySet categories, std::vector<Point2> nodes,
                std::vector<Category> colors);

  const CategorySet& categories() const { return categories_; }
  const std::vector<Point2>& nodes() const { return nodes_; }
  const std::vector<Category>& colors() const { return colors_; }
  std::size_t node_count() const { return nodes_.size(); }

  /// Index of the nearest node; ties go to the smallest index.
  std::size_t nearest_node(double x, double y) const;

  /// Throws DegenerateTessellation if two nodes coincide.
  void require_separated_nodes() const;

  friend bool operator==(const TruncationMap&, const TruncationMap&) = default;

 private:
  CategorySet categories_;
  std::vector<Point2> nodes_;
  std::vector<Category> colors_;
};

Category map_point(const TruncationMap& map, double x, double y);

std::vector<Category> map_field(const TruncationMap& map, std::span<const double> xs,
                                std::span<const double> ys);

/// Triangulated per-category regions of a map inside the latent box.
class CategoryRegions {
 public:
  CategoryRegions(CategorySet categories, std::vector<TriangleUnion> regions);

  const CategorySet& categories() const { return categories_; }
  const TriangleUnion& region(Category c) const;
  const TriangleUnion& region_at(std::size_t index) const { return regions_.at(index); }

 private:
  CategorySet categories_;
  std::vector<TriangleUnion> regions_;
};

/// Voronoi cell of every node clipped to [-box, box]^2 (counterclockwise
/// polygon, empty when the cell misses the box). Ghost nodes on a distant
/// circle bound every unclipped cell and leave the box geometry unchanged.
std::vector<std::vector<Point2>> voronoi_cells(const TruncationMap& map,
                                               double box = kLatentBound,
                                               bool with_ghosts = true);

CategoryRegions triangulate(const TruncationMap& map, bool with_ghosts = true);

/// Standard bigaussian mass of each category region, ordered as the map's
/// category set.
std::vector<double> category_proportions(const TruncationMap& map);
std::vector<double> category_proportions(const CategoryRegions& regions);

}  // namespace tpg
