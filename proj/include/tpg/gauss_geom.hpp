#pragma once

// Standard-Gaussian geometry kernel: truncated 1-D sampling over interval
// unions, bivariate Gaussian mass of triangles, and coordinate-wise Gibbs
// sampling of a Gaussian pair restricted to a union of triangles.

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tpg/rng.hpp"

namespace tpg {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Half-width of the latent-space box every truncation region lives in.
inline constexpr double kLatentBound = 8.0;

class EmptyDomain : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleStart : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateTriangle : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo;
  double hi;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Sorted union of disjoint closed intervals; endpoints may be infinite.
class IntervalUnion {
 public:
  /// Endpoints closer than this are merged.
  static constexpr double kMergeTol = 1e-12;

  IntervalUnion() = default;
  explicit IntervalUnion(std::vector<Interval> intervals);

  static IntervalUnion real_line();
  static IntervalUnion single(double lo, double hi);

  const std::vector<Interval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  bool contains(double t, double slack = 0.0) const;

  IntervalUnion intersect(const IntervalUnion& other) const;

  /// Natural log of the N(mean, sd^2) mass of the union; -inf if empty.
  double log_mass(double mean, double sd) const;

 private:
  std::vector<Interval> intervals_;
};

/// Triangle with vertices normalized to counterclockwise order.
class Triangle {
 public:
  Triangle(Point2 a, Point2 b, Point2 c);

  const std::array<Point2, 3>& vertices() const { return v_; }
  double signed_area() const;
  Point2 centroid() const;
  bool contains(Point2 p, double slack = 0.0) const;

  double min_x() const { return lo_.x; }
  double max_x() const { return hi_.x; }
  double min_y() const { return lo_.y; }
  double max_y() const { return hi_.y; }

  /// Closed slice {u : (u, v) in triangle}, empty when the line misses it.
  std::optional<Interval> slice_u(double v) const;
  std::optional<Interval> slice_v(double u) const;

 private:
  std::array<Point2, 3> v_;
  Point2 lo_, hi_;
};

using TriangleUnion = std::vector<Triangle>;

double std_normal_cdf(double x);
/// Upper tail 1 - Phi(x), accurate far into the right tail.
double std_normal_sf(double x);
double std_normal_quantile(double p);
/// log(1 - Phi(x)), finite for every finite x.
double log_std_normal_sf(double x);

/// Draw from N(mean, sd^2) restricted to `domain`: the interval is chosen
/// with probability proportional to its mass, then sampled by inverse CDF
/// (or exact rejection in the far tails). Throws EmptyDomain when the
/// domain carries no mass.
double sample_truncated_normal(double mean, double sd, const IntervalUnion& domain,
                               Rng& rng);
/// Same, for sorted disjoint intervals.
double sample_truncated_normal(double mean, double sd, std::span<const Interval> domain,
                               Rng& rng);

/// Probability that an independent standard bivariate normal pair lies in t.
double triangle_mass(const Triangle& t);

/// Same quantity by adaptive quadrature of the 1-D slice masses; used for
/// near-degenerate triangles and available as an independent check.
double triangle_mass_quadrature(const Triangle& t, double tol = 1e-12);

bool union_contains(const TriangleUnion& tu, Point2 p, double slack = 0.0);
double union_mass(const TriangleUnion& tu);

IntervalUnion slice_u(const TriangleUnion& tu, double v);
IntervalUnion slice_v(const TriangleUnion& tu, double u);

/// Slices of a fixed triangle union by horizontal and vertical lines, looked
/// up from bands between consecutive vertex coordinates. Within a band every
/// slice endpoint lies on a fixed edge, so a slice costs one binary search.
class UnionSlicer {
 public:
  explicit UnionSlicer(const TriangleUnion& tu);

  /// Sorted disjoint slice intervals written to `out` (cleared first).
  void slice_u(double v, std::vector<Interval>& out) const { horizontal_.slice(v, out); }
  void slice_v(double u, std::vector<Interval>& out) const { vertical_.slice(u, out); }
  IntervalUnion slice_u(double v) const;
  IntervalUnion slice_v(double u) const;

  bool contains(Point2 p, double slack = 0.0) const;
  bool empty() const { return horizontal_.bands.empty(); }

 private:
  // Edge of a band expressed as coordinate = at + (level - from) * slope.
  struct Edge {
    double from;
    double at;
    double slope;
    double operator()(double level) const { return at + (level - from) * slope; }
  };
  struct Band {
    std::vector<std::pair<Edge, Edge>> pieces;
  };
  struct Axis {
    std::vector<double> cuts;
    std::vector<Band> bands;
    void build(const TriangleUnion& tu, bool horizontal);
    void slice(double level, std::vector<Interval>& out) const;
  };

  Axis horizontal_;
  Axis vertical_;
};

/// Coordinate-wise Gibbs sampling of (u, v) ~ N(means, diag(sds^2)) restricted
/// to `tu`, started from the feasible point `start`.
Point2 sample_pair_in_union(const TriangleUnion& tu, std::pair<double, double> means,
                            std::pair<double, double> sds, Point2 start, int sweeps,
                            Rng& rng);
Point2 sample_pair_in_union(const UnionSlicer& slicer, std::pair<double, double> means,
                            std::pair<double, double> sds, Point2 start, int sweeps,
                            Rng& rng);

}  // namespace tpg
