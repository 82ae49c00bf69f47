#include "tpg/gauss_geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/owens_t.hpp>

namespace tpg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }

double log_std_normal_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

// log(exp(a) - exp(b)) for a >= b.
double log_diff_exp(double a, double b) {
  if (b == -kInf) return a;
  return a + std::log1p(-std::exp(b - a));
}

// Log N(0,1) mass of the standardized interval [a, b].
double log_interval_mass(double a, double b) {
  if (!(b > a)) return -kInf;
  const double width = b - a;
  if (std::isfinite(width) && width < 1e-7) {
    const double mid = 0.5 * (a + b);
    return std::log(width) + log_std_normal_pdf(mid);
  }
  if (a >= 0.0) return log_diff_exp(log_std_normal_sf(a), log_std_normal_sf(b));
  if (b <= 0.0) return log_diff_exp(log_std_normal_sf(-b), log_std_normal_sf(-a));
  // Straddles zero: erf is accurate near the origin.
  const double upper = b == kInf ? 0.5 : 0.5 * std::erf(b / std::numbers::sqrt2);
  const double lower = a == -kInf ? 0.5 : 0.5 * std::erf(-a / std::numbers::sqrt2);
  return std::log(upper + lower);
}

// Exact sampler for N(0,1) restricted to [a, b] with 0 <= a < b, used when
// inverse-CDF sampling would lose all precision.
double sample_right_tail(double a, double b, Rng& rng) {
  if (std::isfinite(b) && (b - a) * b < 1.0) {
    // Density varies by at most a factor e over the interval.
    for (;;) {
      const double x = a + (b - a) * uniform01(rng);
      if (uniform01(rng) <= std::exp(-0.5 * (x * x - a * a))) return x;
    }
  }
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double x = a - std::log1p(-uniform01(rng)) / rate;
    if (x > b) continue;
    const double d = x - rate;
    if (uniform01(rng) <= std::exp(-0.5 * d * d)) return x;
  }
}

// Standardized draw from [a, b].
double sample_standard_interval(double a, double b, Rng& rng) {
  if (a == b) return a;
  if (std::isfinite(a) && std::isfinite(b) &&
      std::abs(b * b - a * a) * 0.5 < 1.0 && (a >= 0.0 || b <= 0.0)) {
    // Nearly flat density: uniform proposal with acceptance >= 1/e.
    const double peak = std::min(std::abs(a), std::abs(b));
    for (;;) {
      const double x = a + (b - a) * uniform01(rng);
      if (uniform01(rng) <= std::exp(-0.5 * (x * x - peak * peak))) return x;
    }
  }
  if (a >= 0.0) {
    const double sa = std_normal_sf(a);
    if (sa < 1e-280) return sample_right_tail(a, b, rng);
    const double sb = std_normal_sf(b);
    const double q = sa - uniform01(rng) * (sa - sb);
    return std::clamp(-std_normal_quantile(q), a, b);
  }
  if (b <= 0.0) return -sample_standard_interval(-b, -a, rng);
  const double pa = std_normal_cdf(a);
  const double pb = std_normal_cdf(b);
  const double p = pa + uniform01(rng) * (pb - pa);
  return std::clamp(std_normal_quantile(p), a, b);
}

std::optional<Interval> slice_edges(const std::array<Point2, 3>& v, double level,
                                    bool horizontal) {
  double lo = kInf;
  double hi = -kInf;
  for (std::size_t i = 0; i < 3; ++i) {
    const Point2 p = v[i];
    const Point2 q = v[(i + 1) % 3];
    const double pc = horizontal ? p.y : p.x;
    const double qc = horizontal ? q.y : q.x;
    const double pt = horizontal ? p.x : p.y;
    const double qt = horizontal ? q.x : q.y;
    if ((pc - level) * (qc - level) > 0.0) continue;
    if (pc == qc) {
      lo = std::min({lo, pt, qt});
      hi = std::max({hi, pt, qt});
    } else {
      const double t = pt + (level - pc) * (qt - pt) / (qc - pc);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  if (lo > hi) return std::nullopt;
  return Interval{lo, hi};
}

// Signed mass of the triangle (origin, a, b).
double origin_wedge_mass(Point2 a, Point2 b) {
  const double orient = cross(a, b);
  if (orient == 0.0) return 0.0;
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len = std::hypot(dx, dy);
  if (len == 0.0) return 0.0;
  const Point2 e{dx / len, dy / len};
  const double h = std::abs(cross(a, e));
  if (h == 0.0) return 0.0;
  const double ta = a.x * e.x + a.y * e.y;
  const double tb = b.x * e.x + b.y * e.y;
  // Angular extent seen from the origin, measured from the foot of the
  // perpendicular onto the edge line.
  const double angle = std::atan2(tb, h) - std::atan2(ta, h);
  // Mass beyond the edge line inside the same angular sector, split at the
  // perpendicular into Owen T pieces.
  auto beyond = [h](double t) {
    if (t == 0.0) return 0.0;
    const double piece = boost::math::owens_t(h, std::abs(t) / h);
    return t > 0.0 ? piece : -piece;
  };
  const double mass = angle / (2.0 * std::numbers::pi) - (beyond(tb) - beyond(ta));
  return orient > 0.0 ? mass : -mass;
}

}  // namespace

// ---------------------------------------------------------------------------
// Normal distribution helpers

double std_normal_cdf(double x) {
  if (x == -kInf) return 0.0;
  if (x == kInf) return 1.0;
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_sf(double x) { return std_normal_cdf(-x); }

double std_normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log_std_normal_sf(double x) {
  if (x == kInf) return -kInf;
  if (x < 30.0) return std::log(std_normal_sf(x));
  // Asymptotic (Mills ratio) expansion.
  const double r = 1.0 / (x * x);
  const double series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
  return log_std_normal_pdf(x) - std::log(x) + std::log(series);
}

double standard_normal(Rng& rng) {
  // Marsaglia polar method; the second variate is discarded so each call
  // consumes an engine-defined number of words independent of history.
  for (;;) {
    const double u = 2.0 * uniform01(rng) - 1.0;
    const double v = 2.0 * uniform01(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

// ---------------------------------------------------------------------------
// IntervalUnion

IntervalUnion::IntervalUnion(std::vector<Interval> intervals) {
  std::erase_if(intervals, [](const Interval& iv) { return !(iv.lo <= iv.hi); });
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (const Interval& iv : intervals) {
    if (!intervals_.empty() && iv.lo <= intervals_.back().hi + kMergeTol) {
      intervals_.back().hi = std::max(intervals_.back().hi, iv.hi);
    } else {
      intervals_.push_back(iv);
    }
  }
}

IntervalUnion IntervalUnion::real_line() { return single(-kInf, kInf); }

IntervalUnion IntervalUnion::single(double lo, double hi) {
  return IntervalUnion(std::vector<Interval>{{lo, hi}});
}

bool IntervalUnion::contains(double t, double slack) const {
  for (const Interval& iv : intervals_) {
    if (t >= iv.lo - slack && t <= iv.hi + slack) return true;
  }
  return false;
}

IntervalUnion IntervalUnion::intersect(const IntervalUnion& other) const {
  IntervalUnion out;
  std::size_t i = 0;
  std::size_t j = 0;
  const auto& a = intervals_;
  const auto& b = other.intervals_;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].lo, b[j].lo);
    const double hi = std::min(a[i].hi, b[j].hi);
    if (lo <= hi) out.intervals_.push_back({lo, hi});
    if (a[i].hi < b[j].hi) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

double IntervalUnion::log_mass(double mean, double sd) const {
  double best = -kInf;
  std::vector<double> logs;
  logs.reserve(intervals_.size());
  for (const Interval& iv : intervals_) {
    logs.push_back(log_interval_mass((iv.lo - mean) / sd, (iv.hi - mean) / sd));
    best = std::max(best, logs.back());
  }
  if (best == -kInf) return -kInf;
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - best);
  return best + std::log(sum);
}

double sample_truncated_normal(double mean, double sd, const IntervalUnion& domain,
                               Rng& rng) {
  return sample_truncated_normal(mean, sd, std::span<const Interval>(domain.intervals()), rng);
}

double sample_truncated_normal(double mean, double sd, std::span<const Interval> ivs,
                               Rng& rng) {
  constexpr std::size_t kInline = 16;
  std::array<double, kInline> inline_logs;
  std::vector<double> heap_logs;
  double* logs = inline_logs.data();
  if (ivs.size() > kInline) {
    heap_logs.resize(ivs.size());
    logs = heap_logs.data();
  }
  double best = -kInf;
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    logs[i] = log_interval_mass((ivs[i].lo - mean) / sd, (ivs[i].hi - mean) / sd);
    best = std::max(best, logs[i]);
  }
  if (best == -kInf) throw EmptyDomain("truncated normal: domain carries no mass");

  std::size_t pick = 0;
  if (ivs.size() > 1) {
    double total = 0.0;
    for (std::size_t i = 0; i < ivs.size(); ++i) {
      logs[i] = std::exp(logs[i] - best);
      total += logs[i];
    }
    double target = uniform01(rng) * total;
    pick = ivs.size() - 1;
    for (std::size_t i = 0; i < ivs.size(); ++i) {
      if (logs[i] > 0.0 && target < logs[i]) {
        pick = i;
        break;
      }
      target -= logs[i];
    }
    while (logs[pick] == 0.0) --pick;
  }
  const Interval iv = ivs[pick];
  const double z = sample_standard_interval((iv.lo - mean) / sd, (iv.hi - mean) / sd, rng);
  return std::clamp(mean + sd * z, iv.lo, iv.hi);
}

// ---------------------------------------------------------------------------
// Triangle

Triangle::Triangle(Point2 a, Point2 b, Point2 c) : v_{a, b, c} {
  const double area = signed_area();
  if (area == 0.0 || !std::isfinite(area)) {
    throw DegenerateTriangle("triangle has zero or non-finite area");
  }
  if (area < 0.0) std::swap(v_[1], v_[2]);
  lo_ = {std::min({a.x, b.x, c.x}), std::min({a.y, b.y, c.y})};
  hi_ = {std::max({a.x, b.x, c.x}), std::max({a.y, b.y, c.y})};
}

double Triangle::signed_area() const {
  return 0.5 * ((v_[1].x - v_[0].x) * (v_[2].y - v_[0].y) -
                (v_[2].x - v_[0].x) * (v_[1].y - v_[0].y));
}

Point2 Triangle::centroid() const {
  return {(v_[0].x + v_[1].x + v_[2].x) / 3.0, (v_[0].y + v_[1].y + v_[2].y) / 3.0};
}

bool Triangle::contains(Point2 p, double slack) const {
  if (p.x < lo_.x - slack || p.x > hi_.x + slack || p.y < lo_.y - slack ||
      p.y > hi_.y + slack) {
    return false;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const Point2 a = v_[i];
    const Point2 b = v_[(i + 1) % 3];
    const double ex = b.x - a.x;
    const double ey = b.y - a.y;
    // Signed distance of p to the edge line, positive inside.
    const double side = (ex * (p.y - a.y) - ey * (p.x - a.x)) / std::hypot(ex, ey);
    if (side < -slack) return false;
  }
  return true;
}

std::optional<Interval> Triangle::slice_u(double v) const {
  if (v < lo_.y || v > hi_.y) return std::nullopt;
  return slice_edges(v_, v, true);
}

std::optional<Interval> Triangle::slice_v(double u) const {
  if (u < lo_.x || u > hi_.x) return std::nullopt;
  return slice_edges(v_, u, false);
}

// ---------------------------------------------------------------------------
// Triangle mass

double triangle_mass(const Triangle& t) {
  const auto& v = t.vertices();
  double min_edge = kInf;
  for (std::size_t i = 0; i < 3; ++i) {
    min_edge = std::min(min_edge, std::hypot(v[i].x - v[(i + 1) % 3].x,
                                             v[i].y - v[(i + 1) % 3].y));
  }
  if (min_edge < 1e-9) return triangle_mass_quadrature(t);
  double mass = 0.0;
  for (std::size_t i = 0; i < 3; ++i) mass += origin_wedge_mass(v[i], v[(i + 1) % 3]);
  return std::clamp(mass, 0.0, 1.0);
}

double triangle_mass_quadrature(const Triangle& t, double tol) {
  using boost::math::quadrature::gauss_kronrod;
  auto slice_mass = [&t](double u) {
    const auto iv = t.slice_v(u);
    if (!iv) return 0.0;
    return std::exp(log_std_normal_pdf(u) + log_interval_mass(iv->lo, iv->hi));
  };
  std::array<double, 3> xs{t.vertices()[0].x, t.vertices()[1].x, t.vertices()[2].x};
  std::sort(xs.begin(), xs.end());
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (xs[i + 1] > xs[i]) {
      mass += gauss_kronrod<double, 31>::integrate(slice_mass, xs[i], xs[i + 1], 15, tol);
    }
  }
  return std::clamp(mass, 0.0, 1.0);
}

bool union_contains(const TriangleUnion& tu, Point2 p, double slack) {
  return std::any_of(tu.begin(), tu.end(),
                     [&](const Triangle& t) { return t.contains(p, slack); });
}

double union_mass(const TriangleUnion& tu) {
  double mass = 0.0;
  for (const Triangle& t : tu) mass += triangle_mass(t);
  return mass;
}

// ---------------------------------------------------------------------------
// Slices and the pair sampler

IntervalUnion slice_u(const TriangleUnion& tu, double v) {
  std::vector<Interval> parts;
  for (const Triangle& t : tu) {
    if (auto iv = t.slice_u(v)) parts.push_back(*iv);
  }
  return IntervalUnion(std::move(parts));
}

IntervalUnion slice_v(const TriangleUnion& tu, double u) {
  std::vector<Interval> parts;
  for (const Triangle& t : tu) {
    if (auto iv = t.slice_v(u)) parts.push_back(*iv);
  }
  return IntervalUnion(std::move(parts));
}

// ---------------------------------------------------------------------------
// UnionSlicer

void UnionSlicer::Axis::build(const TriangleUnion& tu, bool horizontal) {
  auto level_of = [horizontal](Point2 p) { return horizontal ? p.y : p.x; };
  auto across_of = [horizontal](Point2 p) { return horizontal ? p.x : p.y; };
  for (const Triangle& t : tu) {
    for (const Point2& p : t.vertices()) cuts.push_back(level_of(p));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  if (cuts.size() < 2) {
    cuts.clear();
    return;
  }
  struct Piece {
    Edge lo, hi;
    double lo_mid, hi_mid;
  };
  std::vector<Piece> pieces;
  bands.resize(cuts.size() - 1);
  for (std::size_t b = 0; b + 1 < cuts.size(); ++b) {
    const double mid = 0.5 * (cuts[b] + cuts[b + 1]);
    pieces.clear();
    for (const Triangle& t : tu) {
      const auto& v = t.vertices();
      Edge found[2];
      int count = 0;
      for (std::size_t i = 0; i < 3 && count < 2; ++i) {
        const Point2 p = v[i];
        const Point2 q = v[(i + 1) % 3];
        const double lp = level_of(p);
        const double lq = level_of(q);
        if ((lp - mid) * (lq - mid) >= 0.0) continue;
        found[count++] = Edge{lp, across_of(p), (across_of(q) - across_of(p)) / (lq - lp)};
      }
      if (count < 2) continue;
      double a = found[0](mid);
      double c = found[1](mid);
      if (a <= c) {
        pieces.push_back({found[0], found[1], a, c});
      } else {
        pieces.push_back({found[1], found[0], c, a});
      }
    }
    std::sort(pieces.begin(), pieces.end(),
              [](const Piece& x, const Piece& y) { return x.lo_mid < y.lo_mid; });
    Band& band = bands[b];
    double reach = -kInf;
    for (const Piece& p : pieces) {
      if (!band.pieces.empty() && p.lo_mid <= reach + IntervalUnion::kMergeTol) {
        if (p.hi_mid > reach) {
          band.pieces.back().second = p.hi;
          reach = p.hi_mid;
        }
      } else {
        band.pieces.push_back({p.lo, p.hi});
        reach = p.hi_mid;
      }
    }
  }
}

void UnionSlicer::Axis::slice(double level, std::vector<Interval>& out) const {
  out.clear();
  if (bands.empty() || !(level >= cuts.front() && level <= cuts.back())) return;
  auto b = static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), level) -
                                    cuts.begin());
  b = std::min(b == 0 ? 0 : b - 1, bands.size() - 1);
  for (const auto& [lo_edge, hi_edge] : bands[b].pieces) {
    const double lo = lo_edge(level);
    const double hi = hi_edge(level);
    if (lo > hi) continue;
    if (!out.empty() && lo <= out.back().hi + IntervalUnion::kMergeTol) {
      out.back().hi = std::max(out.back().hi, hi);
    } else {
      out.push_back({lo, hi});
    }
  }
}

UnionSlicer::UnionSlicer(const TriangleUnion& tu) {
  horizontal_.build(tu, true);
  vertical_.build(tu, false);
}

IntervalUnion UnionSlicer::slice_u(double v) const {
  std::vector<Interval> out;
  horizontal_.slice(v, out);
  return IntervalUnion(std::move(out));
}

IntervalUnion UnionSlicer::slice_v(double u) const {
  std::vector<Interval> out;
  vertical_.slice(u, out);
  return IntervalUnion(std::move(out));
}

bool UnionSlicer::contains(Point2 p, double slack) const {
  std::vector<Interval> out;
  for (double dy : {0.0, -slack, slack}) {
    horizontal_.slice(p.y + dy, out);
    for (const Interval& iv : out) {
      if (p.x >= iv.lo - slack && p.x <= iv.hi + slack) return true;
    }
    if (slack == 0.0) break;
  }
  return false;
}

Point2 sample_pair_in_union(const UnionSlicer& slicer, std::pair<double, double> means,
                            std::pair<double, double> sds, Point2 start, int sweeps,
                            Rng& rng) {
  if (!slicer.contains(start, 1e-9)) {
    throw InfeasibleStart("sample_pair_in_union: start point lies outside the union");
  }
  Point2 p = start;
  std::vector<Interval> buffer;
  for (int s = 0; s < sweeps; ++s) {
    try {
      slicer.slice_u(p.y, buffer);
      p.x = sample_truncated_normal(means.first, sds.first, buffer, rng);
    } catch (const EmptyDomain&) {
    }
    try {
      slicer.slice_v(p.x, buffer);
      p.y = sample_truncated_normal(means.second, sds.second, buffer, rng);
    } catch (const EmptyDomain&) {
    }
  }
  return p;
}

Point2 sample_pair_in_union(const TriangleUnion& tu, std::pair<double, double> means,
                            std::pair<double, double> sds, Point2 start, int sweeps,
                            Rng& rng) {
  if (!union_contains(tu, start, 1e-9)) {
    throw InfeasibleStart("sample_pair_in_union: start point lies outside the union");
  }
  Point2 p = start;
  for (int s = 0; s < sweeps; ++s) {
    // A slice through the current point can only be massless when it
    // touches the union at isolated points; the coordinate is then kept.
    try {
      p.x = sample_truncated_normal(means.first, sds.first, slice_u(tu, p.y), rng);
    } catch (const EmptyDomain&) {
    }
    try {
      p.y = sample_truncated_normal(means.second, sds.second, slice_v(tu, p.x), rng);
    } catch (const EmptyDomain&) {
    }
  }
  return p;
}

}  // namespace tpg
