#include "tpg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tpg {

void Event::validate(const CategorySet& set) const {
  if (sites.size() != categories.size()) {
    throw LengthMismatch("event: sites and categories differ in length");
  }
  require_distinct(sites);
  for (Category c : categories) {
    if (!set.contains(c)) {
      throw std::invalid_argument("event category " + std::to_string(c) +
                                  " not in category set");
    }
  }
}

Event Event::subset(const std::vector<std::size_t>& keep) const {
  Event out;
  out.sites.reserve(keep.size());
  out.categories.reserve(keep.size());
  for (std::size_t i : keep) {
    out.sites.push_back(sites.at(i));
    out.categories.push_back(categories.at(i));
  }
  return out;
}

std::vector<std::size_t> random_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  return order;
}

// ---------------------------------------------------------------------------

ConditionalSampler::ConditionalSampler(TruncationMap map, CategoryRegions regions, Event event,
                                       const CovarianceModel& model_x,
                                       const CovarianceModel& model_y, SamplerOptions options)
    : map_(std::move(map)),
      regions_(std::move(regions)),
      event_(std::move(event)),
      options_(options),
      cov_x_(covariance_matrix(event_.sites, model_x)),
      cov_y_(covariance_matrix(event_.sites, model_y)),
      fx_(cov_x_),
      fy_(cov_y_),
      loo_x_(fx_),
      loo_y_(fy_) {
  event_.validate(map_.categories());
  const CategorySet& categories = map_.categories();
  slicers_.reserve(categories.size());
  for (std::size_t c = 0; c < categories.size(); ++c) {
    slicers_.emplace_back(regions_.region_at(c));
  }
  site_slicer_.reserve(event_.size());
  for (Category c : event_.categories) site_slicer_.push_back(&slicers_[categories.index_of(c)]);
}

double ConditionalSampler::coefficient_x(std::size_t a, std::size_t b) const {
  const double c = cov_x_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  return std::abs(c) <= options_.zero_coefficient ? 0.0 : c;
}

double ConditionalSampler::coefficient_y(std::size_t a, std::size_t b) const {
  const double c = cov_y_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  return std::abs(c) <= options_.zero_coefficient ? 0.0 : c;
}

LatentState ConditionalSampler::init_state() const {
  const std::size_t k = map_.categories().size();
  std::vector<Point2> representative(k);
  std::vector<bool> needed(k, false);
  for (Category c : event_.categories) needed[map_.categories().index_of(c)] = true;
  for (std::size_t ci = 0; ci < k; ++ci) {
    if (!needed[ci]) continue;
    const TriangleUnion& region = regions_.region_at(ci);
    double best = -1.0;
    for (const Triangle& t : region) {
      const double m = triangle_mass(t);
      if (m > best) {
        best = m;
        representative[ci] = t.centroid();
      }
    }
    const Category label = map_.categories().labels()[ci];
    if (region.empty() || map_point(map_, representative[ci].x, representative[ci].y) != label) {
      throw UnmappableCategory("category " + std::to_string(label) +
                               " has no region in the truncation map");
    }
  }
  LatentState state{Eigen::VectorXd(static_cast<Eigen::Index>(size())),
                    Eigen::VectorXd(static_cast<Eigen::Index>(size())), 0};
  for (std::size_t i = 0; i < size(); ++i) {
    const Point2 p = representative[map_.categories().index_of(event_.categories[i])];
    state.x[static_cast<Eigen::Index>(i)] = p.x;
    state.y[static_cast<Eigen::Index>(i)] = p.y;
  }
  return state;
}

bool ConditionalSampler::feasible_at(const LatentState& state, std::size_t site) const {
  const auto i = static_cast<Eigen::Index>(site);
  return map_point(map_, state.x[i], state.y[i]) == event_.categories[site];
}

std::size_t ConditionalSampler::violations(const LatentState& state) const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!feasible_at(state, i)) ++count;
  }
  return count;
}

std::size_t ConditionalSampler::standard_scan(LatentState& state, Rng& rng) const {
  std::size_t rejected = 0;
  for (std::size_t site : random_order(size(), rng)) {
    const auto i = static_cast<Eigen::Index>(site);
    const Point2 old{state.x[i], state.y[i]};
    const Point2 fresh = sample_pair_in_union(
        *site_slicer_[site], {loo_x_.mean(i, state.x), loo_y_.mean(i, state.y)},
        {loo_x_.sd(i), loo_y_.sd(i)}, old, options_.inner_sweeps, rng);
    state.x[i] = fresh.x;
    state.y[i] = fresh.y;
    if (!feasible_at(state, site)) {
      state.x[i] = old.x;
      state.y[i] = old.y;
      ++rejected;
    }
  }
  return rejected;
}

IntervalUnion ConditionalSampler::pivot_slice(const LatentState& state, std::size_t pivot,
                                              double fixed, bool solve_for_v) const {
  Scratch scratch;
  std::vector<Interval> out;
  pivot_domain(state, pivot, fixed, solve_for_v, out, scratch);
  return IntervalUnion(std::move(out));
}

void ConditionalSampler::pivot_domain(const LatentState& state, std::size_t pivot, double fixed,
                                      bool solve_for_v, std::vector<Interval>& out,
                                      Scratch& scratch) const {
  const auto b = static_cast<Eigen::Index>(pivot);
  // Solving for u: the moving coordinate is x, the fixed one y (and vice versa).
  const Eigen::VectorXd& moving = solve_for_v ? state.y : state.x;
  const Eigen::VectorXd& other = solve_for_v ? state.x : state.y;
  const double moving_pivot = moving[b];
  const double other_shift = fixed - other[b];
  constexpr double kInf = std::numeric_limits<double>::infinity();

  out.assign(1, Interval{-kInf, kInf});
  for (std::size_t site = 0; site < size() && !out.empty(); ++site) {
    const auto a = static_cast<Eigen::Index>(site);
    const double c_moving = solve_for_v ? coefficient_y(site, pivot) : coefficient_x(site, pivot);
    const double c_other = solve_for_v ? coefficient_x(site, pivot) : coefficient_y(site, pivot);
    const double level = other[a] + other_shift * c_other;
    if (solve_for_v) {
      site_slicer_[site]->slice_v(level, scratch.slice);
    } else {
      site_slicer_[site]->slice_u(level, scratch.slice);
    }
    if (c_moving == 0.0) {
      // The site's moving coordinate does not depend on the innovation.
      const double t = moving[a];
      const bool inside = std::any_of(scratch.slice.begin(), scratch.slice.end(),
                                      [t](const Interval& iv) {
                                        return t >= iv.lo - 1e-12 && t <= iv.hi + 1e-12;
                                      });
      if (!inside) out.clear();
      continue;
    }
    scratch.mapped.clear();
    for (const Interval& iv : scratch.slice) {
      const double lo = moving_pivot + (iv.lo - moving[a]) / c_moving;
      const double hi = moving_pivot + (iv.hi - moving[a]) / c_moving;
      scratch.mapped.push_back(c_moving > 0.0 ? Interval{lo, hi} : Interval{hi, lo});
    }
    if (c_moving < 0.0) std::reverse(scratch.mapped.begin(), scratch.mapped.end());
    // Both lists are sorted and disjoint.
    scratch.merged.clear();
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < out.size() && j < scratch.mapped.size()) {
      const double lo = std::max(out[i].lo, scratch.mapped[j].lo);
      const double hi = std::min(out[i].hi, scratch.mapped[j].hi);
      if (lo <= hi) scratch.merged.push_back({lo, hi});
      if (out[i].hi < scratch.mapped[j].hi) {
        ++i;
      } else {
        ++j;
      }
    }
    out.swap(scratch.merged);
  }
}

void ConditionalSampler::apply_pivot(LatentState& state, std::size_t pivot, double u,
                                     double v) const {
  const auto b = static_cast<Eigen::Index>(pivot);
  const double du = u - state.x[b];
  const double dv = v - state.y[b];
  for (std::size_t site = 0; site < size(); ++site) {
    const auto a = static_cast<Eigen::Index>(site);
    state.x[a] += du * coefficient_x(site, pivot);
    state.y[a] += dv * coefficient_y(site, pivot);
  }
  // C(b, b) = 1 makes the pivot land exactly on the innovation.
  state.x[b] = u;
  state.y[b] = v;
}

std::size_t ConditionalSampler::propagative_scan(LatentState& state, Rng& rng) const {
  std::size_t rejected = 0;
  LatentState candidate = state;
  Scratch scratch;
  std::vector<Interval> domain;
  for (std::size_t pivot : random_order(size(), rng)) {
    const auto b = static_cast<Eigen::Index>(pivot);
    double u = state.x[b];
    double v = state.y[b];
    for (int sweep = 0; sweep < options_.inner_sweeps; ++sweep) {
      try {
        pivot_domain(state, pivot, v, false, domain, scratch);
        u = sample_truncated_normal(0.0, 1.0, domain, rng);
      } catch (const EmptyDomain&) {
      }
      try {
        pivot_domain(state, pivot, u, true, domain, scratch);
        v = sample_truncated_normal(0.0, 1.0, domain, rng);
      } catch (const EmptyDomain&) {
      }
    }
    candidate.x = state.x;
    candidate.y = state.y;
    apply_pivot(candidate, pivot, u, v);
    if (violations(candidate) == 0) {
      state.x.swap(candidate.x);
      state.y.swap(candidate.y);
    } else {
      ++rejected;
    }
  }
  return rejected;
}

// ---------------------------------------------------------------------------

ConditionalRun run_conditional(const ConditionalSampler& sampler,
                               const ConditionalRunOptions& options, Rng& rng) {
  return run_conditional(sampler, sampler.init_state(), options, rng);
}

ConditionalRun run_conditional(const ConditionalSampler& sampler, LatentState start,
                               const ConditionalRunOptions& options, Rng& rng) {
  if (start.x.size() != static_cast<Eigen::Index>(sampler.size()) ||
      start.y.size() != start.x.size()) {
    throw LengthMismatch("run_conditional: start state and event differ in length");
  }
  ConditionalRun run;
  run.state = std::move(start);
  run.violations += sampler.violations(run.state);
  auto record = [&](int k) {
    run.diagnostics.push_back(
        {k, sampler.log_density_x(run.state), sampler.log_density_y(run.state)});
  };
  record(0);
  if (options.iterations <= 0) return run;

  for (int w = 0; w < options.sampler.warmup_scans; ++w) {
    run.rejected += sampler.standard_scan(run.state, rng);
    run.violations += sampler.violations(run.state);
  }
  for (int k = 1; k <= options.iterations; ++k) {
    run.rejected += sampler.propagative_scan(run.state, rng);
    run.violations += sampler.violations(run.state);
    run.rejected += sampler.standard_scan(run.state, rng);
    run.violations += sampler.violations(run.state);
    run.state.iteration = k;
    record(k);
    if (options.thin > 0 && k > options.burn_in && (k - options.burn_in) % options.thin == 0) {
      run.kept.push_back(run.state);
    }
  }
  return run;
}

ConditionalRun run_conditional(const TruncationMap& map, const Event& event,
                               const CovarianceModel& model_x, const CovarianceModel& model_y,
                               const ConditionalRunOptions& options, Rng& rng) {
  const ConditionalSampler sampler(map, triangulate(map), event, model_x, model_y,
                                   options.sampler);
  return run_conditional(sampler, options, rng);
}

}  // namespace tpg
