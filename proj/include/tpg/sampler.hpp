#pragma once

// Conditional simulation of the paired latent Gaussian vectors given
// categorical observations: feasible initialization, the standard Gibbs scan
// and the propagative (pivot) scan.

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "tpg/grf.hpp"
#include "tpg/tessellation.hpp"

namespace tpg {

class UnmappableCategory : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Categorical observations at distinct grid sites.
struct Event {
  std::vector<Site> sites;
  std::vector<Category> categories;

  std::size_t size() const { return sites.size(); }
  void validate(const CategorySet& categories) const;
  /// Sub-event restricted to the given positions.
  Event subset(const std::vector<std::size_t>& keep) const;
};

struct LatentState {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  int iteration = 0;
};

struct SamplerOptions {
  /// Coordinate-Gibbs sweeps used to draw each constrained pair.
  int inner_sweeps = 3;
  /// Standard-only scans before the alternating iterations start.
  int warmup_scans = 5;
  /// Coefficients at or below this magnitude are treated as zero in the
  /// propagative update.
  double zero_coefficient = 1e-12;
};

/// Per-event sampler: holds the factorizations and region lookups shared by
/// all scans. Immutable after construction.
class ConditionalSampler {
 public:
  ConditionalSampler(TruncationMap map, CategoryRegions regions, Event event,
                     const CovarianceModel& model_x, const CovarianceModel& model_y,
                     SamplerOptions options = {});

  const Event& event() const { return event_; }
  std::size_t size() const { return event_.size(); }
  const Eigen::MatrixXd& cov_x() const { return cov_x_; }
  const Eigen::MatrixXd& cov_y() const { return cov_y_; }

  /// Every site of one category starts at the centroid of that category's
  /// heaviest triangle.
  LatentState init_state() const;

  /// Number of sites whose latent pair does not map to its observation.
  std::size_t violations(const LatentState& state) const;
  bool feasible_at(const LatentState& state, std::size_t site) const;

  /// One single-site Gibbs scan in random order; returns the number of
  /// numerically infeasible draws that were rejected.
  std::size_t standard_scan(LatentState& state, Rng& rng) const;

  /// One propagative scan (every site used once as pivot, random order);
  /// returns the number of rejected pivot updates.
  std::size_t propagative_scan(LatentState& state, Rng& rng) const;

  /// Feasible innovations u for pivot `pivot` with v fixed (or v for u fixed
  /// when `solve_for_v`).
  IntervalUnion pivot_slice(const LatentState& state, std::size_t pivot, double fixed,
                            bool solve_for_v) const;

  /// Apply the pivot update with innovations (u, v) to every site.
  void apply_pivot(LatentState& state, std::size_t pivot, double u, double v) const;

  double log_density_x(const LatentState& state) const { return fx_.log_density(state.x); }
  double log_density_y(const LatentState& state) const { return fy_.log_density(state.y); }

 private:
  double coefficient_x(std::size_t a, std::size_t b) const;
  double coefficient_y(std::size_t a, std::size_t b) const;
  struct Scratch {
    std::vector<Interval> slice, mapped, merged;
  };
  void pivot_domain(const LatentState& state, std::size_t pivot, double fixed, bool solve_for_v,
                    std::vector<Interval>& out, Scratch& scratch) const;

  TruncationMap map_;
  CategoryRegions regions_;
  Event event_;
  SamplerOptions options_;
  std::vector<UnionSlicer> slicers_;
  std::vector<const UnionSlicer*> site_slicer_;
  Eigen::MatrixXd cov_x_;
  Eigen::MatrixXd cov_y_;
  Factorization fx_;
  Factorization fy_;
  LeaveOneOut loo_x_;
  LeaveOneOut loo_y_;
};

struct Diagnostic {
  int iteration;
  double logdens_x;
  double logdens_y;
};

struct ConditionalRunOptions {
  int iterations = 200;
  int burn_in = 100;
  /// Keep every `thin`-th state after burn-in (0 keeps nothing).
  int thin = 0;
  SamplerOptions sampler;
};

struct ConditionalRun {
  LatentState state;
  std::vector<Diagnostic> diagnostics;
  std::vector<LatentState> kept;
  /// Feasibility violations found after any update (expected zero).
  std::size_t violations = 0;
  /// Numerically infeasible draws rejected by the samplers.
  std::size_t rejected = 0;
};

/// Initialization, warm-up standard scans, then per iteration one
/// propagative scan followed by one standard scan. Diagnostics hold the
/// Gaussian log-densities of x and y after every iteration (iteration 0 is
/// the initial state).
ConditionalRun run_conditional(const ConditionalSampler& sampler,
                               const ConditionalRunOptions& options, Rng& rng);
/// Same chain started from a given feasible state instead of init_state().
ConditionalRun run_conditional(const ConditionalSampler& sampler, LatentState start,
                               const ConditionalRunOptions& options, Rng& rng);

ConditionalRun run_conditional(const TruncationMap& map, const Event& event,
                               const CovarianceModel& model_x, const CovarianceModel& model_y,
                               const ConditionalRunOptions& options, Rng& rng);

/// Fisher-Yates permutation of 0..n-1 from the library's portable draws.
std::vector<std::size_t> random_order(std::size_t n, Rng& rng);

}  // namespace tpg
