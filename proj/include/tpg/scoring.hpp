#pragma once

// Logarithmic scoring of a fitted model against an observed event, using
// predictive distributions built from random unordered subsets.

#include <cstdint>
#include <span>
#include <vector>

#include "tpg/grf.hpp"
#include "tpg/sampler.hpp"
#include "tpg/tessellation.hpp"

namespace tpg {

/// log p[index]; -inf when the entry is zero.
double log_score(std::span<const double> pmf, std::size_t index);

/// Add-one smoothing of category counts: (count + 1) / (m + K).
std::vector<double> laplace_smoothed(std::span<const int> counts);

struct ScoringOptions {
  int n_subsets = 50;
  /// Replicates per subset.
  int m = 50;
  /// Conditional chain used for each subset; replicates are thinned states
  /// taken after burn-in.
  ConditionalRunOptions chain{};
  /// When set, each replicate runs its own chain and uses its final state.
  bool independent_replicates = false;
  int threads = 1;
};

/// Model being scored.
struct ScoredModel {
  const TruncationMap& map;
  const CategoryRegions& regions;
  const CovarianceModel& model_x;
  const CovarianceModel& model_y;
};

/// Predictive pmf of the category at `target` given the observations in
/// `subset` (which must not contain `target`).
std::vector<double> predict_at(const ScoredModel& model, Site target, const Event& subset,
                               const ScoringOptions& options, Rng& rng);

struct SiteScore {
  Site site;
  Category category;
  /// Mean over subsets of the log score of the smoothed predictive pmf.
  double score = 0.0;
  /// Predictive pmf averaged over subsets.
  std::vector<double> mean_pmf;
  int subsets = 0;
};

struct ScoreReport {
  double total = 0.0;
  std::vector<SiteScore> sites;
  int n_subsets = 0;
  int m = 0;
  std::uint64_t seed = 0;
};

/// Sum over event sites of the expected log score under uniformly random
/// subsets of the remaining observations.
///
/// Subsets are drawn uniformly from the power set of the whole event and
/// each one conditions a single chain; a subset serves every site it leaves
/// out, and each site uses the first `n_subsets` subsets that exclude it.
/// Given exclusion, such a subset is uniform over the power set of the other
/// sites. Each subset has its own stream derived from `seed`, so the report
/// does not depend on the thread count.
ScoreReport unordered_score(const ScoredModel& model, const Event& event,
                            const ScoringOptions& options, std::uint64_t seed);

}  // namespace tpg
