#pragma once

// Truncation-map estimation: prior sampling, birth/death/move proposals,
// Monte-Carlo pattern mismatch, simulated annealing and a Metropolis-Hastings
// variant.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "tpg/bme.hpp"
#include "tpg/grf.hpp"
#include "tpg/tessellation.hpp"

namespace tpg {

struct PriorSpec {
  /// Poisson mean of the node count.
  double mu = 20.0;
  CategorySet categories = CategorySet::range(4);
  /// Whether a move event redraws the node's category as well as its position.
  bool move_resamples_category = true;

  void validate() const;
};

/// Poisson(mu) pmf at n, computed in log space.
double poisson_pmf(double mu, int n);

TruncationMap sample_prior(const PriorSpec& prior, Rng& rng);

enum class ProposalKind { birth, move, death };

struct Proposal {
  TruncationMap map;
  ProposalKind kind;
  /// Index of the node that was added, moved or removed.
  std::size_t node;
  /// Node before a move or death (equal to the new node on birth).
  Point2 old_position;
  Point2 new_position;
};

/// Probabilities of (death, move, birth) from a map with `count` nodes:
/// proportional to P_mu(count-1), P_mu(count), P_mu(count+1); death is
/// excluded when count == 1.
std::array<double, 3> event_weights(double mu, std::size_t count);

Proposal propose(const TruncationMap& current, const PriorSpec& prior, Rng& rng);

/// Pattern covariances and Monte-Carlo size for the mismatch function.
struct MismatchConfig {
  int n = 20000;
  Eigen::MatrixXd cov_x;
  Eigen::MatrixXd cov_y;
  /// Added to every target cell before renormalizing; 0 keeps zero cells hard.
  double floor = 0.0;

  /// Covariances of the five pattern sites under the given models.
  static MismatchConfig for_models(const CovarianceModel& x, const CovarianceModel& y,
                                   int n);
};

/// Precomputed Cholesky factors for repeated mismatch evaluations.
class MismatchEvaluator {
 public:
  MismatchEvaluator(PatternPmf target, const MismatchConfig& config);

  const PatternPmf& target() const { return target_; }
  int sample_count() const { return n_; }

  /// Relative frequencies of mapped pattern tuples over n fresh samples.
  std::vector<double> tabulate(const TruncationMap& map, Rng& rng) const;

  /// KL(f_hat || p*); +inf when the map lacks a category that the target's
  /// center marginal charges.
  double operator()(const TruncationMap& map, Rng& rng) const;

 private:
  PatternPmf target_;
  int n_;
  Eigen::Matrix<double, 5, 5> lx_;
  Eigen::Matrix<double, 5, 5> ly_;
  std::vector<bool> required_;
  std::vector<double> reference_;
};

double mismatch(const TruncationMap& map, const PatternPmf& target,
                const MismatchConfig& config, Rng& rng);

struct AnnealSchedule {
  double t0 = 500.0;
  double alpha = 0.9995;
  int iterations = 9000;

  double temperature(int iteration) const;
  void validate() const;
};

struct TraceRow {
  int iteration;
  double f;
  std::size_t node_count;
  double temperature;
  bool accepted;
};

struct AnnealResult {
  TruncationMap best;
  double best_f;
  TruncationMap final_state;
  std::vector<TraceRow> trace;
  /// States captured at the requested snapshot iterations.
  std::vector<std::pair<int, TruncationMap>> snapshots;
};

/// Mismatch seeded per evaluation; `evaluation` 0 is the initial state and
/// evaluation i+1 the proposal of iteration i.
using MismatchFunction = std::function<double(const TruncationMap&, std::uint64_t evaluation)>;

MismatchFunction seeded_mismatch(const MismatchEvaluator& evaluator, std::uint64_t seed);

AnnealResult anneal(const TruncationMap& initial, const MismatchFunction& f,
                    const PriorSpec& prior, const AnnealSchedule& schedule, Rng& rng,
                    const std::vector<int>& snapshot_iterations = {});

struct McmcResult {
  std::vector<TruncationMap> chain;
  std::vector<TraceRow> trace;
  std::size_t accepted = 0;
};

/// Log of the Metropolis-Hastings ratio for a proposal targeting
/// prior(theta) * exp(-F(theta)).
double mh_log_ratio(const TruncationMap& current, const Proposal& proposal,
                    const PriorSpec& prior, double f_current, double f_proposal);

McmcResult metropolis_hastings(const TruncationMap& initial, const MismatchFunction& f,
                               const PriorSpec& prior, int iterations, Rng& rng);

}  // namespace tpg
