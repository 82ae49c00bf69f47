#pragma once

// Maximum-entropy distribution of the five-point pattern (center and its four
// lattice neighbors) subject to unit-lag bivariate marginals, computed by
// iterative proportional fitting (Deming-Stephan).

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "tpg/grf.hpp"

namespace tpg {

/// Positions inside the pattern. Tuple indices are base-K little-endian over
/// this order: index = z0 + K z1 + K^2 z2 + K^3 z3 + K^4 z4.
enum PatternPosition : int { kCenter = 0, kPlusX = 1, kMinusX = 2, kPlusY = 3, kMinusY = 4 };

inline constexpr int kPatternSize = 5;

/// Lattice offset of each pattern position.
inline constexpr std::array<Site, kPatternSize> kPatternOffsets{
    Site{0, 0}, Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}};

class AbsoluteContinuityViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense pmf over category tuples of the pattern, |C|^5 entries.
class PatternPmf {
 public:
  PatternPmf(int num_categories, std::vector<double> table);
  static PatternPmf uniform(int num_categories);

  int num_categories() const { return k_; }
  std::size_t size() const { return table_.size(); }
  std::span<const double> table() const { return table_; }
  double operator[](std::size_t index) const { return table_[index]; }

  /// Category index (0..K-1) at `position` of tuple `index`.
  int digit(std::size_t index, int position) const;
  std::size_t index_of(const std::array<int, kPatternSize>& digits) const;

  double total() const;

 private:
  int k_;
  std::vector<double> table_;
};

/// Pair of pattern positions; the pair pmf is indexed (z_first, z_second).
struct PositionPair {
  int first;
  int second;

  friend bool operator==(const PositionPair&, const PositionPair&) = default;
};

/// A constrained pair together with its target pmf (K x K, rows = first).
struct PairConstraint {
  PositionPair pair;
  Eigen::MatrixXd target;
};

/// Unit-lag bivariate pmfs: pi_h10(a, b) = P(a at s, b at s + (1,0)),
/// pi_h01(a, b) = P(a at s, b at s + (0,1)).
struct UnitLagMarginals {
  Eigen::MatrixXd pi_h10;
  Eigen::MatrixXd pi_h01;

  int num_categories() const { return static_cast<int>(pi_h10.rows()); }
  /// Throws std::invalid_argument unless both are square pmfs of equal size.
  void validate() const;
};

/// The four adjacent (center, neighbor) constraints implied by the marginals.
/// Left and lower neighbors use the lag tables with the neighbor first.
std::vector<PairConstraint> pattern_constraints(const UnitLagMarginals& marginals);

/// Empirical unit-lag pmfs of a categorical grid stored row-major with
/// `nx` columns. With `periodic`, pairs wrap around the grid edges, which
/// makes every pmf's row and column sums equal the global proportions.
UnitLagMarginals marginals_from_field(std::span<const int> category_index, int nx, int ny,
                                      int num_categories, bool periodic = true);

Eigen::MatrixXd marginalize(const PatternPmf& p, PositionPair pair);

/// I-projection of p onto the set of pmfs whose `pair` marginal is `target`.
PatternPmf ipf_project(const PatternPmf& p, PositionPair pair, const Eigen::MatrixXd& target);

double entropy(std::span<const double> p);
inline double entropy(const PatternPmf& p) { return entropy(p.table()); }

/// D(q || p); +inf when q charges a cell where p vanishes.
double kl_divergence(std::span<const double> q, std::span<const double> p);
inline double kl_divergence(const PatternPmf& q, const PatternPmf& p) {
  return kl_divergence(q.table(), p.table());
}

struct DemingStephanOptions {
  int max_sweeps = 100000;
  double tol = 1e-10;
  /// Pick constraints uniformly at random instead of cycling through them.
  bool random_order = false;
  std::uint64_t seed = 0;
};

struct DemingStephanResult {
  PatternPmf pmf;
  /// Largest absolute marginal deviation over all constraints.
  double deviation;
  int sweeps;
};

/// Thrown when the sweep budget is exhausted; carries the best iterate.
class NotConverged : public std::runtime_error {
 public:
  explicit NotConverged(DemingStephanResult best);
  const DemingStephanResult& best() const { return best_; }

 private:
  DemingStephanResult best_;
};

double max_marginal_deviation(const PatternPmf& p, std::span<const PairConstraint> constraints);

DemingStephanResult deming_stephan(std::span<const PairConstraint> constraints,
                                   const PatternPmf& init,
                                   const DemingStephanOptions& options = {});

}  // namespace tpg
