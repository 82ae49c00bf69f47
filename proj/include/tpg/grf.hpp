#pragma once

// Stationary Gaussian random vectors on grid sites: covariance models,
// jittered Cholesky factorizations, unconditional simulation and simple
// kriging.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tpg/rng.hpp"

namespace tpg {

class FactorizationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CovarianceKind { gaussian, exponential, spherical };

/// How the range parameter `a` enters the correlation function.
enum class RangeConvention {
  /// exp(-(h/a)^2) for the gaussian kind, exp(-h/a) for the exponential kind.
  scale,
  /// Practical range: exp(-3 (h/a)^2), exp(-3 h/a).
  practical,
};

struct CovarianceModel {
  CovarianceKind kind = CovarianceKind::gaussian;
  double range = 10.0;
  RangeConvention convention = RangeConvention::scale;

  /// Correlation at separation h >= 0 (unit sill).
  double operator()(double h) const;

  void validate() const;

  friend bool operator==(const CovarianceModel&, const CovarianceModel&) = default;
};

std::string to_string(CovarianceKind kind);
CovarianceKind covariance_kind_from_string(const std::string& name);
std::string to_string(RangeConvention convention);
RangeConvention range_convention_from_string(const std::string& name);

/// Integer grid location (unit spacing).
struct Site {
  int x = 0;
  int y = 0;

  friend bool operator==(const Site&, const Site&) = default;
  friend auto operator<=>(const Site&, const Site&) = default;
};

double distance(Site a, Site b);

/// Throws std::invalid_argument if two sites coincide.
void require_distinct(std::span<const Site> sites);

Eigen::MatrixXd covariance_matrix(std::span<const Site> sites, const CovarianceModel& model);
Eigen::MatrixXd cross_covariance(std::span<const Site> rows, std::span<const Site> cols,
                                 const CovarianceModel& model);

/// Cholesky factor of C + jitter*I, with jitter escalated from 1e-12 to 1e-6
/// by factors of ten until the factorization succeeds.
class Factorization {
 public:
  static constexpr double kMinJitter = 1e-12;
  static constexpr double kMaxJitter = 1e-6;

  explicit Factorization(const Eigen::MatrixXd& cov);

  Eigen::Index size() const { return llt_.matrixL().rows(); }
  double jitter() const { return jitter_; }
  Eigen::MatrixXd lower() const { return llt_.matrixL(); }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return llt_.solve(rhs); }
  double log_det() const;

  /// Draw from N(0, C + jitter*I).
  Eigen::VectorXd sample(Rng& rng) const;

  /// log N(v; 0, C + jitter*I).
  double log_density(const Eigen::VectorXd& v) const;

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

Eigen::VectorXd simulate_unconditional(std::span<const Site> sites,
                                       const CovarianceModel& model, Rng& rng);

struct KrigingEstimate {
  double mean = 0.0;
  double var = 1.0;
};

/// Simple (known zero mean) kriging weights for one target location given a
/// fixed set of conditioning sites; reusable across data vectors.
class SimpleKriging {
 public:
  SimpleKriging(std::span<const Site> cond_sites, Site target, const CovarianceModel& model);

  KrigingEstimate estimate(const Eigen::VectorXd& cond_values) const;
  const Eigen::VectorXd& weights() const { return weights_; }
  double variance() const { return var_; }

 private:
  Eigen::VectorXd weights_;
  double var_ = 1.0;
};

KrigingEstimate krige(std::span<const Site> cond_sites, const Eigen::VectorXd& cond_values,
                      const CovarianceModel& model, Site target);

/// Full conditionals of every component given all others, read off the
/// precision matrix: mean_i = -sum_{j != i} Q_ij v_j / Q_ii, sd_i = Q_ii^{-1/2}.
class LeaveOneOut {
 public:
  explicit LeaveOneOut(const Factorization& factorization);

  double mean(Eigen::Index i, const Eigen::VectorXd& values) const;
  double sd(Eigen::Index i) const { return sd_[i]; }

 private:
  Eigen::MatrixXd precision_;
  Eigen::VectorXd sd_;
};

}  // namespace tpg
