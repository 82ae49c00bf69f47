#include "tpg/grf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tpg {

double CovarianceModel::operator()(double h) const {
  const double r = h / range;
  const double factor = convention == RangeConvention::practical ? 3.0 : 1.0;
  switch (kind) {
    case CovarianceKind::gaussian:
      return std::exp(-factor * r * r);
    case CovarianceKind::exponential:
      return std::exp(-factor * r);
    case CovarianceKind::spherical:
      return r >= 1.0 ? 0.0 : 1.0 - 1.5 * r + 0.5 * r * r * r;
  }
  return 0.0;
}

void CovarianceModel::validate() const {
  if (!(range > 0.0) || !std::isfinite(range)) {
    throw std::invalid_argument("covariance range must be positive and finite");
  }
}

std::string to_string(CovarianceKind kind) {
  switch (kind) {
    case CovarianceKind::gaussian:
      return "gaussian";
    case CovarianceKind::exponential:
      return "exponential";
    case CovarianceKind::spherical:
      return "spherical";
  }
  return "gaussian";
}

CovarianceKind covariance_kind_from_string(const std::string& name) {
  if (name == "gaussian") return CovarianceKind::gaussian;
  if (name == "exponential") return CovarianceKind::exponential;
  if (name == "spherical") return CovarianceKind::spherical;
  throw std::invalid_argument("unknown covariance kind: " + name);
}

std::string to_string(RangeConvention convention) {
  return convention == RangeConvention::practical ? "practical" : "exp_minus_h_over_a_sq";
}

RangeConvention range_convention_from_string(const std::string& name) {
  if (name == "exp_minus_h_over_a_sq" || name == "scale") return RangeConvention::scale;
  if (name == "practical") return RangeConvention::practical;
  throw std::invalid_argument("unknown range convention: " + name);
}

double distance(Site a, Site b) {
  return std::hypot(static_cast<double>(a.x - b.x), static_cast<double>(a.y - b.y));
}

void require_distinct(std::span<const Site> sites) {
  std::vector<Site> sorted(sites.begin(), sites.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("site set contains duplicate locations");
  }
}

Eigen::MatrixXd covariance_matrix(std::span<const Site> sites, const CovarianceModel& model) {
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      c(i, j) = c(j, i) = model(distance(sites[i], sites[j]));
    }
  }
  return c;
}

Eigen::MatrixXd cross_covariance(std::span<const Site> rows, std::span<const Site> cols,
                                 const CovarianceModel& model) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          model(distance(rows[i], cols[j]));
    }
  }
  return c;
}

// ---------------------------------------------------------------------------

Factorization::Factorization(const Eigen::MatrixXd& cov) {
  const Eigen::Index n = cov.rows();
  for (double jitter = kMinJitter; jitter <= kMaxJitter * 1.0001; jitter *= 10.0) {
    Eigen::MatrixXd shifted = cov;
    shifted.diagonal().array() += jitter;
    llt_.compute(shifted);
    if (llt_.info() == Eigen::Success) {
      const Eigen::VectorXd diag = llt_.matrixLLT().diagonal();
      if (n == 0 || (diag.array() > 0.0).all()) {
        jitter_ = jitter;
        return;
      }
    }
  }
  throw FactorizationFailure("covariance matrix not positive definite after jitter 1e-6");
}

double Factorization::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Eigen::VectorXd Factorization::sample(Rng& rng) const {
  Eigen::VectorXd z(size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = standard_normal(rng);
  return llt_.matrixL() * z;
}

double Factorization::log_density(const Eigen::VectorXd& v) const {
  const Eigen::VectorXd w = llt_.matrixL().solve(v);
  const double n = static_cast<double>(v.size());
  return -0.5 * w.squaredNorm() - 0.5 * log_det() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd simulate_unconditional(std::span<const Site> sites,
                                       const CovarianceModel& model, Rng& rng) {
  return Factorization(covariance_matrix(sites, model)).sample(rng);
}

// ---------------------------------------------------------------------------

SimpleKriging::SimpleKriging(std::span<const Site> cond_sites, Site target,
                             const CovarianceModel& model) {
  if (cond_sites.empty()) {
    weights_.resize(0);
    var_ = 1.0;
    return;
  }
  const Site target_arr[] = {target};
  const Eigen::VectorXd c0 = cross_covariance(cond_sites, target_arr, model).col(0);
  const Factorization f(covariance_matrix(cond_sites, model));
  weights_ = f.solve(c0);
  var_ = std::clamp(1.0 - c0.dot(weights_), 0.0, 1.0);
}

KrigingEstimate SimpleKriging::estimate(const Eigen::VectorXd& cond_values) const {
  if (cond_values.size() != weights_.size()) {
    throw std::invalid_argument("kriging: value vector length differs from conditioning set");
  }
  if (weights_.size() == 0) return {0.0, 1.0};
  return {weights_.dot(cond_values), var_};
}

KrigingEstimate krige(std::span<const Site> cond_sites, const Eigen::VectorXd& cond_values,
                      const CovarianceModel& model, Site target) {
  return SimpleKriging(cond_sites, target, model).estimate(cond_values);
}

// ---------------------------------------------------------------------------

LeaveOneOut::LeaveOneOut(const Factorization& factorization)
    : precision_(factorization.solve(Eigen::MatrixXd(
          Eigen::MatrixXd::Identity(factorization.size(), factorization.size())))) {
  precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
  sd_ = precision_.diagonal().array().rsqrt();
}

double LeaveOneOut::mean(Eigen::Index i, const Eigen::VectorXd& values) const {
  const double qii = precision_(i, i);
  const double dot = precision_.row(i).dot(values) - qii * values[i];
  return -dot / qii;
}

}  // namespace tpg
