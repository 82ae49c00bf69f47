#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "tpg/grf.hpp"

using namespace tpg;

namespace {

std::vector<Site> grid(int nx, int ny) {
  std::vector<Site> s;
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) s.push_back({x, y});
  }
  return s;
}

}  // namespace

TEST_CASE("covariance functions") {
  const CovarianceModel g{CovarianceKind::gaussian, 10.0, RangeConvention::scale};
  CHECK(g(0.0) == 1.0);
  CHECK(g(10.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  const CovarianceModel gp{CovarianceKind::gaussian, 10.0, RangeConvention::practical};
  CHECK(gp(10.0) == doctest::Approx(std::exp(-3.0)).epsilon(1e-15));
  const CovarianceModel e{CovarianceKind::exponential, 4.0, RangeConvention::scale};
  CHECK(e(2.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  const CovarianceModel s{CovarianceKind::spherical, 4.0, RangeConvention::scale};
  CHECK(s(2.0) == doctest::Approx(1.0 - 1.5 * 0.5 + 0.5 * 0.125).epsilon(1e-15));
  CHECK(s(4.0) == 0.0);
  CHECK(s(9.0) == 0.0);
  CHECK_THROWS((CovarianceModel{CovarianceKind::gaussian, -1.0, RangeConvention::scale}.validate()));
  CHECK(covariance_kind_from_string(to_string(CovarianceKind::spherical)) ==
        CovarianceKind::spherical);
  CHECK(range_convention_from_string(to_string(RangeConvention::practical)) ==
        RangeConvention::practical);
  CHECK_THROWS(covariance_kind_from_string("matern"));
}

TEST_CASE("covariance matrices") {
  const auto sites = grid(4, 3);
  const CovarianceModel m{CovarianceKind::exponential, 2.0, RangeConvention::scale};
  const Eigen::MatrixXd c = covariance_matrix(sites, m);
  CHECK((c - c.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < c.rows(); ++i) CHECK(c(i, i) == 1.0);
  CHECK(c(0, 5) == doctest::Approx(m(std::sqrt(2.0))));
  const std::vector<Site> dup{{0, 0}, {1, 0}, {0, 0}};
  CHECK_THROWS_AS(require_distinct(dup), std::invalid_argument);
  const Eigen::MatrixXd cross = cross_covariance(sites, std::vector<Site>{{10, 10}}, m);
  CHECK(cross.rows() == 12);
  CHECK(cross.cols() == 1);
}

TEST_CASE("factorization") {
  SUBCASE("well conditioned matrix needs minimal jitter") {
    const Eigen::MatrixXd c = covariance_matrix(
        grid(3, 3), {CovarianceKind::exponential, 1.0, RangeConvention::scale});
    const Factorization f(c);
    CHECK(f.jitter() == Factorization::kMinJitter);
    const Eigen::MatrixXd l = f.lower();
    CHECK((l * l.transpose() - c).cwiseAbs().maxCoeff() < 1e-10);
    // log density against the dense formula.
    Eigen::VectorXd v(9);
    for (int i = 0; i < 9; ++i) v[i] = 0.1 * i - 0.4;
    const Eigen::MatrixXd cj = c + f.jitter() * Eigen::MatrixXd::Identity(9, 9);
    const double quad = v.dot(cj.inverse() * v);
    const double logdet = std::log(cj.determinant());
    const double expected = -0.5 * (quad + logdet + 9 * std::log(2.0 * std::numbers::pi));
    CHECK(f.log_density(v) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(f.log_det() == doctest::Approx(logdet).epsilon(1e-10));
  }
  SUBCASE("near-singular gaussian matrix still factors") {
    const Eigen::MatrixXd c = covariance_matrix(
        grid(1, 20), {CovarianceKind::gaussian, 10.0, RangeConvention::scale});
    const Factorization f(c);
    CHECK(f.jitter() >= Factorization::kMinJitter);
    CHECK(f.jitter() <= Factorization::kMaxJitter);
  }
  SUBCASE("indefinite matrix fails") {
    Eigen::MatrixXd c(2, 2);
    c << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(Factorization{c}, FactorizationFailure);
  }
}

TEST_CASE("unconditional simulation reproduces the covariance") {
  const std::vector<Site> sites{{0, 0}, {1, 0}, {3, 0}};
  const CovarianceModel m{CovarianceKind::gaussian, 2.0, RangeConvention::scale};
  const Eigen::MatrixXd c = covariance_matrix(sites, m);
  Rng rng(8);
  const int n = 100000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
  for (int r = 0; r < n; ++r) {
    const Eigen::VectorXd v = simulate_unconditional(sites, m, rng);
    acc += v * v.transpose();
  }
  acc /= n;
  // Standard error of a sample covariance is at most sqrt(2/n).
  CHECK((acc - c).cwiseAbs().maxCoeff() < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("simple kriging") {
  const std::vector<Site> cond{{0, 0}, {2, 0}, {0, 3}, {4, 4}};
  const CovarianceModel m{CovarianceKind::exponential, 3.0, RangeConvention::scale};
  Eigen::VectorXd values(4);
  values << 0.5, -1.0, 0.2, 1.4;
  const Site target{1, 1};

  // Dense oracle: mean = c^T C^-1 z, var = 1 - c^T C^-1 c.
  const Eigen::MatrixXd c = covariance_matrix(cond, m);
  const Eigen::VectorXd k = cross_covariance(cond, std::vector<Site>{target}, m).col(0);
  const Eigen::VectorXd w = c.inverse() * k;
  const KrigingEstimate est = krige(cond, values, m, target);
  CHECK(est.mean == doctest::Approx(w.dot(values)).epsilon(1e-9));
  CHECK(est.var == doctest::Approx(1.0 - w.dot(k)).epsilon(1e-9));

  const SimpleKriging sk(cond, target, m);
  CHECK((sk.weights() - w).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(sk.estimate(values).mean == doctest::Approx(est.mean));

  // Far from the data the prediction falls back to the prior.
  const KrigingEstimate far = krige(cond, values, m, Site{200, 200});
  CHECK(std::abs(far.mean) < 1e-12);
  CHECK(far.var == doctest::Approx(1.0));

  // No data: prior.
  const KrigingEstimate none = krige(std::vector<Site>{}, Eigen::VectorXd(0), m, target);
  CHECK(none.mean == 0.0);
  CHECK(none.var == 1.0);

  CHECK(est.var >= 0.0);
  CHECK(est.var <= 1.0);
}

TEST_CASE("leave-one-out conditionals match the dense partition") {
  const auto sites = grid(3, 2);
  const CovarianceModel m{CovarianceKind::spherical, 3.5, RangeConvention::scale};
  const Eigen::MatrixXd c = covariance_matrix(sites, m);
  const Factorization f(c);
  const LeaveOneOut loo(f);
  Eigen::VectorXd v(6);
  v << 0.3, -0.7, 1.1, 0.0, -0.2, 0.9;
  for (Eigen::Index i = 0; i < 6; ++i) {
    std::vector<Site> rest;
    Eigen::VectorXd rest_v(5);
    Eigen::Index r = 0;
    for (Eigen::Index j = 0; j < 6; ++j) {
      if (j == i) continue;
      rest.push_back(sites[static_cast<std::size_t>(j)]);
      rest_v[r++] = v[j];
    }
    const KrigingEstimate e = krige(rest, rest_v, m, sites[static_cast<std::size_t>(i)]);
    CHECK(loo.mean(i, v) == doctest::Approx(e.mean).epsilon(1e-8));
    CHECK(loo.sd(i) == doctest::Approx(std::sqrt(e.var)).epsilon(1e-8));
  }
}
