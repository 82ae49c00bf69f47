#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "tpg/bme.hpp"

using namespace tpg;

namespace {

std::size_t table_size(int k) {
  std::size_t n = 1;
  for (int i = 0; i < kPatternSize; ++i) n *= static_cast<std::size_t>(k);
  return n;
}

PatternPmf random_pmf(int k, Rng& rng) {
  std::vector<double> t(table_size(k));
  double total = 0.0;
  for (double& v : t) {
    v = -std::log(1.0 - uniform01(rng));  // Dirichlet(1) weights
    total += v;
  }
  for (double& v : t) v /= total;
  return PatternPmf(k, std::move(t));
}

// Direct loop over the table, digits decoded by hand.
Eigen::MatrixXd marginal_oracle(const PatternPmf& p, PositionPair pair) {
  const int k = p.num_categories();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::size_t rest = i;
    int digits[kPatternSize];
    for (int pos = 0; pos < kPatternSize; ++pos) {
      digits[pos] = static_cast<int>(rest % k);
      rest /= k;
    }
    m(digits[pair.first], digits[pair.second]) += p[i];
  }
  return m;
}

double entropy_oracle(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0) h -= v * std::log(v);
  }
  return h;
}

UnitLagMarginals marginals_of(const PatternPmf& p) {
  // The pattern's (center, +x) and (center, +y) pairs define both lag tables.
  return {marginal_oracle(p, {kCenter, kPlusX}), marginal_oracle(p, {kCenter, kPlusY})};
}

// The four adjacent pairs with targets read off p0 itself, so the set is feasible.
std::vector<PairConstraint> constraints_of(const PatternPmf& p0) {
  std::vector<PairConstraint> out;
  for (const PairConstraint& c : pattern_constraints(marginals_of(p0))) {
    out.push_back({c.pair, marginal_oracle(p0, c.pair)});
  }
  return out;
}

}  // namespace

TEST_CASE("tuple indexing") {
  const PatternPmf p = PatternPmf::uniform(3);
  CHECK(p.size() == 243);
  CHECK(p.index_of({1, 0, 2, 0, 1}) == 1 + 0 * 3 + 2 * 9 + 0 * 27 + 1 * 81);
  CHECK(p.digit(p.index_of({1, 0, 2, 0, 1}), kMinusX) == 2);
  CHECK(p.total() == doctest::Approx(1.0));
  CHECK_THROWS(PatternPmf(2, std::vector<double>(31, 1.0 / 31)));
  CHECK_THROWS(PatternPmf(2, std::vector<double>(32, 1.0)));
}

TEST_CASE("marginalize") {
  Rng rng(1);
  const PatternPmf p = random_pmf(3, rng);
  for (int a = 0; a < kPatternSize; ++a) {
    for (int b = 0; b < kPatternSize; ++b) {
      if (a == b) continue;
      const Eigen::MatrixXd m = marginalize(p, {a, b});
      CHECK((m - marginal_oracle(p, {a, b})).cwiseAbs().maxCoeff() < 1e-15);
      CHECK(m.sum() == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("entropy and divergence") {
  CHECK(entropy(PatternPmf::uniform(4)) == doctest::Approx(std::log(1024.0)).epsilon(1e-14));
  CHECK(std::log(1024.0) == doctest::Approx(6.93147).epsilon(1e-6));
  std::vector<double> point(1024, 0.0);
  point[17] = 1.0;
  CHECK(entropy(point) == 0.0);
  CHECK(kl_divergence(point, PatternPmf::uniform(4).table()) ==
        doctest::Approx(std::log(1024.0)).epsilon(1e-14));
  Rng rng(2);
  const PatternPmf p = random_pmf(4, rng);
  const PatternPmf q = random_pmf(4, rng);
  std::vector<double> pv(p.table().begin(), p.table().end());
  CHECK(std::abs(entropy(p) - entropy_oracle(pv)) < 1e-14 * 10);
  CHECK(kl_divergence(p, p) == 0.0);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) kl += q[i] * std::log(q[i] / p[i]);
  CHECK(kl_divergence(q, p) >= 0.0);
  CHECK(std::abs(kl_divergence(q, p) - kl) < 1e-13);
  std::vector<double> holes(pv);
  holes[3] = 0.0;
  CHECK(kl_divergence(pv, holes) == std::numeric_limits<double>::infinity());
  CHECK(std::isfinite(kl_divergence(holes, pv)));
}

TEST_CASE("I-projection") {
  Rng rng(4);
  SUBCASE("fixed point") {
    const PatternPmf p = random_pmf(3, rng);
    const PatternPmf q = ipf_project(p, {kCenter, kPlusY}, marginalize(p, {kCenter, kPlusY}));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-14));
  }
  SUBCASE("product update on two categories") {
    // Independent uniform p: the projection is target(z0, z1) / 8 for every tail.
    Eigen::MatrixXd target(2, 2);
    target << 0.4, 0.1, 0.2, 0.3;
    const PatternPmf q = ipf_project(PatternPmf::uniform(2), {kCenter, kPlusX}, target);
    for (std::size_t i = 0; i < q.size(); ++i) {
      CHECK(q[i] == doctest::Approx(target(q.digit(i, 0), q.digit(i, 1)) / 8.0).epsilon(1e-14));
    }
  }
  SUBCASE("target marginal reproduced") {
    const PatternPmf p = random_pmf(3, rng);
    const Eigen::MatrixXd target = marginalize(random_pmf(3, rng), {kMinusX, kCenter});
    const PatternPmf q = ipf_project(p, {kMinusX, kCenter}, target);
    CHECK((marginalize(q, {kMinusX, kCenter}) - target).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("absolute continuity") {
    std::vector<double> t(32, 1.0 / 24);
    for (std::size_t i = 0; i < 32; ++i) {
      if (i % 4 == 3) t[i] = 0.0;  // (z0, z1) = (1, 1) never occurs
    }
    const PatternPmf p(2, t);
    Eigen::MatrixXd target(2, 2);
    target << 0.25, 0.25, 0.25, 0.25;
    CHECK_THROWS_AS(ipf_project(p, {kCenter, kPlusX}, target), AbsoluteContinuityViolation);
  }
  SUBCASE("Pythagorean identity on random feasible q") {
    const PatternPmf p = random_pmf(3, rng);
    const PositionPair pair{kCenter, kMinusY};
    const Eigen::MatrixXd target = marginalize(random_pmf(3, rng), pair);
    const PatternPmf star = ipf_project(p, pair, target);
    for (int r = 0; r < 100; ++r) {
      const PatternPmf q = ipf_project(random_pmf(3, rng), pair, target);
      const double lhs = kl_divergence(q, p);
      const double rhs = kl_divergence(q, star) + kl_divergence(star, p);
      CHECK(lhs >= rhs - 1e-12);
      CHECK(std::abs(lhs - rhs) < 1e-12);
    }
  }
}

TEST_CASE("Deming-Stephan fitting") {
  Rng rng(7);
  SUBCASE("uniform marginals give the uniform pattern") {
    const PatternPmf u = PatternPmf::uniform(3);
    const auto c = pattern_constraints(marginals_of(u));
    const DemingStephanResult r = deming_stephan(c, u);
    CHECK(r.sweeps <= 1);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(r.pmf[i] == doctest::Approx(u[i]));
  }
  SUBCASE("single constraint is exact after one projection") {
    const PatternPmf p0 = random_pmf(2, rng);
    const std::vector<PairConstraint> c{{{kCenter, kPlusX}, marginalize(p0, {kCenter, kPlusX})}};
    const DemingStephanResult r = deming_stephan(c, PatternPmf::uniform(2));
    CHECK(r.sweeps == 1);
    CHECK(r.deviation < 1e-14);
  }
  SUBCASE("maximum entropy over a generating distribution") {
    const PatternPmf p0 = random_pmf(4, rng);
    const auto c = constraints_of(p0);
    CHECK(c.size() == 4);
    const DemingStephanResult r = deming_stephan(c, PatternPmf::uniform(4));
    CHECK(max_marginal_deviation(r.pmf, c) < 1e-8);
    CHECK(entropy(r.pmf) >= entropy(p0) - 1e-12);
  }
  SUBCASE("sweep order does not change the fixed point") {
    const PatternPmf p0 = random_pmf(3, rng);
    const auto c = constraints_of(p0);
    const DemingStephanResult cyclic = deming_stephan(c, PatternPmf::uniform(3));
    DemingStephanOptions opt;
    opt.random_order = true;
    opt.seed = 99;
    const DemingStephanResult shuffled = deming_stephan(c, PatternPmf::uniform(3), opt);
    for (std::size_t i = 0; i < cyclic.pmf.size(); ++i) {
      CHECK(std::abs(cyclic.pmf[i] - shuffled.pmf[i]) < 1e-8);
    }
  }
  SUBCASE("result lies in the pair-interaction family") {
    // log p* - log p_init must be a sum of functions of the constrained pairs.
    const int k = 3;
    const PatternPmf p0 = random_pmf(k, rng);
    const PatternPmf init = random_pmf(k, rng);
    const auto c = constraints_of(p0);
    const DemingStephanResult r = deming_stephan(c, init);
    const auto n = static_cast<Eigen::Index>(init.size());
    const Eigen::Index cols = 1 + static_cast<Eigen::Index>(c.size()) * k * k;
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, cols);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      design(i, 0) = 1.0;
      for (std::size_t j = 0; j < c.size(); ++j) {
        const int a = init.digit(idx, c[j].pair.first);
        const int b = init.digit(idx, c[j].pair.second);
        design(i, 1 + static_cast<Eigen::Index>(j) * k * k + a * k + b) = 1.0;
      }
      rhs[i] = std::log(r.pmf[idx]) - std::log(init[idx]);
    }
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(rhs);
    CHECK((design * coef - rhs).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("infeasible marginals do not converge") {
    // Lag tables with different category proportions cannot share a center.
    Eigen::MatrixXd h10(2, 2);
    h10 << 0.7, 0.1, 0.1, 0.1;
    Eigen::MatrixXd h01(2, 2);
    h01 << 0.1, 0.1, 0.1, 0.7;
    DemingStephanOptions opt;
    opt.max_sweeps = 200;
    try {
      deming_stephan(pattern_constraints({h10, h01}), PatternPmf::uniform(2), opt);
      FAIL("expected NotConverged");
    } catch (const NotConverged& e) {
      CHECK(e.best().deviation > 1e-3);
      CHECK(e.best().pmf.total() == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("empirical lag marginals") {
  Rng rng(12);
  const int nx = 9;
  const int ny = 7;
  std::vector<int> field(nx * ny);
  for (int& v : field) v = static_cast<int>(uniform_index(rng, 3));
  const UnitLagMarginals m = marginals_from_field(field, nx, ny, 3, true);
  m.validate();
  std::vector<double> prop(3, 0.0);
  for (int v : field) prop[v] += 1.0 / field.size();
  for (int c = 0; c < 3; ++c) {
    CHECK(m.pi_h10.row(c).sum() == doctest::Approx(prop[c]));
    CHECK(m.pi_h10.col(c).sum() == doctest::Approx(prop[c]));
    CHECK(m.pi_h01.row(c).sum() == doctest::Approx(prop[c]));
    CHECK(m.pi_h01.col(c).sum() == doctest::Approx(prop[c]));
  }
  // Horizontal pair count by hand at one cell pair.
  double count = 0.0;
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      if (field[y * nx + x] == 0 && field[y * nx + (x + 1) % nx] == 2) count += 1.0;
    }
  }
  CHECK(m.pi_h10(0, 2) == doctest::Approx(count / (nx * ny)));
  const UnitLagMarginals open = marginals_from_field(field, nx, ny, 3, false);
  CHECK(open.pi_h10.sum() == doctest::Approx(1.0));
  CHECK_THROWS(UnitLagMarginals{Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Ones(2, 2)}.validate());
}

TEST_CASE("Appendix-style decomposition on random instances") {
  // D(q||p) = sum_b q(b) D(q(.|b) || p(.|b)) + D(q_B || p_B) for any pair B.
  Rng rng(31);
  for (int r = 0; r < 20; ++r) {
    const int k = 2 + r % 2;
    const PatternPmf p = random_pmf(k, rng);
    const PatternPmf q = random_pmf(k, rng);
    const PositionPair pair{static_cast<int>(r % 5), static_cast<int>((r + 2) % 5)};
    const Eigen::MatrixXd pb = marginalize(p, pair);
    const Eigen::MatrixXd qb = marginalize(q, pair);
    double conditional = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const int a = p.digit(i, pair.first);
      const int b = p.digit(i, pair.second);
      conditional += q[i] * std::log((q[i] / qb(a, b)) / (p[i] / pb(a, b)));
    }
    double marginal = 0.0;
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) marginal += qb(a, b) * std::log(qb(a, b) / pb(a, b));
    }
    CHECK(std::abs(kl_divergence(q, p) - (conditional + marginal)) < 1e-12);
  }
}
