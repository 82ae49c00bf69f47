#include "tpg/bme.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace tpg {

namespace {

std::size_t ipow(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

// Flattened (z_first + K z_second) cell of every tuple for one pair.
std::vector<int> pair_cells(const PatternPmf& p, PositionPair pair) {
  const int k = p.num_categories();
  std::vector<int> cells(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    cells[i] = p.digit(i, pair.first) + k * p.digit(i, pair.second);
  }
  return cells;
}

void check_pair(PositionPair pair) {
  auto ok = [](int pos) { return pos >= 0 && pos < kPatternSize; };
  if (!ok(pair.first) || !ok(pair.second) || pair.first == pair.second) {
    throw std::invalid_argument("invalid pattern position pair");
  }
}

void check_pmf_matrix(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw std::invalid_argument(std::string(what) + " must be a non-empty square table");
  }
  if ((m.array() < 0.0).any() || !m.allFinite()) {
    throw std::invalid_argument(std::string(what) + " has negative or non-finite entries");
  }
  if (std::abs(m.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument(std::string(what) + " does not sum to one");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

PatternPmf::PatternPmf(int num_categories, std::vector<double> table)
    : k_(num_categories), table_(std::move(table)) {
  if (k_ < 1) throw std::invalid_argument("pattern pmf needs at least one category");
  if (table_.size() != ipow(k_, kPatternSize)) {
    throw std::invalid_argument("pattern pmf table must have K^5 entries");
  }
  double sum = 0.0;
  for (double v : table_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("pattern pmf entries must be finite and non-negative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("pattern pmf must sum to one");
}

PatternPmf PatternPmf::uniform(int num_categories) {
  const std::size_t n = ipow(num_categories, kPatternSize);
  return PatternPmf(num_categories, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

int PatternPmf::digit(std::size_t index, int position) const {
  for (int i = 0; i < position; ++i) index /= static_cast<std::size_t>(k_);
  return static_cast<int>(index % static_cast<std::size_t>(k_));
}

std::size_t PatternPmf::index_of(const std::array<int, kPatternSize>& digits) const {
  std::size_t index = 0;
  for (int i = kPatternSize - 1; i >= 0; --i) {
    index = index * static_cast<std::size_t>(k_) + static_cast<std::size_t>(digits[i]);
  }
  return index;
}

double PatternPmf::total() const { return std::accumulate(table_.begin(), table_.end(), 0.0); }

void UnitLagMarginals::validate() const {
  check_pmf_matrix(pi_h10, "pi_h10");
  check_pmf_matrix(pi_h01, "pi_h01");
  if (pi_h10.rows() != pi_h01.rows()) {
    throw std::invalid_argument("pi_h10 and pi_h01 differ in size");
  }
}

std::vector<PairConstraint> pattern_constraints(const UnitLagMarginals& m) {
  m.validate();
  return {
      {{kCenter, kPlusX}, m.pi_h10},
      {{kMinusX, kCenter}, m.pi_h10},
      {{kCenter, kPlusY}, m.pi_h01},
      {{kMinusY, kCenter}, m.pi_h01},
  };
}

UnitLagMarginals marginals_from_field(std::span<const int> category_index, int nx, int ny,
                                      int num_categories, bool periodic) {
  if (nx < 1 || ny < 1 || category_index.size() != static_cast<std::size_t>(nx) * ny) {
    throw std::invalid_argument("marginals_from_field: grid size mismatch");
  }
  const int k = num_categories;
  UnitLagMarginals out{Eigen::MatrixXd::Zero(k, k), Eigen::MatrixXd::Zero(k, k)};
  auto at = [&](int x, int y) {
    const int c = category_index[static_cast<std::size_t>(y) * nx + x];
    if (c < 0 || c >= k) throw std::invalid_argument("category index out of range");
    return c;
  };
  double n10 = 0.0;
  double n01 = 0.0;
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      if (x + 1 < nx || periodic) {
        out.pi_h10(at(x, y), at((x + 1) % nx, y)) += 1.0;
        n10 += 1.0;
      }
      if (y + 1 < ny || periodic) {
        out.pi_h01(at(x, y), at(x, (y + 1) % ny)) += 1.0;
        n01 += 1.0;
      }
    }
  }
  if (n10 == 0.0 || n01 == 0.0) {
    throw std::invalid_argument("marginals_from_field: grid too small for unit-lag pairs");
  }
  out.pi_h10 /= n10;
  out.pi_h01 /= n01;
  return out;
}

Eigen::MatrixXd marginalize(const PatternPmf& p, PositionPair pair) {
  check_pair(pair);
  const int k = p.num_categories();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < p.size(); ++i) {
    m(p.digit(i, pair.first), p.digit(i, pair.second)) += p[i];
  }
  return m;
}

PatternPmf ipf_project(const PatternPmf& p, PositionPair pair, const Eigen::MatrixXd& target) {
  check_pair(pair);
  const int k = p.num_categories();
  if (target.rows() != k || target.cols() != k) {
    throw std::invalid_argument("ipf_project: target table size mismatch");
  }
  const Eigen::MatrixXd current = marginalize(p, pair);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      if (current(a, b) == 0.0 && target(a, b) > 0.0) {
        throw AbsoluteContinuityViolation(
            "ipf_project: target charges a cell where the current marginal is zero");
      }
    }
  }
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const int a = p.digit(i, pair.first);
    const int b = p.digit(i, pair.second);
    out[i] = current(a, b) > 0.0 ? p[i] * target(a, b) / current(a, b) : 0.0;
  }
  return PatternPmf(k, std::move(out));
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double kl_divergence(std::span<const double> q, std::span<const double> p) {
  if (q.size() != p.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;
    if (p[i] <= 0.0) return std::numeric_limits<double>::infinity();
    d += q[i] * std::log(q[i] / p[i]);
  }
  return std::max(d, 0.0);
}

// ---------------------------------------------------------------------------

NotConverged::NotConverged(DemingStephanResult best)
    : std::runtime_error("Deming-Stephan iteration did not converge; marginal deviation " +
                         std::to_string(best.deviation)),
      best_(std::move(best)) {}

double max_marginal_deviation(const PatternPmf& p,
                              std::span<const PairConstraint> constraints) {
  double dev = 0.0;
  for (const auto& c : constraints) {
    dev = std::max(dev, (marginalize(p, c.pair) - c.target).cwiseAbs().maxCoeff());
  }
  return dev;
}

DemingStephanResult deming_stephan(std::span<const PairConstraint> constraints,
                                   const PatternPmf& init,
                                   const DemingStephanOptions& options) {
  if (constraints.empty()) return {init, 0.0, 0};
  const int k = init.num_categories();
  for (const auto& c : constraints) {
    check_pair(c.pair);
    check_pmf_matrix(c.target, "pair target");
    if (c.target.rows() != k) throw std::invalid_argument("pair target size mismatch");
  }

  std::vector<std::vector<int>> cells;
  for (const auto& c : constraints) cells.push_back(pair_cells(init, c.pair));
  const std::size_t kk = static_cast<std::size_t>(k) * k;

  std::vector<double> table(init.table().begin(), init.table().end());
  std::vector<double> marginal(kk);
  auto compute_marginal = [&](std::size_t which) {
    std::fill(marginal.begin(), marginal.end(), 0.0);
    const auto& cell = cells[which];
    for (std::size_t i = 0; i < table.size(); ++i) marginal[cell[i]] += table[i];
  };
  auto deviation = [&]() {
    double dev = 0.0;
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      compute_marginal(c);
      for (std::size_t j = 0; j < kk; ++j) {
        const double t = constraints[c].target(static_cast<int>(j % k), static_cast<int>(j / k));
        dev = std::max(dev, std::abs(marginal[j] - t));
      }
    }
    return dev;
  };

  Rng rng(options.seed);
  DemingStephanResult best{init, deviation(), 0};
  if (best.deviation <= options.tol) return best;

  std::vector<double> ratio(kk);
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    for (std::size_t step = 0; step < constraints.size(); ++step) {
      const std::size_t which =
          options.random_order ? uniform_index(rng, constraints.size()) : step;
      compute_marginal(which);
      for (std::size_t j = 0; j < kk; ++j) {
        const double t =
            constraints[which].target(static_cast<int>(j % k), static_cast<int>(j / k));
        if (marginal[j] > 0.0) {
          ratio[j] = t / marginal[j];
        } else if (t > 0.0) {
          throw AbsoluteContinuityViolation(
              "deming_stephan: target charges a cell with zero current mass");
        } else {
          ratio[j] = 0.0;
        }
      }
      const auto& cell = cells[which];
      for (std::size_t i = 0; i < table.size(); ++i) table[i] *= ratio[cell[i]];
    }
    const double dev = deviation();
    if (dev < best.deviation) best = {PatternPmf(k, table), dev, sweep};
    if (dev <= options.tol) return best;
  }
  throw NotConverged(std::move(best));
}

}  // namespace tpg
