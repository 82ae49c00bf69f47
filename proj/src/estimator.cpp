#include "tpg/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace tpg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_poisson(double mu, int n) {
  if (n < 0) return -kInf;
  return n * std::log(mu) - mu - std::lgamma(n + 1.0);
}

double log_std_normal_density(double v) {
  return -0.5 * v * v - 0.5 * std::log(2.0 * std::numbers::pi);
}

double log_node_density(Point2 p) {
  return log_std_normal_density(p.x) + log_std_normal_density(p.y);
}

// Poisson(mu) conditioned on n >= 1, by sequential inversion.
int sample_node_count(double mu, Rng& rng) {
  const double norm = -std::expm1(-mu);
  double u = uniform01(rng) * norm;
  for (int n = 1;; ++n) {
    const double p = std::exp(log_poisson(mu, n));
    if (u < p || (p == 0.0 && n > mu)) return n;
    u -= p;
  }
}

Point2 draw_position(const std::vector<Point2>& existing, Rng& rng) {
  for (;;) {
    const Point2 p{standard_normal(rng), standard_normal(rng)};
    const bool clash = std::any_of(existing.begin(), existing.end(), [&](const Point2& q) {
      return std::hypot(p.x - q.x, p.y - q.y) < TruncationMap::kMinNodeSeparation;
    });
    if (!clash) return p;
  }
}

Category draw_category(const CategorySet& categories, Rng& rng) {
  return categories.labels()[uniform_index(rng, categories.size())];
}

bool accept_annealing(double f_current, double f_new, double temperature, Rng& rng) {
  if (f_new == kInf) return false;
  if (f_current == kInf || f_new <= f_current) return true;
  return uniform01(rng) < std::exp((f_current - f_new) / temperature);
}

}  // namespace

void PriorSpec::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("prior mu must be > 0");
}

double poisson_pmf(double mu, int n) { return std::exp(log_poisson(mu, n)); }

TruncationMap sample_prior(const PriorSpec& prior, Rng& rng) {
  prior.validate();
  const int count = sample_node_count(prior.mu, rng);
  std::vector<Point2> nodes;
  std::vector<Category> colors;
  nodes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    nodes.push_back(draw_position(nodes, rng));
    colors.push_back(draw_category(prior.categories, rng));
  }
  return TruncationMap(prior.categories, std::move(nodes), std::move(colors));
}

std::array<double, 3> event_weights(double mu, std::size_t count) {
  const int n = static_cast<int>(count);
  std::array<double, 3> logs{n > 1 ? log_poisson(mu, n - 1) : -kInf, log_poisson(mu, n),
                             log_poisson(mu, n + 1)};
  const double top = *std::max_element(logs.begin(), logs.end());
  std::array<double, 3> w{};
  double total = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    w[i] = std::exp(logs[i] - top);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

Proposal propose(const TruncationMap& current, const PriorSpec& prior, Rng& rng) {
  const auto w = event_weights(prior.mu, current.node_count());
  const double u = uniform01(rng);
  const ProposalKind kind = u < w[0]          ? ProposalKind::death
                            : u < w[0] + w[1] ? ProposalKind::move
                                              : ProposalKind::birth;
  std::vector<Point2> nodes = current.nodes();
  std::vector<Category> colors = current.colors();

  switch (kind) {
    case ProposalKind::birth: {
      const Point2 p = draw_position(nodes, rng);
      nodes.push_back(p);
      colors.push_back(draw_category(prior.categories, rng));
      const std::size_t idx = nodes.size() - 1;
      return {TruncationMap(current.categories(), std::move(nodes), std::move(colors)), kind,
              idx, p, p};
    }
    case ProposalKind::move: {
      const std::size_t idx = uniform_index(rng, nodes.size());
      const Point2 old = nodes[idx];
      std::vector<Point2> others = nodes;
      others.erase(others.begin() + static_cast<std::ptrdiff_t>(idx));
      nodes[idx] = draw_position(others, rng);
      if (prior.move_resamples_category) colors[idx] = draw_category(prior.categories, rng);
      const Point2 fresh = nodes[idx];
      return {TruncationMap(current.categories(), std::move(nodes), std::move(colors)), kind,
              idx, old, fresh};
    }
    case ProposalKind::death: {
      const std::size_t idx = uniform_index(rng, nodes.size());
      const Point2 old = nodes[idx];
      nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(idx));
      colors.erase(colors.begin() + static_cast<std::ptrdiff_t>(idx));
      return {TruncationMap(current.categories(), std::move(nodes), std::move(colors)), kind,
              idx, old, old};
    }
  }
  throw std::logic_error("unreachable proposal kind");
}

// ---------------------------------------------------------------------------

MismatchConfig MismatchConfig::for_models(const CovarianceModel& x, const CovarianceModel& y,
                                          int n) {
  return {n, covariance_matrix(kPatternOffsets, x), covariance_matrix(kPatternOffsets, y)};
}

MismatchEvaluator::MismatchEvaluator(PatternPmf target, const MismatchConfig& config)
    : target_(std::move(target)), n_(config.n) {
  if (n_ < 1) throw std::invalid_argument("mismatch sample count must be >= 1");
  if (!(config.floor >= 0.0) || !std::isfinite(config.floor)) {
    throw std::invalid_argument("mismatch floor must be finite and >= 0");
  }
  if (config.cov_x.rows() != kPatternSize || config.cov_y.rows() != kPatternSize) {
    throw std::invalid_argument("mismatch covariances must be 5x5");
  }
  lx_ = Factorization(config.cov_x).lower();
  ly_ = Factorization(config.cov_y).lower();
  const int k = target_.num_categories();
  required_.assign(static_cast<std::size_t>(k), false);
  for (std::size_t i = 0; i < target_.size(); ++i) {
    if (target_[i] <= 0.0) continue;
    for (int pos = 0; pos < kPatternSize; ++pos) {
      required_[static_cast<std::size_t>(target_.digit(i, pos))] = true;
    }
  }
  reference_.assign(target_.table().begin(), target_.table().end());
  if (config.floor > 0.0) {
    const double norm = 1.0 + config.floor * static_cast<double>(reference_.size());
    for (double& p : reference_) p = (p + config.floor) / norm;
  }
}

std::vector<double> MismatchEvaluator::tabulate(const TruncationMap& map, Rng& rng) const {
  const int k = target_.num_categories();
  if (static_cast<int>(map.categories().size()) != k) {
    throw std::invalid_argument("map and pattern disagree on the number of categories");
  }
  std::vector<int> color_index(map.node_count());
  for (std::size_t i = 0; i < map.node_count(); ++i) {
    color_index[i] = static_cast<int>(map.categories().index_of(map.colors()[i]));
  }
  std::vector<double> counts(target_.size(), 0.0);
  Eigen::Matrix<double, 5, 1> ex;
  Eigen::Matrix<double, 5, 1> ey;
  for (int r = 0; r < n_; ++r) {
    for (int i = 0; i < kPatternSize; ++i) ex[i] = standard_normal(rng);
    for (int i = 0; i < kPatternSize; ++i) ey[i] = standard_normal(rng);
    const Eigen::Matrix<double, 5, 1> xs = lx_.triangularView<Eigen::Lower>() * ex;
    const Eigen::Matrix<double, 5, 1> ys = ly_.triangularView<Eigen::Lower>() * ey;
    std::size_t index = 0;
    for (int pos = kPatternSize - 1; pos >= 0; --pos) {
      index = index * static_cast<std::size_t>(k) +
              static_cast<std::size_t>(color_index[map.nearest_node(xs[pos], ys[pos])]);
    }
    counts[index] += 1.0;
  }
  for (double& c : counts) c /= n_;
  return counts;
}

double MismatchEvaluator::operator()(const TruncationMap& map, Rng& rng) const {
  std::vector<bool> present(required_.size(), false);
  for (Category c : map.colors()) present[map.categories().index_of(c)] = true;
  for (std::size_t c = 0; c < required_.size(); ++c) {
    if (required_[c] && !present[c]) return kInf;
  }
  return kl_divergence(tabulate(map, rng), reference_);
}

double mismatch(const TruncationMap& map, const PatternPmf& target,
                const MismatchConfig& config, Rng& rng) {
  return MismatchEvaluator(target, config)(map, rng);
}

MismatchFunction seeded_mismatch(const MismatchEvaluator& evaluator, std::uint64_t seed) {
  return [&evaluator, seed](const TruncationMap& map, std::uint64_t evaluation) {
    Rng rng = make_rng(seed, "mismatch", evaluation);
    return evaluator(map, rng);
  };
}

// ---------------------------------------------------------------------------

double AnnealSchedule::temperature(int iteration) const {
  return t0 * std::pow(alpha, iteration);
}

void AnnealSchedule::validate() const {
  if (!(t0 > 0.0)) throw std::invalid_argument("T0 must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
}

AnnealResult anneal(const TruncationMap& initial, const MismatchFunction& f,
                    const PriorSpec& prior, const AnnealSchedule& schedule, Rng& rng,
                    const std::vector<int>& snapshot_iterations) {
  schedule.validate();
  TruncationMap current = initial;
  double f_current = f(current, 0);
  AnnealResult result{current, f_current, current, {}, {}};
  auto snapshot = [&](int done) {
    if (std::find(snapshot_iterations.begin(), snapshot_iterations.end(), done) !=
        snapshot_iterations.end()) {
      result.snapshots.emplace_back(done, current);
    }
  };
  snapshot(0);
  result.trace.reserve(static_cast<std::size_t>(schedule.iterations));
  for (int i = 0; i < schedule.iterations; ++i) {
    const double temperature = schedule.temperature(i);
    Proposal prop = propose(current, prior, rng);
    const double f_new = f(prop.map, static_cast<std::uint64_t>(i) + 1);
    const bool accepted = accept_annealing(f_current, f_new, temperature, rng);
    if (accepted) {
      current = std::move(prop.map);
      f_current = f_new;
      // Strict improvement only: on ties the earlier state is kept.
      if (f_current < result.best_f) {
        result.best = current;
        result.best_f = f_current;
      }
    }
    result.trace.push_back({i, f_current, current.node_count(), temperature, accepted});
    snapshot(i + 1);
  }
  result.final_state = current;
  return result;
}

double mh_log_ratio(const TruncationMap& current, const Proposal& proposal,
                    const PriorSpec& prior, double f_current, double f_proposal) {
  if (f_proposal == kInf) return -kInf;
  if (f_current == kInf) return kInf;
  const double likelihood = f_current - f_proposal;
  const double log_cats = std::log(static_cast<double>(prior.categories.size()));
  const std::size_t nc = current.node_count();
  const std::size_t nn = proposal.map.node_count();
  const auto wc = event_weights(prior.mu, nc);
  const auto wn = event_weights(prior.mu, nn);
  const int count = static_cast<int>(nc);

  // Configurations are node sets; the prior density of a set with v nodes
  // is P_mu(v) v! prod g(node)/|C| and the death move picks one of v nodes.
  switch (proposal.kind) {
    case ProposalKind::birth: {
      const double log_new = log_node_density(proposal.new_position) - log_cats;
      const double prior_ratio = log_poisson(prior.mu, count + 1) -
                                 log_poisson(prior.mu, count) +
                                 std::log(static_cast<double>(nn)) + log_new;
      const double q_reverse = std::log(wn[0]) - std::log(static_cast<double>(nn));
      const double q_forward = std::log(wc[2]) + log_new;
      return likelihood + prior_ratio + q_reverse - q_forward;
    }
    case ProposalKind::death: {
      const double log_old = log_node_density(proposal.old_position) - log_cats;
      const double prior_ratio = log_poisson(prior.mu, count - 1) -
                                 log_poisson(prior.mu, count) -
                                 std::log(static_cast<double>(nc)) - log_old;
      const double q_reverse = std::log(wn[2]) + log_old;
      const double q_forward = std::log(wc[0]) - std::log(static_cast<double>(nc));
      return likelihood + prior_ratio + q_reverse - q_forward;
    }
    case ProposalKind::move: {
      // Prior ratio g(new)/g(old) cancels the proposal ratio g(old)/g(new).
      const double prior_ratio =
          log_node_density(proposal.new_position) - log_node_density(proposal.old_position);
      const double proposal_ratio = -prior_ratio;
      return likelihood + prior_ratio + proposal_ratio;
    }
  }
  return -kInf;
}

McmcResult metropolis_hastings(const TruncationMap& initial, const MismatchFunction& f,
                               const PriorSpec& prior, int iterations, Rng& rng) {
  TruncationMap current = initial;
  double f_current = f(current, 0);
  McmcResult result;
  result.chain.reserve(static_cast<std::size_t>(iterations));
  for (int i = 0; i < iterations; ++i) {
    Proposal prop = propose(current, prior, rng);
    const double f_new = f(prop.map, static_cast<std::uint64_t>(i) + 1);
    const double log_ratio = mh_log_ratio(current, prop, prior, f_current, f_new);
    const double rho = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
    const bool accepted = uniform01(rng) < rho;
    if (accepted) {
      current = std::move(prop.map);
      f_current = f_new;
      ++result.accepted;
    }
    result.trace.push_back({i, f_current, current.node_count(), 1.0, accepted});
    result.chain.push_back(current);
  }
  return result;
}

}  // namespace tpg
