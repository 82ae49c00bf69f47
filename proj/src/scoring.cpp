#include "tpg/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace tpg {

double log_score(std::span<const double> pmf, std::size_t index) {
  const double p = pmf[index];
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

std::vector<double> laplace_smoothed(std::span<const int> counts) {
  const double m = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double denom = m + static_cast<double>(counts.size());
  std::vector<double> pmf(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) pmf[c] = (counts[c] + 1.0) / denom;
  return pmf;
}

namespace {

// Latent states of the subset sites used as replicates.
std::vector<LatentState> replicate_states(const ScoredModel& model, const Event& subset,
                                          const ScoringOptions& options, Rng& rng) {
  const auto m = static_cast<std::size_t>(options.m);
  if (subset.size() == 0) return std::vector<LatentState>(m);

  const ConditionalSampler sampler(model.map, model.regions, subset, model.model_x,
                                   model.model_y, options.chain.sampler);
  std::vector<LatentState> states;
  states.reserve(m);
  if (options.independent_replicates) {
    for (std::size_t r = 0; r < m; ++r) {
      states.push_back(run_conditional(sampler, options.chain, rng).state);
    }
    return states;
  }
  ConditionalRunOptions chain = options.chain;
  chain.burn_in = std::max(chain.burn_in, 0);
  chain.thin = std::max(1, (chain.iterations - chain.burn_in) / std::max(options.m, 1));
  chain.iterations = chain.burn_in + chain.thin * options.m;
  ConditionalRun run = run_conditional(sampler, chain, rng);
  return std::move(run.kept);
}

std::vector<int> tabulate_target(const ScoredModel& model, Site target, const Event& subset,
                                 const std::vector<LatentState>& states, Rng& rng) {
  const SimpleKriging kx(subset.sites, target, model.model_x);
  const SimpleKriging ky(subset.sites, target, model.model_y);
  const CategorySet& categories = model.map.categories();
  std::vector<int> counts(categories.size(), 0);
  for (const LatentState& s : states) {
    const KrigingEstimate ex = kx.estimate(s.x);
    const KrigingEstimate ey = ky.estimate(s.y);
    const double x = ex.mean + std::sqrt(ex.var) * standard_normal(rng);
    const double y = ey.mean + std::sqrt(ey.var) * standard_normal(rng);
    ++counts[categories.index_of(map_point(model.map, x, y))];
  }
  return counts;
}

std::uint64_t site_key(Site s) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.x)) << 32) |
         static_cast<std::uint32_t>(s.y);
}

struct Assignment {
  std::vector<std::size_t> members;  // canonical positions in the subset
  std::vector<std::size_t> targets;  // canonical positions predicted from it
};

}  // namespace

std::vector<double> predict_at(const ScoredModel& model, Site target, const Event& subset,
                               const ScoringOptions& options, Rng& rng) {
  if (std::find(subset.sites.begin(), subset.sites.end(), target) != subset.sites.end()) {
    throw std::invalid_argument("predict_at: target site belongs to the conditioning subset");
  }
  const std::vector<LatentState> states = replicate_states(model, subset, options, rng);
  return laplace_smoothed(tabulate_target(model, target, subset, states, rng));
}

ScoreReport unordered_score(const ScoredModel& model, const Event& event,
                            const ScoringOptions& options, std::uint64_t seed) {
  if (event.size() == 0) throw std::invalid_argument("unordered_score: empty event");
  if (options.n_subsets < 1 || options.m < 1) {
    throw std::invalid_argument("unordered_score: n_subsets and m must be positive");
  }
  event.validate(model.map.categories());

  // Canonical site order makes the report independent of the input order.
  std::vector<std::size_t> order(event.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return event.sites[a] < event.sites[b]; });
  const Event canon = event.subset(order);
  const std::size_t n = canon.size();

  // Membership of site s in subset j is a fair coin keyed on (seed, j, s).
  std::vector<Assignment> subsets;
  std::vector<int> assigned(n, 0);
  std::size_t pending = n;
  for (std::uint64_t j = 0; pending > 0; ++j) {
    const std::uint64_t key = derive_seed(seed, "subset", j);
    Assignment a;
    for (std::size_t i = 0; i < n; ++i) {
      if (mix64(key ^ mix64(site_key(canon.sites[i]))) >> 63) {
        a.members.push_back(i);
      } else if (assigned[i] < options.n_subsets) {
        a.targets.push_back(i);
        if (++assigned[i] == options.n_subsets) --pending;
      }
    }
    if (!a.targets.empty()) subsets.push_back(std::move(a));
  }

  // results[k][t]: smoothed pmf for subsets[k].targets[t].
  std::vector<std::vector<std::vector<double>>> results(subsets.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < subsets.size(); k = next++) {
      Rng rng = make_rng(seed, "subset-chain", k);
      const Event sub = canon.subset(subsets[k].members);
      const std::vector<LatentState> states = replicate_states(model, sub, options, rng);
      for (std::size_t t : subsets[k].targets) {
        results[k].push_back(
            laplace_smoothed(tabulate_target(model, canon.sites[t], sub, states, rng)));
      }
    }
  };
  const int threads = std::max(1, options.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  const CategorySet& categories = model.map.categories();
  ScoreReport report;
  report.n_subsets = options.n_subsets;
  report.m = options.m;
  report.seed = seed;
  report.sites.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    report.sites[i].site = canon.sites[i];
    report.sites[i].category = canon.categories[i];
    report.sites[i].mean_pmf.assign(categories.size(), 0.0);
  }
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    for (std::size_t t = 0; t < subsets[k].targets.size(); ++t) {
      SiteScore& s = report.sites[subsets[k].targets[t]];
      const std::vector<double>& pmf = results[k][t];
      s.score += log_score(pmf, categories.index_of(s.category));
      for (std::size_t c = 0; c < pmf.size(); ++c) s.mean_pmf[c] += pmf[c];
      ++s.subsets;
    }
  }
  for (SiteScore& s : report.sites) {
    s.score /= s.subsets;
    for (double& p : s.mean_pmf) p /= s.subsets;
    report.total += s.score;
  }
  return report;
}

}  // namespace tpg
