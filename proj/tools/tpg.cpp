// Command-line front end: bme-fit, estimate-map, simulate-field, condition,
// validate and render. Every stochastic stage draws from its own stream
// derived from the master seed.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tpg/bme.hpp"
#include "tpg/estimator.hpp"
#include "tpg/io.hpp"
#include "tpg/sampler.hpp"
#include "tpg/scoring.hpp"

namespace fs = std::filesystem;
using namespace tpg;

namespace {

constexpr int kExitNotConverged = 2;
constexpr int kExitError = 1;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
};

// Run configuration: the JSON file with the command-line overrides applied.
class RunConfig {
 public:
  explicit RunConfig(const Common& common) : base_dir_(".") {
    if (!common.config.empty()) {
      json_ = read_json(common.config);
      base_dir_ = fs::path(common.config).parent_path();
    } else {
      json_ = Json::object();
    }
    seed_ = common.seed ? *common.seed : json_.value("seed", std::uint64_t{0});
  }

  std::uint64_t seed() const { return seed_; }
  bool has(const std::string& key) const { return json_.contains(key); }

  Json block(const std::string& name) const {
    return json_.contains(name) ? json_.at(name) : Json::object();
  }

  /// File named by `key`, relative paths resolved against the config file.
  fs::path path(const std::string& key, const std::string& override_value = {}) const {
    if (!override_value.empty()) return override_value;
    if (!json_.contains(key)) throw std::runtime_error("config does not name a '" + key + "' file");
    fs::path p = json_.at(key).get<std::string>();
    if (p.is_relative()) p = base_dir_ / p;
    if (!fs::exists(p)) throw std::runtime_error("file not found: " + p.string());
    return p;
  }

  CovarianceModel covariance(const std::string& axis) const {
    const std::string key = "covariance_" + axis;
    if (json_.contains(key)) return covariance_from_json(json_.at(key));
    if (json_.contains("covariance")) return covariance_from_json(json_.at("covariance"));
    return covariance_from_json(Json::object());
  }

 private:
  Json json_;
  fs::path base_dir_;
  std::uint64_t seed_;
};

fs::path require_out(const Common& common) {
  if (common.out.empty()) throw std::runtime_error("--out is required");
  return common.out;
}

fs::path out_dir(const Common& common) {
  const fs::path dir = require_out(common);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------

struct BmeArgs {
  std::string marginals;
};

int cmd_bme_fit(const Common& common, const BmeArgs& args) {
  const RunConfig cfg(common);
  const Json block = cfg.block("bme");
  std::optional<CategorySet> categories;
  const UnitLagMarginals marginals =
      marginals_from_json(read_json(cfg.path("marginals", args.marginals)), &categories);
  DemingStephanOptions options;
  options.max_sweeps = block.value("max_sweeps", options.max_sweeps);
  options.tol = block.value("tol", options.tol);
  options.random_order = block.value("random_order", false);
  options.seed = derive_seed(cfg.seed(), "bme");

  const auto constraints = pattern_constraints(marginals);
  const PatternPmf init = PatternPmf::uniform(marginals.num_categories());
  int status = 0;
  std::optional<DemingStephanResult> result;
  try {
    result = deming_stephan(constraints, init, options);
  } catch (const NotConverged& e) {
    result = e.best();
    status = kExitNotConverged;
  }
  Json j = pattern_to_json(*categories, result->pmf);
  j["converged"] = status == 0;
  j["residual"] = result->deviation;
  j["sweeps"] = result->sweeps;
  if (status != 0) {
    j["warning"] = "sweep budget exhausted before the marginal residual reached the tolerance";
    std::cerr << "warning: not converged, residual " << result->deviation << '\n';
  }
  write_json(require_out(common), j);
  std::cout << "marginal residual " << result->deviation << " after " << result->sweeps
            << " sweeps\n";
  return status;
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string pattern;
  std::string initial_map;
};

int cmd_estimate(const Common& common, const EstimateArgs& args) {
  const RunConfig cfg(common);
  const Json block = cfg.block("estimate");
  std::optional<CategorySet> categories;
  PatternPmf target = pattern_from_json(read_json(cfg.path("pattern", args.pattern)), &categories);

  PriorSpec prior;
  prior.mu = block.value("mu", prior.mu);
  prior.categories = *categories;
  prior.move_resamples_category = block.value("move_resamples_category", true);
  prior.validate();
  AnnealSchedule schedule;
  schedule.t0 = block.value("t0", schedule.t0);
  schedule.alpha = block.value("alpha", schedule.alpha);
  schedule.iterations = block.value("iterations", schedule.iterations);
  schedule.validate();
  const int n = block.value("n", 20000);
  if (n < 1) throw std::invalid_argument("estimate.n must be positive");
  const auto snapshots = block.value("snapshots", std::vector<int>{});

  MismatchConfig mismatch_config =
      MismatchConfig::for_models(cfg.covariance("x"), cfg.covariance("y"), n);
  mismatch_config.floor = block.value("floor", 0.0);
  const MismatchEvaluator evaluator(std::move(target), mismatch_config);
  Rng init_rng = make_rng(cfg.seed(), "estimate-init");
  const TruncationMap initial =
      !args.initial_map.empty() || cfg.has("initial_map")
          ? map_from_json(read_json(cfg.path("initial_map", args.initial_map)))
          : sample_prior(prior, init_rng);
  Rng rng = make_rng(cfg.seed(), "estimate");
  const AnnealResult result = anneal(initial, seeded_mismatch(evaluator, cfg.seed()), prior,
                                     schedule, rng, snapshots);

  const fs::path dir = out_dir(common);
  write_json(dir / "map.json", map_to_json(result.best));
  write_trace_csv(dir / "trace.csv", result.trace);
  for (const auto& [iteration, map] : result.snapshots) {
    write_json(dir / ("snapshot_" + std::to_string(iteration) + ".json"), map_to_json(map));
  }
  write_json(dir / "estimate.json", {{"seed", cfg.seed()},
                                     {"mu", prior.mu},
                                     {"t0", schedule.t0},
                                     {"alpha", schedule.alpha},
                                     {"iterations", schedule.iterations},
                                     {"n", n},
                                     {"floor", mismatch_config.floor},
                                     {"best_f", result.best_f}});
  std::cout << "best F " << result.best_f << " with " << result.best.node_count() << " nodes\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string map;
};

int cmd_simulate(const Common& common, const SimulateArgs& args) {
  const RunConfig cfg(common);
  const Json block = cfg.block("simulate");
  const TruncationMap map = map_from_json(read_json(cfg.path("map", args.map)));
  const int nx = block.value("nx", 30);
  const int ny = block.value("ny", 20);
  if (nx < 1 || ny < 1) throw std::invalid_argument("simulate: grid must be at least 1x1");

  std::vector<Site> grid;
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) grid.push_back({x, y});
  }
  Rng rng_x = make_rng(cfg.seed(), "simulate-x");
  Rng rng_y = make_rng(cfg.seed(), "simulate-y");
  const Eigen::VectorXd xs = simulate_unconditional(grid, cfg.covariance("x"), rng_x);
  const Eigen::VectorXd ys = simulate_unconditional(grid, cfg.covariance("y"), rng_y);

  CategoricalField field{nx, ny, map_field(map, std::span<const double>(xs.data(), grid.size()),
                                              std::span<const double>(ys.data(), grid.size()))};
  Event all{grid, field.values};
  LatentState latent{xs, ys, 0};

  const fs::path dir = out_dir(common);
  write_field_csv(dir / "field.csv", field);
  if (block.value("write_latent", true)) write_latent_csv(dir / "latent.csv", all, latent);
  if (block.value("write_marginals", true)) {
    std::vector<int> index(field.values.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
      index[i] = static_cast<int>(map.categories().index_of(field.values[i]));
    }
    const UnitLagMarginals m = marginals_from_field(
        index, nx, ny, static_cast<int>(map.categories().size()), block.value("periodic", true));
    write_json(dir / "marginals.json", marginals_to_json(map.categories(), m));
  }
  if (block.contains("columns")) {
    Event event;
    for (int column : block.at("columns").get<std::vector<int>>()) {
      if (column < 0 || column >= nx) throw std::invalid_argument("event column outside grid");
      for (int y = 0; y < ny; ++y) {
        event.sites.push_back({column, y});
        event.categories.push_back(field.at(column, y));
      }
    }
    write_event_csv(dir / "event.csv", event);
  }
  std::cout << "simulated " << nx << "x" << ny << " field\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ConditionArgs {
  std::string map;
  std::string event;
};

ConditionalRunOptions chain_options(const Json& block) {
  ConditionalRunOptions o;
  o.iterations = block.value("iterations", o.iterations);
  o.burn_in = block.value("burn_in", o.burn_in);
  o.sampler.inner_sweeps = block.value("inner_sweeps", o.sampler.inner_sweeps);
  o.sampler.warmup_scans = block.value("warmup_scans", o.sampler.warmup_scans);
  if (o.iterations < 0 || o.burn_in < 0 || o.sampler.inner_sweeps < 1 ||
      o.sampler.warmup_scans < 0) {
    throw std::invalid_argument("chain settings must be non-negative (inner_sweeps >= 1)");
  }
  return o;
}

int cmd_condition(const Common& common, const ConditionArgs& args) {
  const RunConfig cfg(common);
  const TruncationMap map = map_from_json(read_json(cfg.path("map", args.map)));
  const Event event = read_event_csv(cfg.path("event", args.event));
  const ConditionalRunOptions options = chain_options(cfg.block("condition"));
  Rng rng = make_rng(cfg.seed(), "condition");
  const ConditionalRun run =
      run_conditional(map, event, cfg.covariance("x"), cfg.covariance("y"), options, rng);

  const fs::path dir = out_dir(common);
  write_latent_csv(dir / "latent.csv", event, run.state);
  write_diagnostics_csv(dir / "diagnostics.csv", run.diagnostics);
  std::cout << "violations " << run.violations << ", rejected draws " << run.rejected << '\n';
  return run.violations == 0 ? 0 : kExitError;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Common& common, const ConditionArgs& args) {
  const RunConfig cfg(common);
  const Json block = cfg.block("validate");
  const TruncationMap map = map_from_json(read_json(cfg.path("map", args.map)));
  const Event event = read_event_csv(cfg.path("event", args.event));
  const CategoryRegions regions = triangulate(map);
  const CovarianceModel mx = cfg.covariance("x");
  const CovarianceModel my = cfg.covariance("y");

  ScoringOptions options;
  options.n_subsets = block.value("n_subsets", options.n_subsets);
  options.m = block.value("m", options.m);
  options.chain = chain_options(block);
  options.independent_replicates = block.value("independent_replicates", false);
  options.threads = common.threads;
  const ScoreReport report =
      unordered_score({map, regions, mx, my}, event, options, derive_seed(cfg.seed(), "validate"));

  Json j = score_report_to_json(report);
  j["config"]["master_seed"] = cfg.seed();
  j["config"]["iterations"] = options.chain.iterations;
  j["config"]["burn_in"] = options.chain.burn_in;
  write_json(require_out(common), j);
  std::cout << "score " << report.total << " over " << report.sites.size() << " sites\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct RenderArgs {
  std::string field;
  std::string map;
  std::string format = "ppm";
  int pixels = 256;
  double extent = 4.0;
};

int cmd_render(const Common& common, const RenderArgs& args) {
  const RunConfig cfg(common);
  const Json block = cfg.block("render");
  const fs::path out = require_out(common);
  CategoricalField field;
  std::optional<CategorySet> categories;
  if (!args.field.empty()) {
    field = read_field_csv(args.field);
  } else {
    const TruncationMap map = map_from_json(read_json(cfg.path("map", args.map)));
    field = rasterize_map(map, block.value("pixels", args.pixels),
                          block.value("extent", args.extent));
    categories = map.categories();
  }
  if (!categories) {
    // Palette positions follow the sorted labels present in the field.
    std::vector<Category> labels = field.values;
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    if (block.contains("categories")) labels = block.at("categories").get<std::vector<Category>>();
    categories = CategorySet(labels);
  }
  if (args.format == "pgm") {
    write_pgm(out, field, *categories);
  } else {
    write_ppm(out, field, *categories);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truncated plurigaussian modelling: pattern fitting, truncation-map estimation, "
               "conditional simulation and validation"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--config", common.config, "Run configuration (JSON)");
    sub->add_option("--seed", common.seed, "Master seed (overrides the config)");
    sub->add_option("--out", common.out, "Output file, or directory for multi-file commands");
    sub->add_option("--threads", common.threads, "Worker threads for scoring")
        ->check(CLI::PositiveNumber);
  };

  BmeArgs bme;
  auto* bme_cmd = app.add_subcommand("bme-fit", "Maximum-entropy pattern pmf from unit-lag marginals");
  add_common(bme_cmd);
  bme_cmd->add_option("--marginals", bme.marginals, "Marginals JSON (overrides config)");

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate-map", "Simulated-annealing truncation-map estimate");
  add_common(est_cmd);
  est_cmd->add_option("--pattern", est.pattern, "Pattern JSON (overrides config)");
  est_cmd->add_option("--initial-map", est.initial_map, "Initial map JSON (default: prior draw)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate-field", "Unconditional categorical field");
  add_common(sim_cmd);
  sim_cmd->add_option("--map", sim.map, "Truncation map JSON (overrides config)");

  ConditionArgs cond;
  auto* cond_cmd = app.add_subcommand("condition", "Latent vectors conditioned on an event");
  add_common(cond_cmd);
  cond_cmd->add_option("--map", cond.map, "Truncation map JSON (overrides config)");
  cond_cmd->add_option("--event", cond.event, "Event CSV (overrides config)");

  ConditionArgs val;
  auto* val_cmd = app.add_subcommand("validate", "Unordered logarithmic score of a map");
  add_common(val_cmd);
  val_cmd->add_option("--map", val.map, "Truncation map JSON (overrides config)");
  val_cmd->add_option("--event", val.event, "Event CSV (overrides config)");

  RenderArgs ren;
  auto* ren_cmd = app.add_subcommand("render", "Render a field CSV or a truncation map to PPM/PGM");
  add_common(ren_cmd);
  ren_cmd->add_option("--field", ren.field, "Field CSV to render");
  ren_cmd->add_option("--map", ren.map, "Truncation map JSON to rasterize");
  ren_cmd->add_option("--format", ren.format, "Image format")->check(CLI::IsMember({"ppm", "pgm"}));
  ren_cmd->add_option("--pixels", ren.pixels, "Map raster size")->check(CLI::PositiveNumber);
  ren_cmd->add_option("--extent", ren.extent, "Map raster half-width in latent units")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (bme_cmd->parsed()) return cmd_bme_fit(common, bme);
    if (est_cmd->parsed()) return cmd_estimate(common, est);
    if (sim_cmd->parsed()) return cmd_simulate(common, sim);
    if (cond_cmd->parsed()) return cmd_condition(common, cond);
    if (val_cmd->parsed()) return cmd_validate(common, val);
    if (ren_cmd->parsed()) return cmd_render(common, ren);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
