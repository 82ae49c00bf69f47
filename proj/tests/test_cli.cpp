#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "tpg/io.hpp"

using namespace tpg;
namespace fs = std::filesystem;

namespace {

fs::path workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "tpg_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(TPG_EXECUTABLE) + " " + args + " > " +
                          (workdir() / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), {}};
}

// Small configuration over the reference map.
fs::path small_config() {
  const fs::path path = workdir() / "config.json";
  Json j = read_json(fs::path(TPG_CONFIG_DIR) / "synthetic.json");
  j["map"] = (fs::path(TPG_CONFIG_DIR) / "reference_map.json").string();
  j["simulate"]["nx"] = 12;
  j["simulate"]["ny"] = 8;
  j["simulate"]["columns"] = {3, 8};
  j["estimate"]["iterations"] = 30;
  j["estimate"]["n"] = 500;
  j["estimate"]["snapshots"] = {0, 30};
  j["condition"]["iterations"] = 20;
  j["condition"]["burn_in"] = 10;
  j["validate"]["n_subsets"] = 3;
  j["validate"]["m"] = 5;
  j["validate"]["iterations"] = 20;
  j["validate"]["burn_in"] = 10;
  write_json(path, j);
  return path;
}

}  // namespace

TEST_CASE("pipeline is deterministic") {
  const fs::path cfg = small_config();
  const std::string c = " --config " + cfg.string();
  const fs::path w = workdir();
  for (const char* pass : {"a", "b"}) {
    const fs::path d = w / pass;
    REQUIRE(run("simulate-field" + c + " --out " + (d / "sim").string()) == 0);
    REQUIRE(run("bme-fit" + c + " --marginals " + (d / "sim/marginals.json").string() +
                " --out " + (d / "pattern.json").string()) == 0);
    REQUIRE(run("estimate-map" + c + " --pattern " + (d / "pattern.json").string() + " --out " +
                (d / "est").string()) == 0);
    REQUIRE(run("condition" + c + " --event " + (d / "sim/event.csv").string() + " --out " +
                (d / "cond").string()) == 0);
    REQUIRE(run("validate" + c + " --event " + (d / "sim/event.csv").string() +
                " --threads 2 --out " + (d / "score.json").string()) == 0);
    REQUIRE(run("render --field " + (d / "sim/field.csv").string() + " --out " +
                (d / "field.ppm").string()) == 0);
    REQUIRE(run("render" + c + " --format pgm --pixels 32 --out " + (d / "map.pgm").string()) ==
            0);
  }
  for (const char* f :
       {"sim/field.csv", "sim/latent.csv", "sim/marginals.json", "sim/event.csv", "pattern.json",
        "est/map.json", "est/trace.csv", "est/estimate.json", "est/snapshot_0.json",
        "est/snapshot_30.json", "cond/latent.csv", "cond/diagnostics.csv", "score.json",
        "field.ppm", "map.pgm"}) {
    CAPTURE(f);
    CHECK(slurp(w / "a" / f) == slurp(w / "b" / f));
  }

  // Outputs parse back and agree with the inputs.
  const CategoricalField field = read_field_csv(w / "a/sim/field.csv");
  CHECK(field.nx == 12);
  CHECK(field.ny == 8);
  CHECK(read_event_csv(w / "a/sim/event.csv").size() == 16);
  const Json pattern = read_json(w / "a/pattern.json");
  CHECK(pattern.at("converged").get<bool>());
  CHECK(pattern.at("residual").get<double>() < 1e-8);
  CHECK(read_trace_csv(w / "a/est/trace.csv").size() == 30);
  CHECK(read_diagnostics_csv(w / "a/cond/diagnostics.csv").size() == 21);
  const Json score = read_json(w / "a/score.json");
  CHECK(score.at("sites").size() == 16);

  // A different seed changes the outputs.
  REQUIRE(run("simulate-field" + c + " --seed 7 --out " + (w / "other").string()) == 0);
  CHECK(slurp(w / "other/field.csv") != slurp(w / "a/sim/field.csv"));
}

TEST_CASE("bme-fit outcomes") {
  const fs::path w = workdir();
  Eigen::MatrixXd u = Eigen::MatrixXd::Constant(2, 2, 0.25);
  write_json(w / "uniform.json", marginals_to_json(CategorySet::range(2), {u, u}));
  REQUIRE(run("bme-fit --marginals " + (w / "uniform.json").string() + " --out " +
              (w / "uniform_pattern.json").string()) == 0);
  const PatternPmf p = pattern_from_json(read_json(w / "uniform_pattern.json"));
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(1.0 / 32));

  // Horizontal and vertical tables disagree on the category proportions.
  Eigen::MatrixXd h10(2, 2);
  h10 << 0.7, 0.1, 0.1, 0.1;
  Eigen::MatrixXd h01(2, 2);
  h01 << 0.1, 0.1, 0.1, 0.7;
  write_json(w / "bad.json", marginals_to_json(CategorySet::range(2), {h10, h01}));
  Json cfg{{"bme", {{"max_sweeps", 50}}}};
  write_json(w / "bad_cfg.json", cfg);
  CHECK(run("bme-fit --config " + (w / "bad_cfg.json").string() + " --marginals " +
            (w / "bad.json").string() + " --out " + (w / "bad_pattern.json").string()) == 2);
  const Json bad = read_json(w / "bad_pattern.json");
  CHECK_FALSE(bad.at("converged").get<bool>());
  CHECK(bad.contains("warning"));
  CHECK(bad.at("residual").get<double>() > 1e-3);
}

TEST_CASE("errors exit with status 1") {
  const fs::path w = workdir();
  CHECK(run("bme-fit --marginals " + (w / "missing.json").string() + " --out " +
            (w / "x.json").string()) == 1);
  CHECK(run("simulate-field --out " + (w / "nomap").string()) == 1);
}
