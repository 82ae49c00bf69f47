#pragma once

// File formats: JSON for maps, covariances, marginals, patterns and score
// reports; CSV for traces, diagnostics, latent dumps, events and fields;
// binary PPM/PGM for renderings.

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpg/bme.hpp"
#include "tpg/estimator.hpp"
#include "tpg/grf.hpp"
#include "tpg/sampler.hpp"
#include "tpg/scoring.hpp"
#include "tpg/tessellation.hpp"

namespace tpg {

using Json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json read_json(const std::filesystem::path& path);
/// Pretty-printed; doubles keep 17 significant digits.
void write_json(const std::filesystem::path& path, const Json& j);

Json map_to_json(const TruncationMap& map);
TruncationMap map_from_json(const Json& j);

Json covariance_to_json(const CovarianceModel& model);
CovarianceModel covariance_from_json(const Json& j);

Json marginals_to_json(const CategorySet& categories, const UnitLagMarginals& m);
/// Category labels are returned through `categories` when given.
UnitLagMarginals marginals_from_json(const Json& j, std::optional<CategorySet>* categories = nullptr);

/// Dense table; entry i is the tuple whose category indices are the
/// base-K little-endian digits of i over (center, +x, -x, +y, -y).
Json pattern_to_json(const CategorySet& categories, const PatternPmf& p);
PatternPmf pattern_from_json(const Json& j, std::optional<CategorySet>* categories = nullptr);

Json score_report_to_json(const ScoreReport& report);

/// Categorical grid, row-major with site (x, y) at y * nx + x.
struct CategoricalField {
  int nx = 0;
  int ny = 0;
  std::vector<Category> values;

  Category at(int x, int y) const { return values[static_cast<std::size_t>(y) * nx + x]; }
};

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<Diagnostic>& rows);
std::vector<Diagnostic> read_diagnostics_csv(const std::filesystem::path& path);

/// Columns site_x, site_y, x, y, category.
void write_latent_csv(const std::filesystem::path& path, const Event& event,
                      const LatentState& state);
struct LatentDump {
  Event event;
  LatentState state;
};
LatentDump read_latent_csv(const std::filesystem::path& path);

/// Columns x, y, category.
void write_event_csv(const std::filesystem::path& path, const Event& event);
Event read_event_csv(const std::filesystem::path& path);

/// Same columns as an event, one row per cell in row-major order.
void write_field_csv(const std::filesystem::path& path, const CategoricalField& field);
CategoricalField read_field_csv(const std::filesystem::path& path);

/// Fixed palette indexed by category position; wraps after eight entries.
inline constexpr std::array<std::array<unsigned char, 3>, 8> kPalette{{
    {230, 159, 0},
    {86, 180, 233},
    {0, 158, 115},
    {240, 228, 66},
    {0, 114, 178},
    {213, 94, 0},
    {204, 121, 167},
    {0, 0, 0},
}};

/// One pixel per cell, row y = ny - 1 at the top. PPM uses the palette; PGM
/// spreads category positions evenly over grey levels.
void write_ppm(const std::filesystem::path& path, const CategoricalField& field,
               const CategorySet& categories);
void write_pgm(const std::filesystem::path& path, const CategoricalField& field,
               const CategorySet& categories);

/// Rasterize a truncation map over [-extent, extent]^2 with `pixels` cells per side.
CategoricalField rasterize_map(const TruncationMap& map, int pixels, double extent);

}  // namespace tpg
