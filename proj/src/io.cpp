#include "tpg/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tpg {

namespace {

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

// Shortest representation that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

long long parse_int(std::string_view s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Rows of a CSV whose header must equal `header`.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               std::string_view header) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    throw FormatError(path.string() + ": expected header '" + std::string(header) + "'");
  }
  const std::size_t columns = split(header).size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != columns) {
      throw FormatError(path.string() + ": wrong column count in '" + line + "'");
    }
    rows.emplace_back(fields.begin(), fields.end());
  }
  return rows;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (j[i].size() != j.size()) throw FormatError("lag table must be square");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

}  // namespace

Json read_json(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

Json map_to_json(const TruncationMap& map) {
  Json nodes = Json::array();
  for (const Point2& p : map.nodes()) nodes.push_back({p.x, p.y});
  return {{"categories", map.categories().labels()}, {"nodes", nodes}, {"colors", map.colors()}};
}

TruncationMap map_from_json(const Json& j) {
  try {
    std::vector<Point2> nodes;
    for (const Json& n : j.at("nodes")) {
      if (n.size() != 2) throw FormatError("map node must have two coordinates");
      nodes.push_back({n[0].get<double>(), n[1].get<double>()});
    }
    return TruncationMap(CategorySet(j.at("categories").get<std::vector<Category>>()),
                         std::move(nodes), j.at("colors").get<std::vector<Category>>());
  } catch (const Json::exception& e) {
    throw FormatError(std::string("map: ") + e.what());
  }
}

Json covariance_to_json(const CovarianceModel& model) {
  return {{"kind", to_string(model.kind)},
          {"range", model.range},
          {"range_convention", to_string(model.convention)}};
}

CovarianceModel covariance_from_json(const Json& j) {
  try {
    CovarianceModel m;
    m.kind = covariance_kind_from_string(j.value("kind", std::string("gaussian")));
    m.range = j.value("range", 10.0);
    m.convention =
        range_convention_from_string(j.value("range_convention", std::string("scale")));
    m.validate();
    return m;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("covariance: ") + e.what());
  }
}

Json marginals_to_json(const CategorySet& categories, const UnitLagMarginals& m) {
  return {{"categories", categories.labels()},
          {"pi_h10", matrix_to_json(m.pi_h10)},
          {"pi_h01", matrix_to_json(m.pi_h01)}};
}

UnitLagMarginals marginals_from_json(const Json& j, std::optional<CategorySet>* categories) {
  try {
    UnitLagMarginals m{matrix_from_json(j.at("pi_h10")), matrix_from_json(j.at("pi_h01"))};
    m.validate();
    CategorySet set = j.contains("categories")
                          ? CategorySet(j.at("categories").get<std::vector<Category>>())
                          : CategorySet::range(m.num_categories());
    if (static_cast<int>(set.size()) != m.num_categories()) {
      throw FormatError("marginals: category count differs from table size");
    }
    if (categories) *categories = std::move(set);
    return m;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("marginals: ") + e.what());
  }
}

Json pattern_to_json(const CategorySet& categories, const PatternPmf& p) {
  return {{"categories", categories.labels()},
          {"positions", {"center", "+x", "-x", "+y", "-y"}},
          {"ordering", "base-K little-endian category indices over positions"},
          {"table", std::vector<double>(p.table().begin(), p.table().end())}};
}

PatternPmf pattern_from_json(const Json& j, std::optional<CategorySet>* categories) {
  try {
    CategorySet set(j.at("categories").get<std::vector<Category>>());
    PatternPmf p(static_cast<int>(set.size()), j.at("table").get<std::vector<double>>());
    if (categories) *categories = std::move(set);
    return p;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("pattern: ") + e.what());
  }
}

Json score_report_to_json(const ScoreReport& report) {
  Json sites = Json::array();
  for (const SiteScore& s : report.sites) {
    sites.push_back({{"x", s.site.x},
                     {"y", s.site.y},
                     {"category", s.category},
                     {"score", s.score},
                     {"subsets", s.subsets},
                     {"predictive", s.mean_pmf}});
  }
  return {{"total", report.total},
          {"sites", sites},
          {"config", {{"n_subsets", report.n_subsets}, {"m", report.m}, {"seed", report.seed}}}};
}

// ---------------------------------------------------------------------------

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
  std::ofstream out = open_out(path);
  out << "iteration,F,node_count,temperature,accepted\n";
  for (const TraceRow& r : rows) {
    out << r.iteration << ',' << fmt(r.f) << ',' << r.node_count << ',' << fmt(r.temperature)
        << ',' << (r.accepted ? 1 : 0) << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  std::vector<TraceRow> rows;
  for (const auto& f : read_csv(path, "iteration,F,node_count,temperature,accepted")) {
    rows.push_back({static_cast<int>(parse_int(f[0])), parse_double(f[1]),
                    static_cast<std::size_t>(parse_int(f[2])), parse_double(f[3]),
                    parse_int(f[4]) != 0});
  }
  return rows;
}

void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<Diagnostic>& rows) {
  std::ofstream out = open_out(path);
  out << "iteration,logdens_x,logdens_y\n";
  for (const Diagnostic& d : rows) {
    out << d.iteration << ',' << fmt(d.logdens_x) << ',' << fmt(d.logdens_y) << '\n';
  }
}

std::vector<Diagnostic> read_diagnostics_csv(const std::filesystem::path& path) {
  std::vector<Diagnostic> rows;
  for (const auto& f : read_csv(path, "iteration,logdens_x,logdens_y")) {
    rows.push_back({static_cast<int>(parse_int(f[0])), parse_double(f[1]), parse_double(f[2])});
  }
  return rows;
}

void write_latent_csv(const std::filesystem::path& path, const Event& event,
                      const LatentState& state) {
  if (state.x.size() != static_cast<Eigen::Index>(event.size()) ||
      state.y.size() != state.x.size()) {
    throw LengthMismatch("latent state and event differ in length");
  }
  std::ofstream out = open_out(path);
  out << "site_x,site_y,x,y,category\n";
  for (std::size_t i = 0; i < event.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out << event.sites[i].x << ',' << event.sites[i].y << ',' << fmt(state.x[k]) << ','
        << fmt(state.y[k]) << ',' << event.categories[i] << '\n';
  }
}

LatentDump read_latent_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path, "site_x,site_y,x,y,category");
  LatentDump dump;
  dump.state.x.resize(static_cast<Eigen::Index>(rows.size()));
  dump.state.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = rows[i];
    dump.event.sites.push_back(
        {static_cast<int>(parse_int(f[0])), static_cast<int>(parse_int(f[1]))});
    dump.state.x[static_cast<Eigen::Index>(i)] = parse_double(f[2]);
    dump.state.y[static_cast<Eigen::Index>(i)] = parse_double(f[3]);
    dump.event.categories.push_back(static_cast<Category>(parse_int(f[4])));
  }
  return dump;
}

void write_event_csv(const std::filesystem::path& path, const Event& event) {
  std::ofstream out = open_out(path);
  out << "x,y,category\n";
  for (std::size_t i = 0; i < event.size(); ++i) {
    out << event.sites[i].x << ',' << event.sites[i].y << ',' << event.categories[i] << '\n';
  }
}

Event read_event_csv(const std::filesystem::path& path) {
  Event event;
  for (const auto& f : read_csv(path, "x,y,category")) {
    event.sites.push_back({static_cast<int>(parse_int(f[0])), static_cast<int>(parse_int(f[1]))});
    event.categories.push_back(static_cast<Category>(parse_int(f[2])));
  }
  require_distinct(event.sites);
  return event;
}

void write_field_csv(const std::filesystem::path& path, const CategoricalField& field) {
  std::ofstream out = open_out(path);
  out << "x,y,category\n";
  for (int y = 0; y < field.ny; ++y) {
    for (int x = 0; x < field.nx; ++x) out << x << ',' << y << ',' << field.at(x, y) << '\n';
  }
}

CategoricalField read_field_csv(const std::filesystem::path& path) {
  const Event cells = read_event_csv(path);
  CategoricalField field;
  for (const Site& s : cells.sites) {
    if (s.x < 0 || s.y < 0) throw FormatError("field cell with negative coordinate");
    field.nx = std::max(field.nx, s.x + 1);
    field.ny = std::max(field.ny, s.y + 1);
  }
  if (cells.size() != static_cast<std::size_t>(field.nx) * static_cast<std::size_t>(field.ny)) {
    throw FormatError(path.string() + ": field does not cover a full grid");
  }
  field.values.assign(cells.size(), 0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    field.values[static_cast<std::size_t>(cells.sites[i].y) * field.nx + cells.sites[i].x] =
        cells.categories[i];
  }
  return field;
}

// ---------------------------------------------------------------------------

void write_ppm(const std::filesystem::path& path, const CategoricalField& field,
               const CategorySet& categories) {
  std::ofstream out = open_out(path, true);
  out << "P6\n" << field.nx << ' ' << field.ny << "\n255\n";
  for (int y = field.ny - 1; y >= 0; --y) {
    for (int x = 0; x < field.nx; ++x) {
      const auto& rgb = kPalette[categories.index_of(field.at(x, y)) % kPalette.size()];
      out.write(reinterpret_cast<const char*>(rgb.data()), 3);
    }
  }
}

void write_pgm(const std::filesystem::path& path, const CategoricalField& field,
               const CategorySet& categories) {
  std::ofstream out = open_out(path, true);
  out << "P5\n" << field.nx << ' ' << field.ny << "\n255\n";
  const std::size_t levels = std::max<std::size_t>(categories.size() - 1, 1);
  for (int y = field.ny - 1; y >= 0; --y) {
    for (int x = 0; x < field.nx; ++x) {
      const auto grey =
          static_cast<unsigned char>(255 * categories.index_of(field.at(x, y)) / levels);
      out.put(static_cast<char>(grey));
    }
  }
}

CategoricalField rasterize_map(const TruncationMap& map, int pixels, double extent) {
  CategoricalField field;
  field.nx = field.ny = pixels;
  field.values.resize(static_cast<std::size_t>(pixels) * pixels);
  const double step = 2.0 * extent / pixels;
  for (int j = 0; j < pixels; ++j) {
    for (int i = 0; i < pixels; ++i) {
      field.values[static_cast<std::size_t>(j) * pixels + i] =
          map_point(map, -extent + (i + 0.5) * step, -extent + (j + 0.5) * step);
    }
  }
  return field;
}

}  // namespace tpg
