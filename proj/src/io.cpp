// SPDX-License-Identifier: Apache-2.0
#include "ghtangent/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ght::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& what) { throw FormatError(what); }

json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(what + ": malformed JSON (" + e.what() + ")");
  }
}

void check_schema(const json& j, const std::string& what) {
  if (!j.is_object()) fail(what + ": expected a JSON object");
  auto it = j.find("schema_version");
  if (it == j.end() || !it->is_number_integer()) fail(what + ": missing schema_version");
  if (it->get<int>() != kSchemaVersion)
    fail(what + ": schema_version " + std::to_string(it->get<int>()) + " is not supported");
}

const json& field(const json& j, const char* key, const std::string& what) {
  auto it = j.find(key);
  if (it == j.end()) fail(what + ": missing field '" + key + "'");
  return *it;
}

// Converts json type errors into FormatError.
template <class T>
T get(const json& j, const char* key, const std::string& what) {
  try {
    return field(j, key, what).get<T>();
  } catch (const json::exception& e) {
    fail(what + ": bad field '" + key + "' (" + e.what() + ")");
  }
}

json matrix_json(const RowMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) r.push_back(m(i, c));
    rows.push_back(std::move(r));
  }
  return rows;
}

RowMatrix matrix_from(const json& rows, Eigen::Index cols, const std::string& what) {
  if (!rows.is_array()) fail(what + ": expected an array of rows");
  RowMatrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != cols) fail(what + ": ragged row " + std::to_string(i));
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (!r[c].is_number()) fail(what + ": non-numeric entry");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = r[c].get<double>();
    }
  }
  return m;
}

json chart_json(const Chart& c) {
  json j;
  j["k"] = c.k;
  j["domain"] = c.domain.indices();
  j["phi"] = matrix_json(c.phi);
  j["eps"] = c.eps;
  j["comp"] = c.comp;
  return j;
}

Chart chart_from(const json& j, const std::string& what) {
  if (!j.is_object()) fail(what + ": chart must be an object");
  Chart c;
  c.k = get<int>(j, "k", what);
  if (c.k < 1) fail(what + ": chart dimension must be positive");
  try {
    c.domain = PointSet::from_indices(get<std::vector<Index>>(j, "domain", what));
  } catch (const std::invalid_argument& e) {
    fail(what + ": " + e.what());
  }
  c.phi = matrix_from(field(j, "phi", what), c.k, what);
  c.eps = get<double>(j, "eps", what);
  c.comp = get<double>(j, "comp", what);
  try {
    c.check();
  } catch (const std::invalid_argument& e) {
    fail(what + ": " + e.what());
  }
  return c;
}

json atlas_json(const Atlas& a) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["level"] = a.level;
  j["eps"] = a.eps;
  j["delta"] = a.delta;
  j["charts"] = json::array();
  for (const auto& c : a.charts) j["charts"].push_back(chart_json(c));
  return j;
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

void write_dist_table(const fs::path& path, const std::vector<double>& table) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (double v : table) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    std::array<char, 8> buf;
    std::memcpy(buf.data(), &bits, 8);
    out.write(buf.data(), 8);
  }
}

std::vector<double> read_dist_table(const fs::path& path, std::size_t n) {
  const std::string raw = read_text(path);
  if (raw.size() != n * n * 8)
    fail(path.string() + ": expected " + std::to_string(n * n * 8) + " bytes, found " + std::to_string(raw.size()));
  std::vector<double> t(n * n);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, raw.data() + 8 * i, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    t[i] = std::bit_cast<double>(bits);
  }
  return t;
}

void save_space(const fs::path& path, const Space& space, const std::optional<fs::path>& table_path) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["points"] = space.size();
  j["weights"] = space.weights();
  if (table_path || !space.has_coords()) {
    fs::path tp = table_path ? *table_path : fs::path(path).replace_extension(".dist.bin");
    fs::path rel = tp.is_absolute() || !path.has_parent_path() ? tp : tp.lexically_relative(path.parent_path());
    if (rel.empty()) rel = tp;
    write_dist_table(tp.is_absolute() || !path.has_parent_path() ? tp : path.parent_path() / rel,
                     space.distance_table());
    j["dist_table"] = rel.generic_string();
  } else {
    j["coords"] = matrix_json(space.coords());
  }
  if (space.has_dim_label()) j["dim_label"] = space.dim_label();
  write_text(path, j.dump() + "\n");
}

Space load_space(const fs::path& path) {
  const std::string what = path.string();
  const json j = parse(read_text(path), what);
  check_schema(j, what);
  const auto n = get<std::size_t>(j, "points", what);
  auto w = get<std::vector<double>>(j, "weights", what);
  if (w.size() != n) fail(what + ": weights length does not match points");
  std::vector<int> labels;
  if (j.contains("dim_label")) labels = get<std::vector<int>>(j, "dim_label", what);
  const bool has_coords = j.contains("coords"), has_table = j.contains("dist_table");
  if (has_coords == has_table) fail(what + ": exactly one of coords and dist_table must be present");
  try {
    if (has_coords) {
      const auto& rows = j["coords"];
      if (!rows.is_array() || rows.size() != n) fail(what + ": coords length does not match points");
      const Eigen::Index d = n == 0 ? 0 : static_cast<Eigen::Index>(rows[0].size());
      return Space::euclidean(matrix_from(rows, d, what), std::move(w), std::move(labels));
    }
    fs::path tp = get<std::string>(j, "dist_table", what);
    if (tp.is_relative()) tp = path.parent_path() / tp;
    return Space::from_table(n, read_dist_table(tp, n), std::move(w), std::move(labels));
  } catch (const std::invalid_argument& e) {
    fail(what + ": " + e.what());
  }
}

std::string atlas_to_string(const Atlas& atlas) { return atlas_json(atlas).dump() + "\n"; }

Atlas atlas_from_string(const std::string& text) {
  const std::string what = "atlas";
  const json j = parse(text, what);
  check_schema(j, what);
  Atlas a;
  a.level = get<int>(j, "level", what);
  a.eps = get<double>(j, "eps", what);
  a.delta = get<double>(j, "delta", what);
  const auto& charts = field(j, "charts", what);
  if (!charts.is_array()) fail(what + ": charts must be an array");
  for (const auto& c : charts) a.charts.push_back(chart_from(c, what));
  return a;
}

void save_atlas(const fs::path& path, const Atlas& atlas) { write_text(path, atlas_to_string(atlas)); }

Atlas load_atlas(const fs::path& path) {
  try {
    return atlas_from_string(read_text(path));
  } catch (const FormatError& e) {
    fail(path.string() + ": " + e.what());
  }
}

void save_tree(const fs::path& path, const RefinementTree& tree) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["pairs"] = json::array();
  for (std::size_t c = 0; c < tree.parent.size(); ++c) j["pairs"].push_back({c, tree.parent[c]});
  j["splits"] = json::array();
  for (const auto& s : tree.splits) j["splits"].push_back({{"fine_chart", s.fine_chart}, {"children", s.children}});
  write_text(path, j.dump() + "\n");
}

RefinementTree load_tree(const fs::path& path) {
  const std::string what = path.string();
  const json j = parse(read_text(path), what);
  check_schema(j, what);
  RefinementTree t;
  const auto pairs = get<std::vector<std::array<std::size_t, 2>>>(j, "pairs", what);
  t.parent.resize(pairs.size());
  std::vector<bool> seen(pairs.size(), false);
  for (const auto& [child, parent] : pairs) {
    if (child >= pairs.size() || seen[child]) fail(what + ": child indices must be a permutation of 0..n-1");
    seen[child] = true;
    t.parent[child] = parent;
  }
  if (j.contains("splits")) {
    for (const auto& s : field(j, "splits", what)) {
      if (!s.is_object()) fail(what + ": bad split record");
      t.splits.push_back({get<std::size_t>(s, "fine_chart", what), get<std::vector<std::size_t>>(s, "children", what)});
    }
  }
  return t;
}

void save_section(const fs::path& path, const Section& v, const std::string& bundle_ref) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["bundle"] = bundle_ref;
  j["vectors"] = json::array();
  for (const auto& x : v.values()) j["vectors"].push_back(std::vector<double>(x.data(), x.data() + x.size()));
  write_text(path, j.dump() + "\n");
}

Section load_section(const fs::path& path, std::string* bundle_ref) {
  const std::string what = path.string();
  const json j = parse(read_text(path), what);
  check_schema(j, what);
  if (bundle_ref) *bundle_ref = get<std::string>(j, "bundle", what);
  const auto rows = get<std::vector<std::vector<double>>>(j, "vectors", what);
  std::vector<Vector> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(Eigen::Map<const Vector>(r.data(), static_cast<Eigen::Index>(r.size())));
  return Section(std::move(v));
}

void save_scalar_field(const fs::path& path, const std::vector<std::optional<double>>& f) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["values"] = json::array();
  for (const auto& v : f) j["values"].push_back(v ? json(*v) : json(nullptr));
  write_text(path, j.dump() + "\n");
}

std::vector<std::optional<double>> load_scalar_field(const fs::path& path) {
  const std::string what = path.string();
  const json j = parse(read_text(path), what);
  // A bare array is accepted as an unversioned legacy field.
  const json* values = &j;
  if (!j.is_array()) {
    check_schema(j, what);
    values = &field(j, "values", what);
  }
  if (!values->is_array()) fail(what + ": values must be an array");
  std::vector<std::optional<double>> f;
  f.reserve(values->size());
  for (const auto& v : *values) {
    if (v.is_null()) f.emplace_back();
    else if (v.is_number()) f.emplace_back(v.get<double>());
    else fail(what + ": non-numeric field entry");
  }
  return f;
}

std::string fixture_spec_to_string(const FixtureSpec& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = to_string(s.kind);
  j["k"] = s.k;
  j["n"] = s.n;
  j["lip_g"] = s.lip_g;
  j["angles"] = s.angles;
  j["seed"] = s.seed;
  j["lattice"] = s.lattice;
  j["tower"] = to_string(s.tower);
  return j.dump() + "\n";
}

FixtureSpec fixture_spec_from_string(const std::string& text) {
  const std::string what = "fixture spec";
  const json j = parse(text, what);
  if (!j.is_object()) fail(what + ": expected an object");
  // Hand-written configs may omit the version; a present one must match.
  if (j.contains("schema_version")) check_schema(j, what);
  FixtureSpec s;
  try {
    s.kind = parse_fixture_kind(get<std::string>(j, "kind", what));
    if (j.contains("k")) s.k = get<int>(j, "k", what);
    if (j.contains("n")) s.n = get<std::size_t>(j, "n", what);
    if (j.contains("lip_g")) s.lip_g = get<double>(j, "lip_g", what);
    if (j.contains("angles")) s.angles = get<std::vector<double>>(j, "angles", what);
    if (j.contains("seed")) s.seed = get<std::uint64_t>(j, "seed", what);
    if (j.contains("lattice")) s.lattice = get<bool>(j, "lattice", what);
    if (j.contains("tower")) s.tower = parse_graph_tower(get<std::string>(j, "tower", what));
    s.check();
  } catch (const std::invalid_argument& e) {
    fail(what + ": " + e.what());
  }
  return s;
}

std::string format_double(double v) {
  std::array<char, 32> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), end);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row() {
  rows_.emplace_back();
  return *this;
}

CsvTable& CsvTable::add(double v) {
  if (rows_.empty()) row();
  rows_.back().push_back(format_double(v));
  return *this;
}

CsvTable& CsvTable::add(long long v) {
  if (rows_.empty()) row();
  rows_.back().push_back(std::to_string(v));
  return *this;
}

CsvTable& CsvTable::add(const std::string& v) {
  if (rows_.empty()) row();
  const bool quote = v.find_first_of(",\"\n") != std::string::npos;
  if (!quote) {
    rows_.back().push_back(v);
  } else {
    std::string q = "\"";
    for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    rows_.back().push_back(q + "\"");
  }
  return *this;
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

void CsvTable::save(const fs::path& path) const { write_text(path, str()); }

}  // namespace ght::io
