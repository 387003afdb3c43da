// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ghtangent/chart.hpp"
#include "ghtangent/fixtures.hpp"
#include "ghtangent/space.hpp"
#include "ghtangent/tangent.hpp"

namespace ght::io {

// Every JSON artifact carries this; loaders reject any other value.
inline constexpr int kSchemaVersion = 1;

// Loaders throw FormatError on malformed, truncated or mismatched input.

// Coordinates are stored inline. With table_path set, the file references a
// dense little-endian float64 table (row-major, N^2 entries) written next to it
// and no coordinates are stored.
void save_space(const std::filesystem::path& path, const Space& space,
                const std::optional<std::filesystem::path>& table_path = std::nullopt);
Space load_space(const std::filesystem::path& path);

void write_dist_table(const std::filesystem::path& path, const std::vector<double>& table);
std::vector<double> read_dist_table(const std::filesystem::path& path, std::size_t n);

std::string atlas_to_string(const Atlas& atlas);
Atlas atlas_from_string(const std::string& text);
void save_atlas(const std::filesystem::path& path, const Atlas& atlas);
Atlas load_atlas(const std::filesystem::path& path);

// Child -> parent index pairs.
void save_tree(const std::filesystem::path& path, const RefinementTree& tree);
RefinementTree load_tree(const std::filesystem::path& path);

// bundle_ref names the space file the section lives on.
void save_section(const std::filesystem::path& path, const Section& v, const std::string& bundle_ref);
Section load_section(const std::filesystem::path& path, std::string* bundle_ref = nullptr);

// A null entry marks a point outside the field's domain.
void save_scalar_field(const std::filesystem::path& path, const std::vector<std::optional<double>>& f);
std::vector<std::optional<double>> load_scalar_field(const std::filesystem::path& path);

std::string fixture_spec_to_string(const FixtureSpec& spec);
FixtureSpec fixture_spec_from_string(const std::string& text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// Minimal CSV writer; doubles use round-trip precision.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row();
  CsvTable& add(double v);
  CsvTable& add(long long v);
  CsvTable& add(std::size_t v) { return add(static_cast<long long>(v)); }
  CsvTable& add(int v) { return add(static_cast<long long>(v)); }
  CsvTable& add(const std::string& v);
  CsvTable& add(const char* v) { return add(std::string(v)); }
  std::string str() const;
  void save(const std::filesystem::path& path) const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string format_double(double v);

}  // namespace ght::io
