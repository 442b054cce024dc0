#pragma once

// Output directory bookkeeping: every file goes through one writer that
// records its SHA-256; the manifest is written last.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace branchlab::cli {

std::string sha256_hex(const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_double(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(const std::vector<double>& row);
  void add_row(const std::vector<std::string>& row);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Static SVG line plot; log axes drop nonpositive points.
std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series, bool log_x, bool log_y);

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  void write(const std::string& name, const std::string& contents);
  void write_json(const std::string& name, const nlohmann::json& j);
  /// manifest.json with name, size and sha256 of every file written so far.
  void finish();

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> entries_;  // name, hash
  std::vector<std::size_t> sizes_;
};

}  // namespace branchlab::cli
