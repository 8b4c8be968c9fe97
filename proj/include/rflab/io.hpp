#pragma once

// File formats: CSV tables and network checkpoints.

#include "rflab/neural_velocity.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rflab {

/// Shortest decimal text that parses back to exactly `x`. Independent of the
/// global locale.
std::string format_double(double x);

/// Parses text written by format_double (or any plain decimal); throws
/// ConfigError on trailing garbage.
double parse_double(std::string_view text);

/// One CSV cell. Missing values are written as empty fields.
class CsvCell {
 public:
  CsvCell(double x) : text_(format_double(x)) {}
  CsvCell(std::optional<double> x) : text_(x ? format_double(*x) : std::string()) {}
  CsvCell(std::size_t x) : text_(std::to_string(x)) {}
  CsvCell(int x) : text_(std::to_string(x)) {}
  CsvCell(std::string_view s) : text_(s) {}
  CsvCell(const char* s) : text_(s) {}
  CsvCell(const std::string& s) : text_(s) {}
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

/// Header-first CSV writer. Each row must match the header width.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  void row(std::initializer_list<CsvCell> cells);
  void row(const std::vector<CsvCell>& cells);
  std::size_t rows() const { return rows_; }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t width_;
  std::size_t rows_ = 0;
};

/// Parsed CSV file, used by tests and by `translate` for its input.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

inline constexpr int kCheckpointVersion = 1;

/// Text checkpoint:
///   rflab-checkpoint <version>
///   d <d>
///   seed <seed>
///   activation <hidden activation>
///   widths <in> <h1> ... <out>
///   activations <act per layer>
///   embeddings <tags> <dim>
///   params <count>
/// followed by one parameter per line: every layer's row-major weight block
/// and bias, then the tag-embedding table.
void save_checkpoint(const std::filesystem::path& path, const NetParams& params);
NetParams load_checkpoint(const std::filesystem::path& path);

}  // namespace rflab
