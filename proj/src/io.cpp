#include "rflab/io.hpp"

#include "rflab/errors.hpp"

#include <charconv>
#include <sstream>
#include <system_error>

namespace rflab {

namespace {

std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string expect_line(std::istream& in, std::string_view key, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": truncated checkpoint header");
  const auto space = line.find(' ');
  if (line.substr(0, space) != key) {
    throw ConfigError(path.string() + ": expected header field '" + std::string(key) + "', got '" + line + "'");
  }
  return space == std::string::npos ? std::string() : line.substr(space + 1);
}

std::size_t parse_size(std::string_view text, const std::filesystem::path& path) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(path.string() + ": malformed integer '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string> words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw InvalidArgument("format_double: conversion failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : out_(path), path_(path), width_(header.size()) {
  if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
  out_ << join(header) << '\n';
}

void CsvWriter::row(std::initializer_list<CsvCell> cells) { row(std::vector<CsvCell>(cells)); }

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (cells.size() != width_) {
    throw InvalidArgument(path_.string() + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(width_));
  }
  std::vector<std::string> text;
  text.reserve(cells.size());
  for (const auto& c : cells) {
    if (c.text().find_first_of(",\"\n") != std::string::npos) {
      throw InvalidArgument(path_.string() + ": cell '" + c.text() + "' needs quoting");
    }
    text.push_back(c.text());
  }
  out_ << join(text) << '\n';
  if (!out_) throw ConfigError("write failed: " + path_.string());
  ++rows_;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ConfigError("CSV has no column '" + std::string(name) + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty CSV");
  table.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw ConfigError(path.string() + ": row " + std::to_string(table.rows.size() + 1) + " has " +
                        std::to_string(cells.size()) + " cells, expected " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

void save_checkpoint(const std::filesystem::path& path, const NetParams& params) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  const auto& layout = params.layout();
  out << "rflab-checkpoint " << kCheckpointVersion << '\n';
  out << "d " << params.dimension() << '\n';
  out << "seed " << params.seed() << '\n';
  out << "activation " << to_string(layout.activations().front()) << '\n';
  out << "widths";
  for (auto w : layout.widths()) out << ' ' << w;
  out << "\nactivations";
  for (auto a : layout.activations()) out << ' ' << to_string(a);
  out << "\nembeddings " << kDomainTagCount << ' ' << kTagEmbedDim << '\n';
  out << "params " << params.num_params() << '\n';
  for (Eigen::Index i = 0; i < params.theta().size(); ++i) out << format_double(params.theta()[i]) << '\n';
  if (!out) throw ConfigError("write failed: " + path.string());
}

NetParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("checkpoint not found: " + path.string());
  const auto version = parse_size(expect_line(in, "rflab-checkpoint", path), path);
  if (version != static_cast<std::size_t>(kCheckpointVersion)) {
    throw ConfigError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto d = parse_size(expect_line(in, "d", path), path);
  std::uint64_t seed = 0;
  {
    const auto text = expect_line(in, "seed", path);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw ConfigError(path.string() + ": malformed seed");
  }
  const auto hidden_act = parse_activation(expect_line(in, "activation", path));
  std::vector<std::size_t> widths;
  for (const auto& w : words(expect_line(in, "widths", path))) widths.push_back(parse_size(w, path));
  std::vector<Activation> acts;
  for (const auto& a : words(expect_line(in, "activations", path))) acts.push_back(parse_activation(a));
  if (acts.empty() || acts.front() != hidden_act) throw ConfigError(path.string() + ": activation tag mismatch");
  const auto emb = words(expect_line(in, "embeddings", path));
  if (emb.size() != 2 || parse_size(emb[0], path) != kDomainTagCount || parse_size(emb[1], path) != kTagEmbedDim) {
    throw ConfigError(path.string() + ": unsupported tag-embedding table shape");
  }
  const auto count = parse_size(expect_line(in, "params", path), path);

  NetParams params(d, MlpLayout(std::move(widths), std::move(acts)), seed);
  if (count != params.num_params()) {
    throw ConfigError(path.string() + ": header declares " + std::to_string(count) + " parameters, shapes imply " +
                      std::to_string(params.num_params()));
  }
  std::string line;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": truncated parameter payload");
    params.theta()[static_cast<Eigen::Index>(i)] = parse_double(line);
  }
  while (std::getline(in, line)) {
    if (!line.empty()) throw ConfigError(path.string() + ": trailing data after parameter payload");
  }
  return params;
}

}  // namespace rflab
