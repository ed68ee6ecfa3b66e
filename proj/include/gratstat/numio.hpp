// Numeric text round-tripping and minimal CSV I/O.
//
// Doubles are written with std::to_chars shortest form, which round-trips
// bit-exactly and keeps artifacts diff-able and byte-stable across reruns.
#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gratstat/core.hpp"

namespace gratstat {

inline std::string fmt_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{}) throw ArtifactError("bad numeric field: " + std::string(s));
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline void write_csv(const std::string &path, const std::vector<std::string> &header,
                      const std::vector<std::vector<double>> &rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write: " + path);
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto &row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt_double(row[i]);
    out << "\n";
  }
  if (!out) throw ArtifactError("write failed: " + path);
}

inline CsvTable read_csv(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read: " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ArtifactError("empty csv: " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    size_t pos = 0;
    while (pos <= line.size()) {
      size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      row.push_back(parse_double(std::string_view(line).substr(pos, comma - pos)));
      pos = comma + 1;
    }
    if (row.size() != t.header.size()) throw ArtifactError("ragged csv row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

} // namespace gratstat
