#pragma once

// Long-format CSV with a commented manifest header:
//   # coagwave <key>: <value>
//   col1,col2,...
//   ...

#include "coagwave/params.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef COAGWAVE_VERSION
#define COAGWAVE_VERSION "0.0.0"
#endif

namespace coagwave {

struct RunManifest {
  std::string config_hash;
  std::string version = COAGWAVE_VERSION;
  std::string timestamp;  // UTC, ISO 8601
  std::vector<std::pair<std::string, std::string>> extra;  // tolerances, seeds, command

  static RunManifest for_config(const Config& cfg) {
    RunManifest m;
    m.config_hash = coagwave::config_hash(cfg);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    m.timestamp = os.str();
    return m;
  }
  RunManifest& add(std::string key, std::string value) {
    extra.emplace_back(std::move(key), std::move(value));
    return *this;
  }
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct CsvTable {
  std::map<std::string, std::string> manifest;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::out_of_range("no column " + name);
  }
  [[nodiscard]] double number(std::size_t row, const std::string& name) const {
    return std::stod(rows.at(row).at(column(name)));
  }
};

inline void write_csv(std::ostream& out, const RunManifest& m, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  out << "# coagwave version: " << m.version << "\n";
  out << "# coagwave config_hash: " << m.config_hash << "\n";
  out << "# coagwave timestamp: " << m.timestamp << "\n";
  for (const auto& [k, v] : m.extra) out << "# coagwave " << k << ": " << v << "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << "\n";
  };
  line(header);
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw std::logic_error("csv row width does not match header");
    line(r);
  }
}

inline void write_csv(const std::string& path, const RunManifest& m, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_csv(out, m, header, rows);
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("#", 0) == 0) {
      const std::string tag = "# coagwave ";
      if (line.rfind(tag, 0) == 0) {
        const auto body = line.substr(tag.size());
        const auto colon = body.find(": ");
        if (colon != std::string::npos) t.manifest[body.substr(0, colon)] = body.substr(colon + 2);
      }
      continue;
    }
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    auto cells = split(line);
    if (cells.size() != t.header.size())
      throw std::runtime_error("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                               std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw std::runtime_error("csv has no header");
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_csv(in);
}

/// CSV body with manifest lines stripped.
inline std::string csv_body(const std::string& text) {
  std::istringstream in(text);
  std::string out, line;
  while (std::getline(in, line))
    if (line.rfind("#", 0) != 0) out += line + "\n";
  return out;
}

}  // namespace coagwave
