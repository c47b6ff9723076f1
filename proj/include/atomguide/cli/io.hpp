#pragma once

// Output rendering (CSV with a '#' metadata header, or JSON), atomic file
// writes, and CSV input.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "atomguide/errors.hpp"

namespace atomguide::cli {

/// Failure to write outputs (not a configuration or numerical problem).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Format { csv, json };

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) throw std::logic_error("Table: row width does not match the header");
    rows.push_back(std::move(row));
  }
};

inline std::string render_csv(const Table& t, const nlohmann::ordered_json& metadata) {
  std::string out;
  for (const auto& [k, v] : metadata.items()) out += "# " + k + ": " + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
  for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + t.columns[c];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_number(row[c]);
    }
    out += '\n';
  }
  return out;
}

/// {"metadata", "columns", "data"}; non-finite values become null.
inline std::string render_json_table(const Table& t, const nlohmann::ordered_json& metadata) {
  nlohmann::ordered_json doc;
  doc["metadata"] = metadata;
  doc["columns"] = t.columns;
  auto data = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    auto r = nlohmann::ordered_json::array();
    for (double v : row) r.push_back(std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json());
    data.push_back(std::move(r));
  }
  doc["data"] = std::move(data);
  return doc.dump(2) + "\n";
}

inline std::string render_json(const nlohmann::ordered_json& doc) { return doc.dump(2) + "\n"; }

/// Writes `content` next to `path` under a temporary name, then renames it
/// into place, so readers never see a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) {
      std::error_code ignore;
      fs::remove(tmp, ignore);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Reads the named columns of a CSV file with a header row. Blank lines and
/// lines starting with '#' are skipped; extra columns are ignored.
inline std::map<std::string, std::vector<double>> read_csv_columns(const std::filesystem::path& path,
                                                                   const std::vector<std::string>& wanted) {
  const std::string text = read_text(path);
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  const std::string where = path.string();
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::size_t> index;
  std::map<std::string, std::vector<double>> out;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    auto cells = split(line);
    if (header.empty()) {
      header = cells;
      for (const auto& w : wanted) {
        const auto it = std::find(header.begin(), header.end(), w);
        if (it == header.end()) throw DomainError(where + ": header lacks column \"" + w + "\"");
        index.push_back(static_cast<std::size_t>(it - header.begin()));
        out[w];
      }
      continue;
    }
    if (cells.size() != header.size())
      throw DomainError(where + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(cells.size()));
    for (std::size_t k = 0; k < wanted.size(); ++k) {
      const std::string& s = cells[index[k]];
      double v = 0.0;
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
        throw DomainError(where + ":" + std::to_string(lineno) + ": column \"" + wanted[k] +
                          "\" is not a finite number: \"" + s + "\"");
      out[wanted[k]].push_back(v);
    }
  }
  if (header.empty()) throw DomainError(where + ": no header row");
  return out;
}

}  // namespace atomguide::cli
