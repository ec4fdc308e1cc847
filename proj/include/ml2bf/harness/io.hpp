#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "ml2bf/errors.hpp"
#include "ml2bf/harness/config.hpp"
#include "ml2bf/regression.hpp"

namespace ml2bf::harness {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Minimal CSV table; cells are written as given (no quoting needed for the
/// values this harness emits).
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable &row() {
    if (!rows_.empty() && rows_.back().size() != header_.size()) {
      throw InputError("csv row has " + std::to_string(rows_.back().size()) + " cells, expected " +
                       std::to_string(header_.size()));
    }
    rows_.emplace_back();
    return *this;
  }
  CsvTable &cell(const std::string &v) {
    rows_.back().push_back(v);
    return *this;
  }
  CsvTable &cell(const char *v) { return cell(std::string(v)); }
  CsvTable &cell(double v) { return cell(format_number(v)); }
  CsvTable &cell(int v) { return cell(std::to_string(v)); }
  CsvTable &cell(std::uint64_t v) { return cell(std::to_string(v)); }

  std::size_t size() const { return rows_.size(); }

  void write(std::ostream &out) const {
    auto line = [&](const std::vector<std::string> &cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(header_);
    for (const auto &r : rows_) {
      if (r.size() != header_.size()) throw InputError("csv row width does not match the header");
      line(r);
    }
  }

  void save(const std::filesystem::path &path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    write(out);
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline void save_json(const std::filesystem::path &path, const nlohmann::json &j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

inline std::filesystem::path prepare_output_dir(const std::string &dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec || !std::filesystem::is_directory(p)) throw ConfigError("cannot create output directory '" + dir + "'");
  return p;
}

/// Sidecar with the effective configuration and the build version. Holds no
/// timestamps, so reruns are byte-identical.
inline nlohmann::json sidecar(const ExperimentConfig &cfg, const std::string &version,
                              const std::map<std::string, std::string> &effective,
                              const std::vector<std::string> &outputs) {
  nlohmann::json j;
  j["experiment"] = cfg.experiment;
  j["version"] = version;
  nlohmann::json conf = nlohmann::json::object();
  for (const auto &[k, v] : effective) conf[k] = v;
  j["config"] = conf;
  j["outputs"] = outputs;
  return j;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw InputError("unterminated quote");
  out.push_back(trim(cur));
  return out;
}

}  // namespace detail

/// Reads a dataset: header row, column `y`, optional `x0_*` common predictors
/// (an intercept is used when there are none) and candidate columns x1..xp.
/// The result is orthogonalized against the common predictors.
inline Dataset load_dataset_csv(std::istream &in, const std::string &origin = "dataset") {
  std::string line;
  if (!std::getline(in, line)) throw InputError(origin + ": empty file");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);

  int y_col = -1;
  std::vector<int> x0_cols;
  std::map<int, int> x_cols;
  static const std::regex x_name("x([1-9][0-9]*)");
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string &name = header[c];
    std::smatch m;
    if (name == "y") {
      if (y_col >= 0) throw InputError(origin + ": duplicate column 'y'");
      y_col = static_cast<int>(c);
    } else if (name.rfind("x0_", 0) == 0) {
      x0_cols.push_back(static_cast<int>(c));
    } else if (std::regex_match(name, m, x_name)) {
      const int idx = std::stoi(m[1].str());
      if (x_cols.count(idx)) throw InputError(origin + ": duplicate column '" + name + "'");
      x_cols[idx] = static_cast<int>(c);
    } else {
      throw InputError(origin + ": unexpected column '" + name + "'");
    }
  }
  if (y_col < 0) throw InputError(origin + ": missing column 'y'");
  const int p = static_cast<int>(x_cols.size());
  for (int j = 1; j <= p; ++j) {
    if (!x_cols.count(j)) throw InputError(origin + ": missing column 'x" + std::to_string(j) + "'");
  }

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw InputError(origin + ": line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(header.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string &s = cells[c];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw InputError(origin + ": column '" + header[c] + "', line " + std::to_string(lineno) +
                         ": cannot parse '" + s + "' as a number");
      }
      values[c] = v;
    }
    rows.push_back(std::move(values));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw InputError(origin + ": no data rows");

  Dataset data;
  data.y.resize(n);
  data.x.resize(n, p);
  data.x0.resize(n, x0_cols.empty() ? 1 : static_cast<Eigen::Index>(x0_cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto &r = rows[static_cast<std::size_t>(i)];
    data.y(i) = r[static_cast<std::size_t>(y_col)];
    for (int j = 1; j <= p; ++j) data.x(i, j - 1) = r[static_cast<std::size_t>(x_cols[j])];
    if (x0_cols.empty()) {
      data.x0(i, 0) = 1.0;
    } else {
      for (std::size_t c = 0; c < x0_cols.size(); ++c)
        data.x0(i, static_cast<Eigen::Index>(c)) = r[static_cast<std::size_t>(x0_cols[c])];
    }
  }
  return orthogonalize(data);
}

inline Dataset load_dataset_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset '" + path + "'");
  return load_dataset_csv(in, path);
}

}  // namespace ml2bf::harness
