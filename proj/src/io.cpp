#include "aspr/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aspr {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

double parse_cell(const std::string& cell, const std::string& path, long row,
                  const std::string& column) {
  const std::string t = trim(cell);
  if (t.empty()) {
    throw std::runtime_error(path + ": missing value at row " + std::to_string(row) +
                             ", column " + column);
  }
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  // ERANGE with a nonzero finite result is a subnormal, which is valid;
  // ERANGE with zero means true underflow.
  if (end != t.c_str() + t.size() || !std::isfinite(v) ||
      (errno == ERANGE && v == 0.0)) {
    throw std::runtime_error(path + ": bad numeric value '" + t + "' at row " +
                             std::to_string(row) + ", column " + column);
  }
  return v;
}

}  // namespace

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  CsvTable table;
  table.header = split_commas(line);
  for (const auto& name : table.header) {
    if (name.empty()) throw std::runtime_error(path + ": empty column name in header");
  }
  const long ncol = static_cast<long>(table.header.size());

  std::vector<double> cells;
  long nrow = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_commas(line);
    ++nrow;
    if (static_cast<long>(fields.size()) != ncol) {
      throw std::runtime_error(path + ": row " + std::to_string(nrow) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(ncol));
    }
    for (long j = 0; j < ncol; ++j) {
      cells.push_back(parse_cell(fields[j], path, nrow, table.header[j]));
    }
  }
  table.values.resize(nrow, ncol);
  for (long i = 0; i < nrow; ++i) {
    for (long j = 0; j < ncol; ++j) table.values(i, j) = cells[i * ncol + j];
  }
  return table;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_csv_table(const std::string& path, const std::vector<std::string>& header,
                     const Eigen::MatrixXd& values) {
  if (static_cast<long>(header.size()) != values.cols()) {
    throw std::invalid_argument("write_csv_table: header/column count mismatch");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (size_t j = 0; j < header.size(); ++j) {
    if (j) out << ',';
    out << header[j];
  }
  out << '\n';
  for (long i = 0; i < values.rows(); ++i) {
    for (long j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      out << format_double(values(i, j));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::map<std::string, std::string> cfg;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                               " is not key=value");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      throw std::runtime_error(path + ": line " + std::to_string(lineno) + " has empty key");
    }
    cfg[key] = trim(t.substr(eq + 1));
  }
  return cfg;
}

namespace {
const std::string& require_key(const std::map<std::string, std::string>& cfg,
                               const std::string& key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) throw std::runtime_error("config: missing key '" + key + "'");
  return it->second;
}
}  // namespace

double config_real(const std::map<std::string, std::string>& cfg, const std::string& key) {
  const std::string& v = require_key(cfg, key);
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || !std::isfinite(x) ||
      (errno == ERANGE && x == 0.0)) {
    throw std::runtime_error("config: key '" + key + "' has non-numeric value '" + v + "'");
  }
  return x;
}

int config_int(const std::map<std::string, std::string>& cfg, const std::string& key) {
  const double x = config_real(cfg, key);
  const int i = static_cast<int>(x);
  if (static_cast<double>(i) != x) {
    throw std::runtime_error("config: key '" + key + "' is not an integer");
  }
  return i;
}

double config_real_or(const std::map<std::string, std::string>& cfg,
                      const std::string& key, double fallback) {
  return cfg.count(key) ? config_real(cfg, key) : fallback;
}

int config_int_or(const std::map<std::string, std::string>& cfg, const std::string& key,
                  int fallback) {
  return cfg.count(key) ? config_int(cfg, key) : fallback;
}

std::string config_str_or(const std::map<std::string, std::string>& cfg,
                          const std::string& key, const std::string& fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

}  // namespace aspr
