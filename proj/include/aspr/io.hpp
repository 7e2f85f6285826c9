#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace aspr {

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

// Strict numeric CSV: one header row, comma-separated, every cell a finite
// number. Any malformed or missing cell is a hard error naming the row and
// column. No quoting support; column names must not contain commas.
CsvTable read_csv_table(const std::string& path);

// Writes with %.17g so a read-write cycle is bit-exact and output bytes are
// reproducible across runs.
void write_csv_table(const std::string& path, const std::vector<std::string>& header,
                     const Eigen::MatrixXd& values);

std::string format_double(double x);

// Flat key=value config; '#' starts a comment, blank lines ignored,
// whitespace around keys and values trimmed. Later keys override earlier.
std::map<std::string, std::string> read_config(const std::string& path);

// Lookup helpers that fail with the key name instead of returning defaults.
double config_real(const std::map<std::string, std::string>& cfg, const std::string& key);
int config_int(const std::map<std::string, std::string>& cfg, const std::string& key);
double config_real_or(const std::map<std::string, std::string>& cfg,
                      const std::string& key, double fallback);
int config_int_or(const std::map<std::string, std::string>& cfg, const std::string& key,
                  int fallback);
std::string config_str_or(const std::map<std::string, std::string>& cfg,
                          const std::string& key, const std::string& fallback);

}  // namespace aspr
