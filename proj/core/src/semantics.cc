#include "semalloc/semantics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "semalloc/error.h"

namespace semalloc::semantics {
namespace {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Index i such that grid[i] <= x <= grid[i+1], plus the weight of grid[i+1].
std::pair<std::size_t, double> bracket(const std::vector<double>& grid, double x) {
  if (grid.size() == 1 || x <= grid.front()) return {0, 0.0};
  if (x >= grid.back()) return {grid.size() - 2, 1.0};
  auto it = std::upper_bound(grid.begin(), grid.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - grid.begin());
  std::size_t lo = hi - 1;
  return {lo, (x - grid[lo]) / (grid[hi] - grid[lo])};
}

void validate(const XiTable& t) {
  if (t.u_values.empty() || t.sinr_db.empty()) throw ConfigError("xi table is empty");
  if (t.values.size() != t.u_values.size()) throw ConfigError("xi table row count mismatch");
  for (std::size_t i = 1; i < t.u_values.size(); ++i) {
    if (t.u_values[i] <= t.u_values[i - 1]) throw ConfigError("xi table u values must increase");
  }
  for (std::size_t j = 1; j < t.sinr_db.size(); ++j) {
    if (!(t.sinr_db[j] > t.sinr_db[j - 1])) throw ConfigError("xi table SINR breakpoints must increase");
  }
  for (const auto& row : t.values) {
    if (row.size() != t.sinr_db.size()) throw ConfigError("xi table column count mismatch");
    for (double v : row) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("xi table values must lie in [0, 1]");
    }
  }
}

double parse_double(std::string_view s, const std::string& what) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("xi table: cannot parse " + what + " '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

XiModel XiModel::parametric(ParametricXi coeffs) {
  if (!(coeffs.a > 0.0) || !(coeffs.b > 0.0)) {
    throw ConfigError("parametric xi needs positive a and b");
  }
  XiModel m;
  m.coeffs_ = coeffs;
  return m;
}

XiModel XiModel::table(XiTable t) {
  validate(t);
  XiModel m;
  m.is_table_ = true;
  m.table_ = std::move(t);
  return m;
}

XiModel XiModel::load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open xi table " + path.string());
  std::string line;
  XiTable t;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv(line);
    if (cells.size() < 2) throw ConfigError("xi table: need at least one SINR column");
    if (header) {
      for (std::size_t j = 1; j < cells.size(); ++j) {
        t.sinr_db.push_back(parse_double(cells[j], "SINR breakpoint"));
      }
      header = false;
      continue;
    }
    t.u_values.push_back(static_cast<int>(std::lround(parse_double(cells[0], "u value"))));
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) row.push_back(parse_double(cells[j], "value"));
    t.values.push_back(std::move(row));
  }
  return table(std::move(t));
}

XiTable XiModel::tabulate(const ParametricXi& coeffs, std::vector<int> u_values,
                          std::vector<double> sinr_db) {
  XiModel m = parametric(coeffs);
  XiTable t;
  t.u_values = std::move(u_values);
  t.sinr_db = std::move(sinr_db);
  for (int u : t.u_values) {
    std::vector<double> row;
    for (double s : t.sinr_db) row.push_back(m(u, s));
    t.values.push_back(std::move(row));
  }
  return t;
}

XiSample XiModel::evaluate(int u, double sinr_db) const {
  if (std::isnan(sinr_db)) throw std::invalid_argument("xi: SINR is NaN");
  if (!is_table_) {
    if (u < 1) throw std::invalid_argument("xi: u must be >= 1");
    double symbols = 1.0 - std::exp(-coeffs_.a * u);
    return {symbols * logistic(coeffs_.b * (sinr_db - coeffs_.c)), false};
  }

  XiSample out;
  int uc = u;
  if (u < table_.u_values.front() || u > table_.u_values.back()) {
    uc = std::clamp(u, table_.u_values.front(), table_.u_values.back());
    out.u_clamped = true;
  }
  std::vector<double> urow(table_.u_values.begin(), table_.u_values.end());
  auto [i, wu] = bracket(urow, static_cast<double>(uc));
  auto [j, ws] = bracket(table_.sinr_db, sinr_db);
  auto at = [&](std::size_t r, std::size_t c) {
    r = std::min(r, table_.u_values.size() - 1);
    c = std::min(c, table_.sinr_db.size() - 1);
    return table_.values[r][c];
  };
  double lo = (1.0 - ws) * at(i, j) + ws * at(i, j + 1);
  double hi = (1.0 - ws) * at(i + 1, j) + ws * at(i + 1, j + 1);
  out.value = std::clamp((1.0 - wu) * lo + wu * hi, 0.0, 1.0);
  return out;
}

void write_table(const XiTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write xi table " + path.string());
  char buf[64];
  auto fmt = [&](double v) {
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  out << "u";
  for (double s : table.sinr_db) out << ',' << fmt(s);
  out << '\n';
  for (std::size_t i = 0; i < table.u_values.size(); ++i) {
    out << table.u_values[i];
    for (double v : table.values[i]) out << ',' << fmt(v);
    out << '\n';
  }
}

double hsr(double bandwidth_hz, const SemanticSource& src, double xi) {
  return bandwidth_hz * hsse(src, xi);
}

double hsse(const SemanticSource& src, double xi) {
  if (src.u < 1) throw std::invalid_argument("u must be >= 1");
  if (!(xi >= 0.0 && xi <= 1.0)) throw std::invalid_argument("xi must lie in [0, 1]");
  return src.i_over_l * xi / src.u;
}

double st_vehicle(double hsr, double o1_fraction, double slot_s) {
  return hsr * o1_fraction * slot_s;
}

double hsse_bit(double sinr_linear, double bits_per_word, double i_over_l) {
  if (!(bits_per_word >= 1.0)) throw std::invalid_argument("bits per word must be >= 1");
  return i_over_l * std::log2(1.0 + sinr_linear) / bits_per_word;
}

int smallest_feasible_u(const XiModel& model, double sinr_db, double xi_th,
                        int u_max) {
  for (int u = 1; u <= u_max; ++u) {
    if (model(u, sinr_db) >= xi_th) return u;
  }
  return 0;
}

}  // namespace semalloc::semantics
