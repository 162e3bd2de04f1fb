#pragma once

// Semantic link metrics: the similarity surrogate xi = Psi(u, SINR), the
// semantic rate (HSR), spectrum efficiency (HSSE), vehicle semantic
// throughput, and the bit-pipe comparator used by the non-semantic baseline.

#include <filesystem>
#include <string>
#include <vector>

namespace semalloc::semantics {

struct SemanticSource {
  double i_over_l = 1.0;  // suts per word
  int u = 1;              // semantic symbols per word
};

// xi(u, s) = (1 - exp(-a u)) * logistic(b (s_dB - c)).
struct ParametricXi {
  double a = 0.3;
  double b = 0.5;
  double c = 5.0;
};

// Grid of similarity values over u rows and SINR_dB columns.
struct XiTable {
  std::vector<int> u_values;          // strictly increasing
  std::vector<double> sinr_db;        // strictly increasing
  std::vector<std::vector<double>> values;  // [u row][sinr column], in [0, 1]
};

struct XiSample {
  double value = 0.0;
  bool u_clamped = false;  // u fell outside the table rows
};

class XiModel {
 public:
  static XiModel parametric(ParametricXi coeffs = {});
  static XiModel table(XiTable table);
  // Comma-separated file: header "u,<s_0>,<s_1>,..." then one row per u.
  // Throws IoError / ConfigError.
  static XiModel load_table(const std::filesystem::path& path);
  // Samples a parametric model onto a grid (used to cross-check table mode).
  static XiTable tabulate(const ParametricXi& coeffs, std::vector<int> u_values,
                          std::vector<double> sinr_db);

  bool is_table() const { return is_table_; }
  const ParametricXi& coefficients() const { return coeffs_; }
  const XiTable& grid() const { return table_; }

  XiSample evaluate(int u, double sinr_db) const;
  double operator()(int u, double sinr_db) const { return evaluate(u, sinr_db).value; }

 private:
  bool is_table_ = false;
  ParametricXi coeffs_;
  XiTable table_;
};

void write_table(const XiTable& table, const std::filesystem::path& path);

// W * (I/L) * xi / u. Throws std::invalid_argument for u < 1 or xi outside [0,1].
double hsr(double bandwidth_hz, const SemanticSource& src, double xi);

// (I/L) * xi / u, independent of bandwidth.
double hsse(const SemanticSource& src, double xi);

// hsr * o1 * slot. Licensed (macro) links pass o1 = 1.
double st_vehicle(double hsr, double o1_fraction, double slot_s);

// (I/L) * log2(1 + SINR) / mu: words per s per Hz of a bit pipe carrying
// mu bits per word, times suts per word.
double hsse_bit(double sinr_linear, double bits_per_word, double i_over_l);

// Smallest u in [1, u_max] meeting xi >= xi_th; 0 if none does.
int smallest_feasible_u(const XiModel& model, double sinr_db, double xi_th,
                        int u_max);

}  // namespace semalloc::semantics
