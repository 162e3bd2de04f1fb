#pragma once

// Per-step metrics CSV: one row per (episode, step) with per-agent link
// fields (prefix a<i>_) and aggregates. Every row carries the constants
// needed to recompute its own derived fields.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "semalloc/mdp.h"

namespace semalloc::metrics {

// Shortest round-trip decimal form.
std::string format_double(double v);

inline const std::vector<std::string>& agent_fields() {
  static const std::vector<std::string> f = {
      "attach", "bs", "rb", "tier", "p_w", "o1", "o1_s", "o2_s", "u",
      "interference_w", "sinr_db", "xi", "hsse", "st", "st_w", "collided"};
  return f;
}

std::vector<std::string> header(int num_agents);

struct RowContext {
  std::string policy;
  int episode = 0;
  int step = 0;
};

class MetricsWriter {
 public:
  // Throws IoError when the file cannot be created.
  MetricsWriter(const std::filesystem::path& path, int num_agents);
  void write(const RowContext& ctx, const mdp::Environment& env, const mdp::StepOutcome& out);
  std::size_t rows() const { return rows_; }

 private:
  std::ofstream out_;
  int num_agents_;
  std::size_t rows_ = 0;
};

// Plain CSV table. Throws IoError for an unreadable or empty file and for
// ragged rows.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  double number(std::size_t row, const std::string& name) const;
  const std::string& text(std::size_t row, const std::string& name) const;
};

Table read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows);

// Number of agents implied by a metrics header; throws SchemaError naming the first missing or unexpected column.
int check_schema(const std::vector<std::string>& columns);

}  // namespace semalloc::metrics
