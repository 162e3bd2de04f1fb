#include "semalloc/metrics.h"

#include <charconv>
#include <sstream>

#include "semalloc/error.h"

namespace semalloc::metrics {
namespace {

const std::vector<std::string>& leading() {
  static const std::vector<std::string> f = {
      "policy", "scoring", "mu", "episode", "step", "o_total_s", "rb_bandwidth_hz",
      "i_over_l", "xi_threshold", "u_max", "wifi_rate_bits_s", "floor_vehicle", "floor_wifi"};
  return f;
}

const std::vector<std::string>& trailing() {
  static const std::vector<std::string> f = {
      "reward", "st_vehicles", "st_wifi", "wifi_gate", "collisions", "ok_vehicle_floor",
      "ok_wifi_floor", "ok_rb_exclusive", "ok_xi", "ok_u_range"};
  return f;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> header(int num_agents) {
  std::vector<std::string> h = leading();
  for (int i = 0; i < num_agents; ++i) {
    for (const auto& f : agent_fields()) h.push_back("a" + std::to_string(i) + "_" + f);
  }
  h.insert(h.end(), trailing().begin(), trailing().end());
  return h;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, int num_agents)
    : out_(path, std::ios::binary), num_agents_(num_agents) {
  if (!out_) throw IoError("cannot write metrics file " + path.string());
  const auto h = header(num_agents);
  for (std::size_t i = 0; i < h.size(); ++i) out_ << (i ? "," : "") << h[i];
  out_ << '\n';
}

void MetricsWriter::write(const RowContext& ctx, const mdp::Environment& env,
                          const mdp::StepOutcome& o) {
  const auto& cfg = env.config();
  const bool bit = env.scoring() == mdp::Scoring::kBit;
  std::ostringstream row;
  auto put = [&](const std::string& s) { row << ',' << s; };
  auto num = [&](double v) { put(format_double(v)); };
  auto flag = [&](bool b) { put(b ? "1" : "0"); };

  row << ctx.policy;
  put(bit ? "bit" : "semantic");
  num(bit ? env.bits_per_word() : 0.0);
  put(std::to_string(ctx.episode));
  put(std::to_string(ctx.step));
  num(cfg.coexist.o_total_s);
  num(env.topology().rb_bandwidth_hz);
  num(cfg.semantics.i_over_l);
  num(cfg.semantics.xi_threshold);
  put(std::to_string(cfg.semantics.u_max));
  num(cfg.coexist.wifi_rate_bits_s);
  num(env.floor_vehicle());
  num(env.floor_wifi());
  if (static_cast<int>(o.links.size()) != num_agents_) {
    throw std::invalid_argument("metrics row has the wrong number of agents");
  }
  for (const auto& l : o.links) {
    put(std::to_string(l.attach));
    put(std::to_string(l.link.bs));
    put(std::to_string(l.link.rb));
    put(l.tier == netsim::Tier::kMacro ? "macro" : "micro");
    num(l.power_w);
    num(l.o1_fraction);
    num(l.o1_s);
    num(l.o2_s);
    put(std::to_string(l.u));
    num(l.interference_w);
    num(l.sinr_db);
    num(l.xi);
    num(l.hsse);
    num(l.st_vehicle);
    num(l.st_wifi);
    flag(l.collided);
  }
  const auto& b = o.breakdown;
  const auto& c = o.constraints;
  num(b.reward);
  num(b.st_sum_vehicles);
  num(b.st_sum_wifi);
  put(std::to_string(b.wifi_gate));
  put(std::to_string(b.collision_penalty_count));
  flag(c.vehicle_floor);
  flag(c.wifi_floor);
  flag(c.rb_exclusive);
  flag(c.xi_threshold);
  flag(c.u_in_range);
  out_ << row.str() << '\n';
  if (!out_) throw IoError("metrics write failed");
  ++rows_;
}

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

const std::string& Table::text(std::size_t row, const std::string& name) const {
  int c = column(name);
  if (c < 0) throw SchemaError("missing column '" + name + "'");
  return rows.at(row)[static_cast<std::size_t>(c)];
}

double Table::number(std::size_t row, const std::string& name) const {
  const std::string& s = text(row, name);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError("column '" + name + "' holds a non-numeric value '" + s + "'");
  }
  return v;
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (first) {
      t.columns = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw IoError(path.string() + ": row " + std::to_string(t.rows.size() + 1) +
                        " has " + std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(t.columns.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (first) throw IoError(path.string() + " is empty");
  return t;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(columns);
  for (const auto& r : rows) line(r);
  if (!out) throw IoError("write failed for " + path.string());
}

int check_schema(const std::vector<std::string>& columns) {
  int agents = 0;
  while (true) {
    const std::string probe = "a" + std::to_string(agents) + "_attach";
    bool found = false;
    for (const auto& c : columns) found = found || c == probe;
    if (!found) break;
    ++agents;
  }
  const auto expected = header(agents);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= columns.size()) throw SchemaError("missing column '" + expected[i] + "'");
    if (columns[i] != expected[i]) {
      throw SchemaError("unexpected column '" + columns[i] + "' where '" + expected[i] +
                        "' was expected");
    }
  }
  if (columns.size() > expected.size()) {
    throw SchemaError("unexpected column '" + columns[expected.size()] + "'");
  }
  if (agents == 0) throw SchemaError("no per-agent columns (missing column 'a0_attach')");
  return agents;
}

}  // namespace semalloc::metrics
