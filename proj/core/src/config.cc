#include "semalloc/config.h"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "semalloc/error.h"

namespace semalloc::config {
namespace {

using nlohmann::json;
constexpr auto R = Provenance::kReported;
constexpr auto A = Provenance::kAssumed;

// Single list of every field; drives serialization, parsing, overrides and
// the provenance table so they cannot drift apart.
template <class Cfg, class V>
void visit(Cfg& c, V&& v) {
  auto& s = c.env.scenario;
  v("scenario", "num_mab", s.num_mab, A);
  v("scenario", "num_mib", s.num_mib, A);
  v("scenario", "num_wifi_ap", s.num_wifi_ap, A);
  v("scenario", "rb_count_mab", s.rb_count_mab, R);
  v("scenario", "rb_count_mib", s.rb_count_mib, R);
  v("scenario", "rb_bandwidth_hz", s.rb_bandwidth_hz, R);
  v("scenario", "bs_height_m", s.bs_height_m, R);
  v("scenario", "vehicle_height_m", s.vehicle_height_m, R);
  v("scenario", "area_side_m", s.area_side_m, R);
  v("scenario", "num_vehicles", s.num_vehicles, R);
  v("scenario", "speed_mps", s.speed_mps, R);
  v("scenario", "step_s", s.step_s, R);
  v("scenario", "min_distance_m", s.min_distance_m, A);
  v("scenario", "noise_psd_dbm_hz", s.noise_psd_dbm_hz, A);
  v("scenario", "noise_figure_db", s.noise_figure_db, A);
  v("scenario", "rayleigh_fading", s.rayleigh_fading, A);
  v("scenario", "layout_seed", s.layout_seed, A);

  auto& sem = c.env.semantics;
  v("semantics", "xi_mode", sem.xi_mode, A);
  v("semantics", "xi_a", sem.xi_coeffs.a, A);
  v("semantics", "xi_b", sem.xi_coeffs.b, A);
  v("semantics", "xi_c", sem.xi_coeffs.c, A);
  v("semantics", "xi_table_path", sem.xi_table_path, A);
  v("semantics", "i_over_l", sem.i_over_l, A);
  v("semantics", "u_max", sem.u_max, R);
  v("semantics", "xi_threshold", sem.xi_threshold, R);
  v("semantics", "reference_sinr_db", sem.reference_sinr_db, A);

  auto& cx = c.env.coexist;
  v("coexist", "o_total_s", cx.o_total_s, A);
  v("coexist", "o1_min", cx.o1_min, A);
  v("coexist", "o1_max", cx.o1_max, A);
  v("coexist", "wifi_rate_bits_s", cx.wifi_rate_bits_s, A);
  v("coexist", "wifi_bandwidth_hz", cx.wifi_bandwidth_hz, A);

  auto& m = c.env.mdp;
  v("mdp", "p_max_dbm", m.p_max_dbm, A);
  v("mdp", "penalty_c", m.penalty_c, A);
  v("mdp", "t_max", m.t_max, R);
  v("mdp", "floor_fraction", m.floor_fraction, A);
  v("mdp", "st_floor_vehicle", m.st_floor_vehicle, A);
  v("mdp", "st_floor_wifi", m.st_floor_wifi, A);

  auto& l = c.learner;
  v("learner", "hidden", l.hidden, A);
  v("learner", "lr", l.lr, R);
  v("learner", "beta1", l.beta1, R);
  v("learner", "beta2", l.beta2, R);
  v("learner", "adam_eps", l.adam_eps, A);
  v("learner", "episodes", l.episodes, R);
  v("learner", "update_interval", l.update_interval, R);
  v("learner", "epochs", l.epochs, R);
  v("learner", "minibatch", l.minibatch, A);
  v("learner", "gamma", l.gamma, R);
  v("learner", "clip_eps", l.clip_eps, R);
  v("learner", "entropy_coef", l.entropy_coef, A);
  v("learner", "init_stddev", l.init_stddev, R);
  v("learner", "value_scale", l.value_scale, A);
  v("learner", "max_nonfinite_updates", l.max_nonfinite_updates, A);

  auto& r = c.run;
  v("run", "seed", r.seed, A);
  v("run", "output_dir", r.output_dir, A);
  v("run", "eval_episodes", r.eval_episodes, A);
  v("run", "mu_min", r.mu_min, R);
  v("run", "mu_max", r.mu_max, R);
  v("run", "sweep_episodes", r.sweep_episodes, A);
  v("run", "eval_seeds", r.eval_seeds, A);
  v("run", "oracle_warmup_steps", r.oracle_warmup_steps, A);
  v("run", "oracle_max_points", r.oracle_max_points, A);
}

template <class T>
void read_value(const json& node, T& out, const std::string& where) {
  try {
    if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!node.is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, int>) {
      if (!node.is_number_integer()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!node.is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!node.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!node.is_string()) throw ConfigError("");
    } else {
      if (!node.is_array()) throw ConfigError("");
      for (const auto& e : node) {
        if (!e.is_number_integer()) throw ConfigError("");
      }
    }
    out = node.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + where + "' has the wrong type: " + node.dump());
  }
}

std::string upper(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

}  // namespace

const std::vector<FieldInfo>& field_table() {
  static const std::vector<FieldInfo> table = [] {
    std::vector<FieldInfo> out;
    ExperimentConfig c;
    visit(c, [&](const char* sec, const char* key, auto&, Provenance p) {
      out.push_back({sec, key, p});
    });
    return out;
  }();
  return table;
}

json to_json(const ExperimentConfig& cfg) {
  json j = json::object();
  visit(cfg, [&](const char* sec, const char* key, const auto& value, Provenance) {
    j[sec][key] = value;
  });
  return j;
}

ExperimentConfig from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  ExperimentConfig cfg;
  for (const auto& [sec, body] : j.items()) {
    if (!body.is_object()) throw ConfigError("config section '" + sec + "' must be an object");
    for (const auto& [key, node] : body.items()) {
      bool found = false;
      visit(cfg, [&](const char* s, const char* k, auto& value, Provenance) {
        if (found || sec != s || key != k) return;
        found = true;
        read_value(node, value, sec + "." + key);
      });
      if (!found) throw ConfigError("unknown config key '" + sec + "." + key + "'");
    }
  }
  return cfg;
}

json parse_text(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config " + origin + ": " + e.what());
  }
}

ExperimentConfig load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j = parse_text(ss.str(), path.string());
  apply_env_overrides(j);
  ExperimentConfig cfg = from_json(j);
  validate(cfg);
  return cfg;
}

std::string env_var_name(const FieldInfo& f) {
  return "SEMALLOC_" + upper(f.section) + "__" + upper(f.key);
}

void apply_env_overrides(json& j, const EnvLookup& lookup) {
  EnvLookup get = lookup ? lookup : [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
  if (!j.is_object()) j = json::object();
  for (const auto& f : field_table()) {
    auto value = get(env_var_name(f));
    if (!value) continue;
    json parsed;
    try {
      parsed = json::parse(*value);
    } catch (const json::parse_error&) {
      parsed = *value;
    }
    j[f.section][f.key] = parsed;
  }
}

void validate(const ExperimentConfig& cfg) {
  const auto& r = cfg.run;
  const auto& l = cfg.learner;
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(l.episodes >= 1, "learner.episodes must be >= 1");
  need(l.update_interval >= 1, "learner.update_interval must be >= 1");
  need(l.epochs >= 1, "learner.epochs must be >= 1");
  need(l.minibatch >= 1, "learner.minibatch must be >= 1");
  need(l.lr > 0.0, "learner.lr must be positive");
  need(l.gamma >= 0.0 && l.gamma <= 1.0, "learner.gamma must lie in [0, 1]");
  need(l.clip_eps > 0.0, "learner.clip_eps must be positive");
  need(l.entropy_coef >= 0.0, "learner.entropy_coef must be >= 0");
  need(l.value_scale > 0.0, "learner.value_scale must be positive");
  need(!l.hidden.empty(), "learner.hidden needs at least one layer");
  for (int w : l.hidden) need(w >= 1, "learner.hidden widths must be >= 1");
  need(r.eval_episodes >= 1, "run.eval_episodes must be >= 1");
  need(r.mu_min >= 1 && r.mu_max >= r.mu_min, "run.mu_min/mu_max must satisfy 1 <= min <= max");
  need(r.sweep_episodes >= 1, "run.sweep_episodes must be >= 1");
  need(r.eval_seeds >= 1, "run.eval_seeds must be >= 1");
  need(r.oracle_warmup_steps >= 0, "run.oracle_warmup_steps must be >= 0");
  need(!r.output_dir.empty(), "run.output_dir must not be empty");
  // Environment-level checks (topology, floors, xi table) run in its constructor.
  try {
    mdp::Environment env(cfg.env);
  } catch (const ConfigError&) {
    throw;
  } catch (const IoError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
}

std::string dump(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

}  // namespace semalloc::config
