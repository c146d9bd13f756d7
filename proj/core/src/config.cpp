#include "usblnav/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace usblnav {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw ConfigError("expected a finite number, got '" + s + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("expected true or false, got '" + s + "'");
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Vec3 parse_vec3(const std::string& s) {
  const auto parts = split(s, " \t,");
  if (parts.size() != 3) {
    throw ConfigError("expected three numbers, got '" + s + "'");
  }
  return {parse_double(parts[0]), parse_double(parts[1]),
          parse_double(parts[2])};
}

std::string fmt_vec3(const Vec3& v) {
  return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z());
}

std::vector<Vec3> parse_receivers(const std::string& s) {
  std::vector<Vec3> out;
  for (const auto& part : split(s, ";")) {
    const std::string t = trim(part);
    if (!t.empty()) out.push_back(parse_vec3(t));
  }
  return out;
}

std::string fmt_receivers(const std::vector<Vec3>& rs) {
  std::string out;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (i) out += "; ";
    out += fmt_vec3(rs[i]);
  }
  return out;
}

std::vector<FilterKind> parse_filters(const std::string& s) {
  std::vector<FilterKind> out;
  for (const auto& part : split(s, " \t,")) {
    const auto k = parse_filter_kind(part);
    if (!k) throw ConfigError("unknown filter '" + part + "'");
    if (std::find(out.begin(), out.end(), *k) == out.end()) out.push_back(*k);
  }
  return out;
}

std::string fmt_filters(const std::vector<FilterKind>& fs) {
  std::string out;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (i) out += ",";
    std::string id(filter_id(fs[i]));
    std::transform(id.begin(), id.end(), id.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    out += id;
  }
  return out;
}

InitMode parse_init_mode(const std::string& s) {
  if (s == "offset") return InitMode::Offset;
  if (s == "truth") return InitMode::Truth;
  if (s == "custom") return InitMode::Custom;
  throw ConfigError("unknown init mode '" + s + "'");
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define USBLNAV_DOUBLE(key, field)                                         \
  Key {                                                                    \
    key, [](RunConfig& c, const std::string& v) { c.field = parse_double(v); }, \
        [](const RunConfig& c) { return fmt(c.field); }                    \
  }
#define USBLNAV_VEC3(key, field)                                           \
  Key {                                                                    \
    key, [](RunConfig& c, const std::string& v) { c.field = parse_vec3(v); }, \
        [](const RunConfig& c) { return fmt_vec3(c.field); }               \
  }
#define USBLNAV_BOOL(key, field)                                           \
  Key {                                                                    \
    key, [](RunConfig& c, const std::string& v) { c.field = parse_bool(v); }, \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); } \
  }
#define USBLNAV_UINT(key, field, type)                                     \
  Key {                                                                    \
    key,                                                                   \
        [](RunConfig& c, const std::string& v) {                           \
          c.field = static_cast<type>(parse_uint(v));                      \
        },                                                                 \
        [](const RunConfig& c) { return std::to_string(c.field); }         \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      Key{"scenario.receivers",
          [](RunConfig& c, const std::string& v) {
            c.scenario.array.receivers = parse_receivers(v);
          },
          [](const RunConfig& c) {
            return fmt_receivers(c.scenario.array.receivers);
          }},
      USBLNAV_UINT("scenario.reference_index", scenario.array.reference_index,
                   std::size_t),
      USBLNAV_VEC3("scenario.transponder", scenario.transponder),
      USBLNAV_VEC3("scenario.current", scenario.current),
      USBLNAV_BOOL("scenario.hover", scenario.hover),
      USBLNAV_DOUBLE("scenario.imu_rate", scenario.imu_rate),
      USBLNAV_DOUBLE("scenario.usbl_rate", scenario.usbl_rate),
      USBLNAV_DOUBLE("scenario.range_min", scenario.bounds.min),
      USBLNAV_DOUBLE("scenario.range_max", scenario.bounds.max),
      USBLNAV_DOUBLE("scenario.init_offset", scenario.init_offset),
      USBLNAV_VEC3("scenario.init_direction", scenario.init_direction),
      USBLNAV_DOUBLE("scenario.leg_length", scenario.survey.leg_length),
      USBLNAV_DOUBLE("scenario.leg_spacing", scenario.survey.leg_spacing),
      USBLNAV_DOUBLE("scenario.speed", scenario.survey.speed),
      USBLNAV_DOUBLE("scenario.depth", scenario.survey.depth),
      USBLNAV_DOUBLE("scenario.turn_rate", scenario.survey.turn_rate),
      USBLNAV_DOUBLE("scenario.duration", scenario.survey.duration),
      USBLNAV_DOUBLE("scenario.start_x", scenario.survey.start_x),
      USBLNAV_DOUBLE("scenario.start_y", scenario.survey.start_y),
      USBLNAV_DOUBLE("scenario.heading", scenario.survey.heading),
      USBLNAV_BOOL("scenario.first_turn_left", scenario.survey.first_turn_left),
      USBLNAV_DOUBLE("scenario.tick", scenario.survey.tick),

      USBLNAV_DOUBLE("noise.dvl_relative", scenario.noise.dvl_relative),
      USBLNAV_DOUBLE("noise.dvl_floor", scenario.noise.dvl_floor),
      USBLNAV_DOUBLE("noise.gyro_std", scenario.noise.gyro_std),
      USBLNAV_DOUBLE("noise.range_std", scenario.noise.range_std),
      USBLNAV_DOUBLE("noise.rdoa_std", scenario.noise.rdoa_std),
      USBLNAV_UINT("noise.seed", scenario.noise.seed, std::uint64_t),

      USBLNAV_DOUBLE("filter.model.dvl_relative", filter.model.dvl_relative),
      USBLNAV_DOUBLE("filter.model.dvl_floor", filter.model.dvl_floor),
      USBLNAV_DOUBLE("filter.model.gyro_std", filter.model.gyro_std),
      USBLNAV_DOUBLE("filter.model.range_std", filter.model.range_std),
      USBLNAV_DOUBLE("filter.model.rdoa_std", filter.model.rdoa_std),
      USBLNAV_DOUBLE("filter.init_position_std", filter.init_position_std),
      USBLNAV_DOUBLE("filter.init_current_std", filter.init_current_std),
      USBLNAV_DOUBLE("filter.init_range_std", filter.init_range_std),
      USBLNAV_DOUBLE("filter.init_cross_std", filter.init_cross_std),
      USBLNAV_DOUBLE("filter.init_speed2_std", filter.init_speed2_std),
      USBLNAV_DOUBLE("filter.q_position", filter.q_position),
      USBLNAV_DOUBLE("filter.q_current", filter.q_current),
      USBLNAV_DOUBLE("filter.q_range", filter.q_range),
      USBLNAV_DOUBLE("filter.q_cross", filter.q_cross),
      USBLNAV_DOUBLE("filter.q_speed2", filter.q_speed2),
      USBLNAV_DOUBLE("filter.qy_floor", filter.qy_floor),
      USBLNAV_BOOL("filter.dense_qy", filter.dense_qy),
      USBLNAV_BOOL("filter.ranges_from_estimate", filter.ranges_from_estimate),

      Key{"run.filters",
          [](RunConfig& c, const std::string& v) {
            c.run.filters = parse_filters(v);
          },
          [](const RunConfig& c) { return fmt_filters(c.run.filters); }},
      Key{"run.init_mode",
          [](RunConfig& c, const std::string& v) {
            c.run.init_mode = parse_init_mode(v);
          },
          [](const RunConfig& c) {
            return std::string(init_mode_name(c.run.init_mode));
          }},
      USBLNAV_VEC3("run.init_position_offset", run.init_position_offset),
      USBLNAV_VEC3("run.init_current_offset", run.init_current_offset),
      USBLNAV_DOUBLE("run.steady_state_fraction", run.steady_state_fraction),
      USBLNAV_UINT("run.first_seed", run.first_seed, std::uint64_t),
      USBLNAV_UINT("run.seeds", run.seeds, std::size_t),
      USBLNAV_DOUBLE("run.obs_delta", run.obs_delta),
      USBLNAV_DOUBLE("run.obs_stride", run.obs_stride),
      USBLNAV_UINT("run.threads", run.threads, unsigned),
      USBLNAV_BOOL("run.write_traces", run.write_traces),
  };
  return k;
}

#undef USBLNAV_DOUBLE
#undef USBLNAV_VEC3
#undef USBLNAV_BOOL
#undef USBLNAV_UINT

}  // namespace

std::string_view init_mode_name(InitMode mode) {
  switch (mode) {
    case InitMode::Offset: return "offset";
    case InitMode::Truth: return "truth";
    case InitMode::Custom: return "custom";
  }
  return "?";
}

void RunConfig::validate() const {
  try {
    scenario.validate();
    filter.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (run.filters.empty()) throw ConfigError("run.filters: at least one filter");
  if (run.seeds == 0) throw ConfigError("run.seeds: at least one seed");
  if (!(run.steady_state_fraction > 0.0 && run.steady_state_fraction < 1.0)) {
    throw ConfigError("run.steady_state_fraction must lie in (0, 1)");
  }
  if (!(run.obs_delta > 0.0) || !(run.obs_stride > 0.0)) {
    throw ConfigError("run.obs_delta and run.obs_stride must be positive");
  }
}

InitSpec RunConfig::init_spec() const {
  InitSpec s;
  s.mode = run.init_mode;
  s.offset = scenario.init_offset;
  s.direction = scenario.init_direction;
  s.position_offset = run.init_position_offset;
  s.current_offset = run.init_current_offset;
  return s;
}

RunConfig default_run_config() {
  RunConfig c;
  c.scenario = default_scenario();
  c.filter = FilterConfig::defaults();
  c.filter.bounds = c.scenario.bounds;
  return c;
}

RunConfig parse_config(const std::string& text, const RunConfig& base) {
  RunConfig c = base;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    const auto& ks = keys();
    auto it = std::find_if(ks.begin(), ks.end(),
                           [&](const Key& k) { return k.name == key; });
    if (it == ks.end()) {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" +
                        key + "'");
    }
    try {
      it->set(c, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + key + ": " +
                        e.what());
    }
  }
  // The range bounds belong to the scenario; the filters check the same ones.
  c.filter.bounds = c.scenario.bounds;
  return c;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), base);
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& k : keys()) {
    out += k.name + " = " + k.get(config) + "\n";
  }
  return out;
}

}  // namespace usblnav
