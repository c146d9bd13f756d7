#pragma once

// Flat `key = value` run configuration.
//
// Lines are `key = value`; `#` starts a comment; blank lines are ignored.
// Vectors are whitespace- or comma-separated triples, receiver lists are
// triples separated by `;`, filter lists are comma-separated names.
// Every key is optional and unknown keys are errors. See README.md for the
// full key list.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "usblnav/filters.hpp"
#include "usblnav/truthsim.hpp"

namespace usblnav {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunSettings {
  std::vector<FilterKind> filters{FilterKind::Ltv, FilterKind::Ekf,
                                  FilterKind::Kfpw};
  InitMode init_mode = InitMode::Offset;
  Vec3 init_position_offset = Vec3::Zero();  // Custom mode
  Vec3 init_current_offset = Vec3::Zero();   // Custom mode
  double steady_state_fraction = 0.5;
  std::uint64_t first_seed = 1;
  std::size_t seeds = 10;
  double obs_delta = 5.0;
  double obs_stride = 1.0;
  /// Monte Carlo worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
  /// Monte Carlo: also write the full per-seed CSV bundle.
  bool write_traces = false;
};

struct RunConfig {
  Scenario scenario;
  FilterConfig filter;
  RunSettings run;

  /// Throws ConfigError describing the first invalid field.
  void validate() const;
  InitSpec init_spec() const;
};

/// Default scenario, filter tuning matching its noise figures, and run
/// settings.
RunConfig default_run_config();

/// Applies the text on top of `base`. Throws ConfigError with the line
/// number on malformed lines, unknown keys or unparsable values.
RunConfig parse_config(const std::string& text,
                       const RunConfig& base = default_run_config());
RunConfig load_config(const std::string& path,
                      const RunConfig& base = default_run_config());

/// Serializes every key; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const RunConfig& config);

std::string_view init_mode_name(InitMode mode);

}  // namespace usblnav
