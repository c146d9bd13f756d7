#pragma once

// Run orchestration: single seeded runs, Monte Carlo batches, observability
// sweeps and the steady-state RMS tables.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "usblnav/config.hpp"
#include "usblnav/filters.hpp"
#include "usblnav/observability.hpp"
#include "usblnav/truthsim.hpp"

namespace usblnav {

struct TraceRow {
  double t = 0.0;
  Vec3 r_hat = Vec3::Zero();
  Vec3 vc_hat = Vec3::Zero();
  Vec3 error = Vec3::Zero();  // r̂ − r, body frame
  /// Trace of the position block of the covariance.
  double p_trace = 0.0;
  double nis = 0.0;  // NaN on epochs without an update
};

struct FilterRun {
  FilterKind kind = FilterKind::Ltv;
  std::vector<TraceRow> rows;
  /// Per-axis mean-square and RMS position error over the steady-state
  /// window.
  Vec3 mse = Vec3::Zero();
  Vec3 rms = Vec3::Zero();
  std::size_t updates = 0;
  std::size_t skipped_updates = 0;
  double nis_mean = 0.0;
  std::size_t nis_dimension = 0;
  /// Worst covariance health over the run.
  double min_cov_eig = 0.0;
  double max_cov_asymmetry = 0.0;
  FilterEstimate final;
};

struct RmsRow {
  FilterKind kind = FilterKind::Ltv;
  Vec3 rms = Vec3::Zero();
  /// Standard deviation across seeds of the per-seed RMS (zero for a single
  /// run).
  Vec3 seed_std = Vec3::Zero();
  std::size_t runs = 0;
};

struct RmsTable {
  std::vector<RmsRow> rows;
  std::vector<std::uint64_t> seeds;

  const RmsRow* find(FilterKind kind) const;
};

struct SingleRun {
  std::uint64_t seed = 0;
  std::vector<SimEpoch> epochs;
  std::vector<FilterRun> filters;
  RmsTable table;
};

/// Runs one filter over simulated epochs. Steady state covers the final
/// `steady_state_fraction` of the run.
FilterRun run_filter(FilterKind kind, const std::vector<SimEpoch>& epochs,
                     const ReceiverArray& array, const FilterConfig& config,
                     const InitSpec& init, double steady_state_fraction);

/// Simulates the scenario with noise seed `seed` and runs every configured
/// filter. Throws AssumptionViolation if the truth leaves the range bounds.
SingleRun run_single(const RunConfig& config, std::uint64_t seed);

/// Writes truth.csv, measurements.csv, estimates_<id>.csv, rms.csv and
/// config.txt into `dir` (created if needed).
void write_single_run(const std::string& dir, const RunConfig& config,
                      const SingleRun& run);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<FilterKind> kinds;
  std::vector<Vec3> mse;  // parallel to kinds
};

struct MonteCarloResult {
  std::vector<SeedOutcome> seeds;  // in seed order
  RmsTable table;                  // over the successful seeds
  std::vector<std::uint64_t> failures;
};

/// Runs every seed as an independent job on up to `config.run.threads`
/// workers. `on_seed` (if set) is called from the worker with each finished
/// run, for example to persist its traces. Failed seeds are reported in the
/// result instead of aborting the batch.
MonteCarloResult run_monte_carlo(
    const RunConfig& config, const std::vector<std::uint64_t>& seeds,
    const std::function<void(const SingleRun&)>& on_seed = {});

/// Aggregate RMS = sqrt(mean over seeds of the per-seed mean-square error).
RmsTable aggregate(const std::vector<SeedOutcome>& seeds);

/// UCO sweep over the noise-free signals of the scenario sampled at the
/// sensor rate, in the inertial-transformed frame.
UcoSweep run_observability(const RunConfig& config, double delta,
                           double stride);

/// Per-filter RMS text table, 6 significant digits.
std::string format_rms_table(const RmsTable& table);

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count);

}  // namespace usblnav
