#include "usblnav/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <thread>

#include <Eigen/Eigenvalues>

#include "usblnav/augmented_ltv.hpp"
#include "usblnav/csv.hpp"

namespace usblnav {
namespace {

TraceRow make_row(const FilterEstimate& est, const TruthState& truth) {
  TraceRow row;
  row.t = est.t;
  row.r_hat = est.position();
  row.vc_hat = est.current();
  row.error = row.r_hat - truth.transponder_body();
  row.p_trace = est.covariance.topLeftCorner<3, 3>().trace();
  row.nis = est.updated ? est.nis : std::numeric_limits<double>::quiet_NaN();
  return row;
}

void track_health(FilterRun& run, const Eigen::MatrixXd& p) {
  const double asym = (p - p.transpose()).cwiseAbs().maxCoeff();
  run.max_cov_asymmetry = std::max(run.max_cov_asymmetry, asym);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p, Eigen::EigenvaluesOnly);
  run.min_cov_eig = std::min(run.min_cov_eig, es.eigenvalues().minCoeff());
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

const RmsRow* RmsTable::find(FilterKind kind) const {
  for (const auto& r : rows) {
    if (r.kind == kind) return &r;
  }
  return nullptr;
}

FilterRun run_filter(FilterKind kind, const std::vector<SimEpoch>& epochs,
                     const ReceiverArray& array, const FilterConfig& config,
                     const InitSpec& init, double steady_state_fraction) {
  if (epochs.empty()) throw std::invalid_argument("run_filter: no epochs");
  FilterRun run;
  run.kind = kind;
  run.rows.reserve(epochs.size());
  run.min_cov_eig = std::numeric_limits<double>::infinity();

  const double t0 = epochs.front().frame.t;
  const double tf = epochs.back().frame.t;
  const double t_ss = t0 + (1.0 - steady_state_fraction) * (tf - t0);

  FilterEstimate est =
      initialize(kind, epochs.front().truth, epochs.front().frame, array,
                 config, init);
  run.rows.push_back(make_row(est, epochs.front().truth));
  track_health(run, est.covariance);

  Vec3 sq = Vec3::Zero();
  std::size_t n_ss = 0;
  double nis_sum = 0.0;
  std::size_t nis_n = 0;
  for (std::size_t k = 1; k < epochs.size(); ++k) {
    est = filter_step(est, epochs[k].frame, array, config);
    const TraceRow row = make_row(est, epochs[k].truth);
    track_health(run, est.covariance);
    if (est.updated) ++run.updates;
    if (est.update_skipped) ++run.skipped_updates;
    if (row.t >= t_ss - 1e-9) {
      sq += row.error.cwiseAbs2();
      ++n_ss;
      if (est.updated) {
        nis_sum += est.nis;
        ++nis_n;
        run.nis_dimension = static_cast<std::size_t>(est.innovation.size());
      }
    }
    run.rows.push_back(row);
  }
  if (n_ss > 0) run.mse = sq / static_cast<double>(n_ss);
  run.rms = run.mse.cwiseSqrt();
  run.nis_mean = nis_n ? nis_sum / static_cast<double>(nis_n)
                       : std::numeric_limits<double>::quiet_NaN();
  run.final = est;
  return run;
}

SingleRun run_single(const RunConfig& config, std::uint64_t seed) {
  config.validate();
  Scenario sc = config.scenario;
  sc.noise.seed = seed;
  SingleRun out;
  out.seed = seed;
  out.epochs = simulate(sc);
  const InitSpec init = config.init_spec();
  for (FilterKind kind : config.run.filters) {
    out.filters.push_back(run_filter(kind, out.epochs, sc.array, config.filter,
                                     init, config.run.steady_state_fraction));
  }
  out.table.seeds = {seed};
  for (const auto& f : out.filters) {
    out.table.rows.push_back({f.kind, f.rms, Vec3::Zero(), 1});
  }
  return out;
}

void write_single_run(const std::string& dir, const RunConfig& config,
                      const SingleRun& run) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  const auto path = [&](const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
  };
  const ReceiverArray& array = config.scenario.array;
  write_file(path("truth.csv"), [&](std::ostream& o) {
    write_truth_csv(o, run.epochs, array);
  });
  write_file(path("measurements.csv"), [&](std::ostream& o) {
    write_measurements_csv(o, run.epochs, array);
  });
  for (const auto& f : run.filters) {
    std::string id(filter_id(f.kind));
    std::transform(id.begin(), id.end(), id.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    write_file(path("estimates_" + id + ".csv"),
               [&](std::ostream& o) { write_estimates_csv(o, f); });
  }
  write_file(path("rms.csv"),
             [&](std::ostream& o) { write_rms_csv(o, run.table); });
  RunConfig used = config;
  used.scenario.noise.seed = run.seed;
  write_file(path("config.txt"),
             [&](std::ostream& o) { o << to_config_text(used); });
}

RmsTable aggregate(const std::vector<SeedOutcome>& seeds) {
  RmsTable table;
  std::vector<const SeedOutcome*> ok;
  for (const auto& s : seeds) {
    if (s.ok) {
      ok.push_back(&s);
      table.seeds.push_back(s.seed);
    }
  }
  if (ok.empty()) return table;
  for (std::size_t k = 0; k < ok.front()->kinds.size(); ++k) {
    RmsRow row;
    row.kind = ok.front()->kinds[k];
    row.runs = ok.size();
    Vec3 mse_sum = Vec3::Zero();
    Vec3 rms_sum = Vec3::Zero();
    for (const auto* s : ok) {
      mse_sum += s->mse[k];
      rms_sum += s->mse[k].cwiseSqrt();
    }
    const double n = static_cast<double>(ok.size());
    row.rms = (mse_sum / n).cwiseSqrt();
    if (ok.size() > 1) {
      const Vec3 mean = rms_sum / n;
      Vec3 var = Vec3::Zero();
      for (const auto* s : ok) {
        var += (s->mse[k].cwiseSqrt() - mean).cwiseAbs2();
      }
      row.seed_std = (var / (n - 1.0)).cwiseSqrt();
    }
    table.rows.push_back(row);
  }
  return table;
}

MonteCarloResult run_monte_carlo(
    const RunConfig& config, const std::vector<std::uint64_t>& seeds,
    const std::function<void(const SingleRun&)>& on_seed) {
  config.validate();
  if (seeds.empty()) throw std::invalid_argument("run_monte_carlo: no seeds");
  MonteCarloResult mc;
  mc.seeds.resize(seeds.size());

  unsigned workers = config.run.threads;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(
      std::min<std::size_t>(workers, seeds.size()));

  std::atomic<std::size_t> next{0};
  const auto job = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) return;
      SeedOutcome& out = mc.seeds[i];
      out.seed = seeds[i];
      try {
        const SingleRun run = run_single(config, seeds[i]);
        for (const auto& f : run.filters) {
          out.kinds.push_back(f.kind);
          out.mse.push_back(f.mse);
        }
        if (on_seed) on_seed(run);
        out.ok = true;
      } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(job);
  job();
  for (auto& th : pool) th.join();

  for (const auto& s : mc.seeds) {
    if (!s.ok) mc.failures.push_back(s.seed);
  }
  mc.table = aggregate(mc.seeds);
  return mc;
}

UcoSweep run_observability(const RunConfig& config, double delta,
                           double stride) {
  config.validate();
  const Scenario& sc = config.scenario;
  if (!(delta > 0.0)) throw std::invalid_argument("observability: delta must be positive");
  if (delta > sc.duration()) {
    throw std::invalid_argument("observability: delta exceeds the run duration");
  }
  const double dt = std::min(1.0 / sc.imu_rate, kMaxSignalSpacing);
  const SignalHistory h =
      sample_signals(truth_signal_source(sc), 0.0, sc.duration(), dt);
  return uco_sweep(h, sc.array, delta, stride, Frame::InertialTransformed,
                   sc.bounds);
}

std::string format_rms_table(const RmsTable& table) {
  std::string out = "filter   runs  rms_x [m]   rms_y [m]   rms_z [m]\n";
  for (const auto& row : table.rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%-7s %5zu  %-10s  %-10s  %-10s\n",
                  std::string(filter_id(row.kind)).c_str(), row.runs,
                  fmt6(row.rms.x()).c_str(), fmt6(row.rms.y()).c_str(),
                  fmt6(row.rms.z()).c_str());
    out += line;
  }
  return out;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> s(count);
  for (std::size_t i = 0; i < count; ++i) s[i] = first + i;
  return s;
}

}  // namespace usblnav
