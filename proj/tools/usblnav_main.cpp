// usblnav command line front end.
//
//   usblnav run     single seeded run, writes the CSV bundle
//   usblnav mc      Monte Carlo batch, per-seed and aggregate RMS
//   usblnav obs     observability sweep of the configured scenario
//   usblnav compare Monte Carlo over all three filters, prints the table
//
// Exit codes: 0 ok, 1 usage, 2 config, 3 range assumption violated,
// 4 some Monte Carlo seeds failed, 5 I/O.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "usblnav/config.hpp"
#include "usblnav/csv.hpp"
#include "usblnav/harness.hpp"
#include "usblnav/observability.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kAssumption = 3, kPartial = 4, kIo = 5 };

struct Options {
  std::string config;
  std::vector<std::string> set;
  std::string filters;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string seeds;
  double delta = 0.0;
  double stride = 0.0;
  unsigned threads = 0;
  bool traces = false;
};

usblnav::RunConfig build_config(const Options& o) {
  usblnav::RunConfig c = usblnav::default_run_config();
  if (!o.config.empty()) c = usblnav::load_config(o.config, c);
  std::string extra;
  for (const auto& kv : o.set) extra += kv + "\n";
  if (!extra.empty()) c = usblnav::parse_config(extra, c);
  if (!o.filters.empty()) {
    c = usblnav::parse_config("run.filters = " + o.filters, c);
  }
  if (o.seed_given) c.run.first_seed = o.seed;
  if (o.threads) c.run.threads = o.threads;
  if (o.traces) c.run.write_traces = true;
  c.validate();
  return c;
}

std::string out_dir(const Options& o) {
  if (const char* env = std::getenv("NAV_OUT_DIR"); env && *env) return env;
  return o.out;
}

// "N" = N seeds from the first seed, "a..b" inclusive, "a,b,c" explicit.
std::vector<std::uint64_t> parse_seeds(const std::string& text,
                                       const usblnav::RunConfig& c) {
  if (text.empty()) return usblnav::seed_range(c.run.first_seed, c.run.seeds);
  std::vector<std::uint64_t> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const std::uint64_t a = std::stoull(text.substr(0, dots));
    const std::uint64_t b = std::stoull(text.substr(dots + 2));
    if (b < a) throw CLI::ValidationError("--seeds", "empty range");
    for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
    return out;
  }
  if (text.find(',') != std::string::npos) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto comma = text.find(',', pos);
      const std::string part = text.substr(pos, comma - pos);
      if (!part.empty()) out.push_back(std::stoull(part));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return out;
  }
  return usblnav::seed_range(c.run.first_seed, std::stoull(text));
}

int cmd_run(const Options& o) {
  const auto cfg = build_config(o);
  const std::uint64_t seed = o.seed_given ? o.seed : cfg.scenario.noise.seed;
  const auto run = usblnav::run_single(cfg, seed);
  const std::string dir = out_dir(o);
  usblnav::write_single_run(dir, cfg, run);
  std::cout << "seed " << seed << ", " << run.epochs.size() << " epochs\n";
  std::cout << usblnav::format_rms_table(run.table);
  for (const auto& f : run.filters) {
    const double err = f.rows.back().error.norm();
    std::printf("%-5s terminal error %.6g m, mean NIS %.6g (dim %zu), "
                "skipped updates %zu\n",
                std::string(usblnav::filter_id(f.kind)).c_str(), err,
                f.nis_mean, f.nis_dimension, f.skipped_updates);
  }
  std::cout << "wrote " << dir << "\n";
  return kOk;
}

int cmd_mc(const Options& o, bool compare) {
  auto cfg = build_config(o);
  if (compare && o.filters.empty()) {
    cfg.run.filters = {usblnav::FilterKind::Ltv, usblnav::FilterKind::Ekf,
                       usblnav::FilterKind::Kfpw};
  }
  const auto seeds = parse_seeds(o.seeds, cfg);
  if (seeds.empty()) throw CLI::ValidationError("--seeds", "no seeds");
  const std::string dir = out_dir(o);
  std::filesystem::create_directories(dir);

  std::function<void(const usblnav::SingleRun&)> on_seed;
  if (cfg.run.write_traces) {
    on_seed = [&](const usblnav::SingleRun& run) {
      usblnav::write_single_run(
          (std::filesystem::path(dir) / ("seed_" + std::to_string(run.seed)))
              .string(),
          cfg, run);
    };
  }
  const auto mc = usblnav::run_monte_carlo(cfg, seeds, on_seed);
  usblnav::write_file((std::filesystem::path(dir) / "mc_per_seed.csv").string(),
                      [&](std::ostream& os) { usblnav::write_per_seed_csv(os, mc); });
  usblnav::write_file((std::filesystem::path(dir) / "mc_summary.csv").string(),
                      [&](std::ostream& os) { usblnav::write_rms_csv(os, mc.table); });
  usblnav::write_file((std::filesystem::path(dir) / "config.txt").string(),
                      [&](std::ostream& os) { os << usblnav::to_config_text(cfg); });

  std::cout << "steady-state position error RMS over " << mc.table.seeds.size()
            << " seed(s)\n";
  std::cout << usblnav::format_rms_table(mc.table);
  if (compare) {
    std::cout << "\nacross-seed std of the per-seed RMS\n";
    for (const auto& row : mc.table.rows) {
      std::printf("%-7s        %-10.6g  %-10.6g  %-10.6g\n",
                  std::string(usblnav::filter_id(row.kind)).c_str(),
                  row.seed_std.x(), row.seed_std.y(), row.seed_std.z());
    }
  }
  if (!mc.failures.empty()) {
    std::cerr << mc.failures.size() << " seed(s) failed:";
    for (const auto& s : mc.seeds) {
      if (!s.ok) std::cerr << "\n  seed " << s.seed << ": " << s.error;
    }
    std::cerr << "\n";
    return kPartial;
  }
  return kOk;
}

int cmd_obs(const Options& o) {
  const auto cfg = build_config(o);
  const double delta = o.delta > 0.0 ? o.delta : cfg.run.obs_delta;
  const double stride = o.stride > 0.0 ? o.stride : cfg.run.obs_stride;
  if (delta > cfg.scenario.duration()) {
    throw CLI::ValidationError("--delta", "window longer than the run");
  }
  const auto sweep = usblnav::run_observability(cfg, delta, stride);
  const std::string dir = out_dir(o);
  std::filesystem::create_directories(dir);
  usblnav::write_file((std::filesystem::path(dir) / "obs_sweep.csv").string(),
                      [&](std::ostream& os) { usblnav::write_sweep_csv(os, sweep); });
  const auto geom = usblnav::coplanarity_check(cfg.scenario.array);
  std::printf("windows %zu, delta %.6g s: alpha1 %.6g, alpha2 %.6g, min rank %d/%d%s\n",
              sweep.windows.size(), sweep.delta, sweep.alpha1, sweep.alpha2,
              sweep.min_rank, sweep.dimension,
              sweep.min_rank < sweep.dimension ? " (RANK DEFICIENT)" : "");
  if (!geom.non_coplanar) {
    std::printf("receiver array is coplanar, normal (%.6g, %.6g, %.6g)\n",
                geom.witness.x(), geom.witness.y(), geom.witness.z());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"USBL transponder localization: simulation, filters and "
               "observability analysis"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", o.set, "override one config key (key=value)");
    sub->add_option("--filters", o.filters, "comma list of ltv, ekf, kfpw");
    sub->add_option("--out", o.out, "output directory (NAV_OUT_DIR overrides)");
    auto* seed = sub->add_option("--seed", o.seed, "noise seed / first seed");
    seed->each([&](const std::string&) { o.seed_given = true; });
  };

  auto* run = app.add_subcommand("run", "single seeded run");
  add_common(run);
  auto* mc = app.add_subcommand("mc", "Monte Carlo batch");
  add_common(mc);
  auto* compare = app.add_subcommand("compare", "three-filter RMS table");
  add_common(compare);
  for (auto* sub : {mc, compare}) {
    sub->add_option("--seeds", o.seeds, "N, a..b or a,b,c");
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    sub->add_flag("--traces", o.traces, "also write per-seed CSV bundles");
  }
  auto* obs = app.add_subcommand("obs", "observability Gramian sweep");
  add_common(obs);
  obs->add_option("--delta", o.delta, "window length (s)");
  obs->add_option("--stride", o.stride, "window start spacing (s)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(o);
    if (*mc) return cmd_mc(o, false);
    if (*compare) return cmd_mc(o, true);
    if (*obs) return cmd_obs(o);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const usblnav::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const usblnav::AssumptionViolation& e) {
    std::cerr << "range assumption violated: " << e.what() << "\n";
    return kAssumption;
  } catch (const usblnav::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
