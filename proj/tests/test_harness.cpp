#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include "usblnav/csv.hpp"
#include "usblnav/harness.hpp"

using namespace usblnav;
namespace fs = std::filesystem;

namespace {

RunConfig short_config() {
  RunConfig c = default_run_config();
  c.scenario.survey.duration = 20.0;
  c.scenario.imu_rate = 10.0;
  c.scenario.usbl_rate = 1.0;
  c.run.threads = 2;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

SeedOutcome outcome(std::uint64_t seed, Vec3 mse) {
  SeedOutcome s;
  s.seed = seed;
  s.ok = true;
  s.kinds = {FilterKind::Ltv};
  s.mse = {mse};
  return s;
}

}  // namespace

TEST(Aggregate, RootOfMeanSquareAndSeedSpread) {
  std::vector<SeedOutcome> seeds = {outcome(1, Vec3(1.0, 4.0, 0.0)),
                                    outcome(2, Vec3(9.0, 4.0, 0.0))};
  SeedOutcome failed;
  failed.seed = 3;
  seeds.push_back(failed);
  const RmsTable t = aggregate(seeds);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.seeds, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(t.rows[0].runs, 2u);
  EXPECT_DOUBLE_EQ(t.rows[0].rms.x(), std::sqrt(5.0));
  EXPECT_DOUBLE_EQ(t.rows[0].rms.y(), 2.0);
  // per-seed RMS 1 and 3: sample std sqrt(2)
  EXPECT_DOUBLE_EQ(t.rows[0].seed_std.x(), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(t.rows[0].seed_std.y(), 0.0);
  EXPECT_TRUE(aggregate({failed}).rows.empty());
}

TEST(Aggregate, SingleSeedEqualsTheSingleRun) {
  const RunConfig c = short_config();
  const SingleRun one = run_single(c, 7);
  const MonteCarloResult mc = run_monte_carlo(c, {7});
  ASSERT_EQ(mc.table.rows.size(), one.filters.size());
  for (std::size_t k = 0; k < one.filters.size(); ++k) {
    EXPECT_EQ(mc.table.rows[k].rms, one.filters[k].rms);
    EXPECT_EQ(mc.table.rows[k].seed_std, Vec3::Zero());
  }
}

TEST(MonteCarlo, DeterministicAndThreadCountIndependent) {
  RunConfig c = short_config();
  const auto seeds = seed_range(10, 5);
  const MonteCarloResult a = run_monte_carlo(c, seeds);
  c.run.threads = 1;
  const MonteCarloResult b = run_monte_carlo(c, seeds);
  std::ostringstream sa, sb;
  write_per_seed_csv(sa, a);
  write_per_seed_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  for (std::size_t k = 0; k < a.table.rows.size(); ++k) {
    EXPECT_EQ(a.table.rows[k].rms, b.table.rows[k].rms);
    EXPECT_LT(a.table.rows[k].seed_std.norm(), a.table.rows[k].rms.norm());
  }
}

TEST(MonteCarlo, FailedSeedsAreReportedNotFatal) {
  const RunConfig c = short_config();
  std::mutex m;
  std::vector<std::uint64_t> seen;
  const MonteCarloResult mc =
      run_monte_carlo(c, {1, 2, 3}, [&](const SingleRun& r) {
        std::lock_guard<std::mutex> lock(m);
        seen.push_back(r.seed);
        if (r.seed == 2) throw std::runtime_error("disk full");
      });
  EXPECT_EQ(seen.size(), 3u);
  EXPECT_EQ(mc.failures, (std::vector<std::uint64_t>{2}));
  EXPECT_EQ(mc.seeds[1].error, "disk full");
  EXPECT_EQ(mc.table.seeds, (std::vector<std::uint64_t>{1, 3}));
}

TEST(MonteCarlo, OutOfBoundsScenarioFailsEverySeed) {
  RunConfig c = short_config();
  c.scenario.bounds.max = 100.0;
  c.filter.bounds.max = 100.0;
  const MonteCarloResult mc = run_monte_carlo(c, {1, 2});
  EXPECT_EQ(mc.failures.size(), 2u);
  EXPECT_TRUE(mc.table.rows.empty());
}

TEST(RmsTableText, SixSignificantDigits) {
  RmsTable t;
  t.rows.push_back({FilterKind::Kfpw, Vec3(0.11223344, 2.0, 1e-3), Vec3::Zero(), 10});
  EXPECT_EQ(format_rms_table(t),
            "filter   runs  rms_x [m]   rms_y [m]   rms_z [m]\n"
            "KFPW       10  0.112233    2           0.001     \n");
  EXPECT_EQ(t.find(FilterKind::Kfpw), &t.rows[0]);
  EXPECT_EQ(t.find(FilterKind::Ltv), nullptr);
}

TEST(RunObservability, ChecksWindowAgainstDuration) {
  RunConfig c = short_config();
  EXPECT_THROW(run_observability(c, 25.0, 1.0), std::invalid_argument);
  EXPECT_THROW(run_observability(c, 0.0, 1.0), std::invalid_argument);
  const UcoSweep s = run_observability(c, 5.0, 5.0);
  EXPECT_EQ(s.windows.size(), 4u);
  EXPECT_GT(s.alpha1, 0.0);
}

TEST(RunFilter, SteadyStateWindowAndRowCount) {
  const RunConfig c = short_config();
  Scenario sc = c.scenario;
  sc.noise.seed = 5;
  const auto epochs = simulate(sc);
  const FilterRun r = run_filter(FilterKind::Ekf, epochs, sc.array, c.filter,
                                 c.init_spec(), 0.25);
  ASSERT_EQ(r.rows.size(), epochs.size());
  Vec3 sq = Vec3::Zero();
  int n = 0;
  for (std::size_t k = 1; k < r.rows.size(); ++k) {
    if (r.rows[k].t >= 15.0 - 1e-9) {
      sq += r.rows[k].error.cwiseAbs2();
      ++n;
    }
  }
  EXPECT_EQ(r.mse, sq / n);
  EXPECT_EQ(r.updates, 20u);
  EXPECT_THROW(run_filter(FilterKind::Ekf, {}, sc.array, c.filter,
                          c.init_spec(), 0.5),
               std::invalid_argument);
}

TEST(Golden, ShortFixedSeedRun) {
  const RunConfig c = short_config();
  const fs::path out = fs::temp_directory_path() / "usblnav_golden_run";
  fs::remove_all(out);
  write_single_run(out.string(), c, run_single(c, 3));
  const fs::path golden = USBLNAV_GOLDEN_DIR;
  const bool update = std::getenv("USBLNAV_UPDATE_GOLDEN") != nullptr;
  for (const char* name : {"rms.csv", "estimates_ltv.csv", "estimates_ekf.csv",
                           "estimates_kfpw.csv", "measurements.csv"}) {
    if (update) {
      fs::create_directories(golden);
      fs::copy_file(out / name, golden / name,
                    fs::copy_options::overwrite_existing);
      continue;
    }
    ASSERT_TRUE(fs::exists(golden / name)) << name;
    EXPECT_EQ(slurp(out / name), slurp(golden / name)) << name;
  }
  fs::remove_all(out);
}
