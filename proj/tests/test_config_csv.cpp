#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "usblnav/config.hpp"
#include "usblnav/csv.hpp"
#include "usblnav/harness.hpp"

using namespace usblnav;

namespace {

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, DefaultsRoundTripThroughText) {
  const RunConfig a = default_run_config();
  const std::string text = to_config_text(a);
  const RunConfig b = parse_config(text);
  EXPECT_EQ(to_config_text(b), text);
  EXPECT_NO_THROW(b.validate());
}

TEST(Config, EditedValuesRoundTrip) {
  const RunConfig c = parse_config(
      "# comment\n"
      "scenario.duration = 300   # trailing\n"
      "scenario.current = 0.1, -0.2 0.3\n"
      "noise.seed = 77\n"
      "filter.dense_qy = yes\n"
      "run.filters = ltv,ekf\n"
      "run.init_mode = custom\n"
      "scenario.range_max = 400\n");
  EXPECT_EQ(c.scenario.survey.duration, 300.0);
  EXPECT_EQ(c.scenario.current, Vec3(0.1, -0.2, 0.3));
  EXPECT_EQ(c.scenario.noise.seed, 77u);
  EXPECT_TRUE(c.filter.dense_qy);
  ASSERT_EQ(c.run.filters.size(), 2u);
  EXPECT_EQ(c.run.filters[1], FilterKind::Ekf);
  EXPECT_EQ(c.run.init_mode, InitMode::Custom);
  EXPECT_EQ(c.filter.bounds.max, 400.0);  // filter shares the scenario bounds
  EXPECT_EQ(to_config_text(parse_config(to_config_text(c))), to_config_text(c));
}

TEST(Config, ErrorsNameTheLine) {
  EXPECT_EQ(error_of("\n\nscenario.bogus = 1\n"),
            "line 3: unknown key 'scenario.bogus'");
  EXPECT_EQ(error_of("scenario.duration\n"), "line 1: expected key = value");
  EXPECT_NE(error_of("scenario.duration = ten\n").find("line 1: scenario.duration"),
            std::string::npos);
  EXPECT_NE(error_of("scenario.current = 1 2\n").find("three numbers"),
            std::string::npos);
  EXPECT_NE(error_of("noise.seed = -3\n").find("non-negative integer"),
            std::string::npos);
  EXPECT_NE(error_of("filter.dense_qy = maybe\n").find("true or false"),
            std::string::npos);
  EXPECT_NE(error_of("run.filters = ltv,ukf\n").find("unknown filter"),
            std::string::npos);
  EXPECT_NE(error_of("scenario.duration = inf\n").find("finite"),
            std::string::npos);
}

TEST(Config, ValidationRejectsBadRuns) {
  RunConfig c = default_run_config();
  c.run.seeds = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = default_run_config();
  c.run.steady_state_fraction = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = default_run_config();
  c.run.filters.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = default_run_config();
  c.scenario.noise.range_std = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = default_run_config();
  c.filter.q_range = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, MissingFileIsAConfigError) {
  EXPECT_THROW(load_config("/nonexistent/usblnav.cfg"), ConfigError);
}

TEST(Csv, NumbersRoundTripExactly) {
  for (double v : {0.0, -0.0, 1.0 / 3.0, 1e-300, 6.02214076e23, -123.456,
                   std::numeric_limits<double>::min(),
                   std::numeric_limits<double>::max()}) {
    EXPECT_EQ(std::stod(csv_number(v)), v) << csv_number(v);
  }
  EXPECT_EQ(csv_number(std::nan("")), "nan");
}

TEST(Csv, HeadersAndShapes) {
  Scenario sc = default_scenario();
  sc.survey.duration = 0.05;
  const auto epochs = simulate(sc);
  std::ostringstream truth, meas;
  write_truth_csv(truth, epochs, sc.array);
  write_measurements_csv(meas, epochs, sc.array);
  EXPECT_EQ(first_line(truth.str()),
            "t,p_x,p_y,p_z,R_00,R_01,R_02,R_10,R_11,R_12,R_20,R_21,R_22,"
            "v_x,v_y,v_z,omega_x,omega_y,omega_z,rho_1,rho_2,rho_3,rho_4,"
            "vr_x,vr_y,vr_z");
  EXPECT_EQ(first_line(meas.str()),
            "t,has_usbl,vr_x,vr_y,vr_z,omega_x,omega_y,omega_z,rho_ref,"
            "drho_2,drho_3,drho_4");
  // one line per epoch plus the header, every line with the same field count
  std::istringstream in(meas.str());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 11) << line;
    ++lines;
  }
  EXPECT_EQ(lines, epochs.size() + 1);

  FilterRun run;
  std::ostringstream est;
  write_estimates_csv(est, run);
  EXPECT_EQ(est.str(),
            "t,filter_id,rhat_x,rhat_y,rhat_z,vchat_x,vchat_y,vchat_z,"
            "err_x,err_y,err_z,P_trace,nis\n");

  UcoSweep sweep;
  std::ostringstream sw;
  write_sweep_csv(sw, sweep);
  EXPECT_EQ(sw.str(), "t0,delta,min_eig,max_eig,rank\n");

  RmsTable table;
  RmsRow row;
  row.kind = FilterKind::Ekf;
  row.runs = 3;
  row.rms = Vec3(0.5, 0.25, 0.125);
  table.rows.push_back(row);
  std::ostringstream rms;
  write_rms_csv(rms, table);
  EXPECT_EQ(rms.str(),
            "filter_id,runs,rms_x,rms_y,rms_z,seed_std_x,seed_std_y,seed_std_z\n"
            "EKF,3,0.5,0.25,0.125,0,0,0\n");
}

TEST(Csv, PerSeedRowsForOkAndFailedSeeds) {
  MonteCarloResult mc;
  SeedOutcome ok;
  ok.seed = 4;
  ok.ok = true;
  ok.kinds = {FilterKind::Ltv};
  ok.mse = {Vec3(0.25, 1.0, 4.0)};
  SeedOutcome bad;
  bad.seed = 5;
  bad.error = "range 601, out of bounds\nat t=3";
  mc.seeds = {ok, bad};
  std::ostringstream out;
  write_per_seed_csv(out, mc);
  EXPECT_EQ(out.str(),
            "seed,status,filter_id,rms_x,rms_y,rms_z,error\n"
            "4,ok,LTV,0.5,1,2,\n"
            "5,failed,,,,,range 601  out of bounds at t=3\n");
}

TEST(Csv, MatrixRoundTrip) {
  Eigen::MatrixXd m(2, 3);
  m << 1.0 / 3.0, -2.5, 1e-17, 4.0, 0.0, -7e8;
  std::stringstream s;
  write_matrix(s, "Phi", 1.5, 4, m);
  std::string header;
  EXPECT_EQ(read_matrix(s, &header), m);
  EXPECT_EQ(header, "# Phi t=1.5 nr=4");
  std::stringstream ragged("1,2\n3\n");
  EXPECT_THROW(read_matrix(ragged), IoError);
}

TEST(Csv, WriteFileReportsUnwritablePaths) {
  EXPECT_THROW(write_file("/nonexistent/dir/x.csv", [](std::ostream&) {}),
               IoError);
}
