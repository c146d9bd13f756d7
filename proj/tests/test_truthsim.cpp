#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "usblnav/truthsim.hpp"

using namespace usblnav;

namespace {

SurveyParams untick(SurveyParams p) {
  p.tick = 0.0;
  return p;
}

}  // namespace

TEST(DefaultScenario, FiguresFromTheSurveySetup) {
  const Scenario sc = default_scenario();
  ASSERT_EQ(sc.array.size(), 4u);
  EXPECT_TRUE(sc.array.fully_observable_geometry());
  EXPECT_EQ(sc.array.receivers[0], Vec3(0.2, -0.15, 0.0));
  EXPECT_EQ(sc.array.receivers[1], Vec3(0.2, 0.15, 0.0));
  EXPECT_EQ(sc.array.receivers[2], Vec3(0.4, 0.0, 0.15));
  EXPECT_EQ(sc.array.receivers[3], Vec3(0.4, 0.0, -0.15));
  EXPECT_EQ(sc.array.reference_index, 0u);
  EXPECT_EQ(sc.transponder, Vec3(200.0, 0.0, 0.0));
  EXPECT_EQ(sc.current, Vec3(0.2, 0.2, 0.2));
  EXPECT_DOUBLE_EQ(sc.noise.rdoa_std, 0.006);
  EXPECT_DOUBLE_EQ(sc.noise.range_std, 1.0);
  EXPECT_DOUBLE_EQ(sc.noise.gyro_std, 0.05 * std::numbers::pi / 180.0);
  EXPECT_DOUBLE_EQ(sc.noise.dvl_relative, 0.002);
  EXPECT_DOUBLE_EQ(sc.noise.dvl_floor, 0.001);
  EXPECT_DOUBLE_EQ(sc.init_offset, 20.0);
  EXPECT_NO_THROW(sc.validate());
}

TEST(ReceiverArray, PairsAreLexicographic) {
  const ReceiverArray a = default_scenario().array;
  const auto p = a.pairs();
  ASSERT_EQ(p.size(), 6u);
  EXPECT_EQ(p[0], std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_EQ(p[2], std::make_pair(std::size_t{0}, std::size_t{3}));
  EXPECT_EQ(p[5], std::make_pair(std::size_t{2}, std::size_t{3}));
  EXPECT_EQ(a.non_reference(), (std::vector<std::size_t>{1, 2, 3}));
}

TEST(ReceiverArray, ValidationRejectsBadArrays) {
  ReceiverArray a;
  a.receivers = {Vec3(0, 0, 0)};
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a.receivers = {Vec3(0, 0, 0), Vec3(0, 0, 0)};
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a.receivers = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  a.reference_index = 2;
  EXPECT_THROW(a.validate(), std::invalid_argument);
}

TEST(ReceiverArray, CoplanarArraysAreNotFullyObservable) {
  ReceiverArray flat;
  flat.receivers = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
  EXPECT_FALSE(flat.fully_observable_geometry());
  ReceiverArray three;
  three.receivers = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 1)};
  EXPECT_FALSE(three.fully_observable_geometry());
}

TEST(SurveyTrajectory, TurnsAtTurnRateAndStraightsAtZeroRate) {
  const SurveyParams p = untick(default_scenario().survey);
  const Trajectory tr = survey_trajectory(p);
  int turns = 0, straights = 0;
  for (const auto& s : tr.segments()) {
    if (s.yaw_rate == 0.0) {
      ++straights;
    } else {
      ++turns;
      EXPECT_NEAR(std::abs(s.yaw_rate), p.turn_rate, 1e-12);
    }
    const Pose mid = tr.at(s.t0 + 0.5 * s.duration);
    EXPECT_NEAR(mid.omega.norm(), std::abs(s.yaw_rate), 1e-15);
  }
  EXPECT_GT(turns, 0);
  EXPECT_GT(straights, 0);
}

TEST(SurveyTrajectory, TickSnappingKeepsQuarterTurns) {
  SurveyParams p = default_scenario().survey;
  p.tick = 0.01;
  const Trajectory tr = survey_trajectory(p);
  for (const auto& s : tr.segments()) {
    const double ticks = s.duration / p.tick;
    EXPECT_NEAR(ticks, std::round(ticks), 1e-6);
    if (s.yaw_rate != 0.0) {
      EXPECT_NEAR(std::abs(s.yaw_rate) * s.duration, std::numbers::pi / 2, 1e-12);
      EXPECT_LE(std::abs(std::abs(s.yaw_rate) - p.turn_rate),
                p.turn_rate * p.tick / (2.0 * s.duration) + 1e-15);
    }
  }
}

TEST(SurveyTrajectory, LegLengthFromIntegratedSpeed) {
  const SurveyParams p = untick(default_scenario().survey);
  const Trajectory tr = survey_trajectory(p);
  const auto& leg = tr.segments().front();
  ASSERT_EQ(leg.yaw_rate, 0.0);
  // trapezoid on ‖ṗ‖ from finite differences of the position
  const int n = 20000;
  const double h = leg.duration / n;
  double len = 0.0;
  for (int k = 0; k < n; ++k) {
    len += (tr.at(leg.t0 + (k + 1) * h).p - tr.at(leg.t0 + k * h).p).norm();
  }
  EXPECT_NEAR(len, p.leg_length, 1e-6);
}

TEST(SurveyTrajectory, VelocityConsistentWithPosition) {
  const Trajectory tr = default_scenario().trajectory();
  const double h = 1e-5;
  for (double t = 0.5; t < 1190.0; t += 7.3) {
    const Pose a = tr.at(t - h), b = tr.at(t + h), c = tr.at(t);
    const Vec3 pdot = (b.p - a.p) / (2 * h);
    EXPECT_LT((pdot - c.R * c.v).norm(), 1e-6) << "t=" << t;
  }
}

TEST(SurveyTrajectory, RangesStayWithinAssumptionBounds) {
  const Scenario sc = default_scenario();
  const Trajectory tr = sc.trajectory();
  double lo = 1e300, hi = 0.0;
  for (double t = 0.0; t <= sc.survey.duration; t += 0.5) {
    const TruthState s = truth_at(tr, t, sc.transponder, sc.current);
    const Eigen::VectorXd r = s.ranges(sc.array);
    lo = std::min(lo, r.minCoeff());
    hi = std::max(hi, r.maxCoeff());
  }
  EXPECT_GE(lo, sc.bounds.min);
  EXPECT_LE(hi, sc.bounds.max);
  RecordProperty("min_range", std::to_string(lo));
  RecordProperty("max_range", std::to_string(hi));
}

TEST(SurveyTrajectory, RejectsBadParameters) {
  SurveyParams p;
  p.speed = 0.0;
  EXPECT_THROW(survey_trajectory(p), std::invalid_argument);
  p = SurveyParams{};
  p.duration = -1.0;
  EXPECT_THROW(survey_trajectory(p), std::invalid_argument);
  p = SurveyParams{};
  p.leg_spacing = 5.0;  // tighter than the turn diameter
  EXPECT_THROW(survey_trajectory(p), std::invalid_argument);
}

TEST(SurveyTrajectory, AssumptionViolationNamesEpochAndReceiver) {
  const Scenario sc = default_scenario();
  RangeBounds tight{10.0, 150.0};
  try {
    survey_trajectory(sc.survey, sc.array, sc.transponder, tight);
    FAIL() << "expected AssumptionViolation";
  } catch (const AssumptionViolation& e) {
    EXPECT_LT(e.receiver(), sc.array.size());
    EXPECT_GT(e.range(), tight.max);
    EXPECT_GE(e.time(), 0.0);
  }
}

TEST(TrueDerivatives, UnforcedAndIrrotational) {
  const Vec3 r(10, -3, 2);
  auto d = true_derivatives(r, Vec3::Zero(), Vec3::Zero(), Vec3::Zero());
  EXPECT_EQ(d.r_dot, Vec3::Zero());
  EXPECT_EQ(d.vc_dot, Vec3::Zero());
  const Vec3 vc(0.1, 0.2, 0.3), vr(1.0, -0.5, 0.0);
  d = true_derivatives(r, vc, Vec3::Zero(), vr);
  EXPECT_EQ(d.r_dot, -vc - vr);
  EXPECT_EQ(d.vc_dot, Vec3::Zero());
}

namespace {

// RK4 of the body kinematics along the scenario trajectory. The yaw rate is
// piecewise constant with steps on the tick grid, so it is frozen at the step
// midpoint; vr is continuous and sampled at the stage times.
struct BodyPair {
  Vec3 r;
  Vec3 vc;
};

BodyPair integrate_body(const Scenario& sc, double t_end, double h) {
  const Trajectory tr = sc.trajectory();
  TruthState s0 = truth_at(tr, 0.0, sc.transponder, sc.current);
  BodyPair x{s0.transponder_body(), s0.current_body()};
  const auto vr_at = [&](double t) {
    return truth_at(tr, t, sc.transponder, sc.current).water_relative_velocity();
  };
  const auto f = [](const BodyPair& y, const Vec3& w, const Vec3& vr) {
    const auto d = true_derivatives(y.r, y.vc, w, vr);
    return BodyPair{d.r_dot, d.vc_dot};
  };
  const auto add = [](const BodyPair& y, const BodyPair& k, double a) {
    return BodyPair{y.r + a * k.r, y.vc + a * k.vc};
  };
  const long n = std::lround(t_end / h);
  for (long k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * h;
    const Vec3 w = tr.at(t + 0.5 * h).omega;
    const Vec3 v0 = vr_at(t), v1 = vr_at(t + 0.5 * h), v2 = vr_at(t + h);
    const BodyPair k1 = f(x, w, v0);
    const BodyPair k2 = f(add(x, k1, 0.5 * h), w, v1);
    const BodyPair k3 = f(add(x, k2, 0.5 * h), w, v1);
    const BodyPair k4 = f(add(x, k3, h), w, v2);
    x.r += h / 6.0 * (k1.r + 2 * k2.r + 2 * k3.r + k4.r);
    x.vc += h / 6.0 * (k1.vc + 2 * k2.vc + 2 * k3.vc + k4.vc);
  }
  return x;
}

}  // namespace

TEST(TrueDerivatives, BodyCurrentFollowsConstantInertialCurrent) {
  const Scenario sc = default_scenario();
  const BodyPair x = integrate_body(sc, 100.0, 0.01);
  const TruthState s =
      truth_at(sc.trajectory(), 100.0, sc.transponder, sc.current);
  EXPECT_LT((x.vc - s.current_body()).norm(), 1e-8);
}

TEST(TrueDerivatives, IntegratedKinematicsMatchGeometryOverFullRun) {
  const Scenario sc = default_scenario();
  const double tf = sc.survey.duration;
  const BodyPair x = integrate_body(sc, tf, 0.01);
  const TruthState s = truth_at(sc.trajectory(), tf, sc.transponder, sc.current);
  EXPECT_LT((x.r - s.transponder_body()).norm(), 1e-6);
}

TEST(Measure, NoiselessRangesAreExact) {
  const ReceiverArray a = default_scenario().array;
  TruthState s;
  s.s = Vec3(200, 0, 0);
  const SensorFrame f = measure(s, a, NoiseSpec::zero(), 0, true);
  // √(199.8² + 0.15²)
  EXPECT_NEAR(f.rho_ref, 199.800056306, 1e-8);
  EXPECT_DOUBLE_EQ(f.rho_ref, (a.receivers[0] - Vec3(200, 0, 0)).norm());
  const Eigen::VectorXd rec = f.reconstructed_ranges(a);
  const Eigen::VectorXd direct = s.ranges(a);
  EXPECT_LT((rec - direct).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Measure, WaterRelativeVelocityAndGyro) {
  TruthState s;
  s.R = Rotation::about_z(0.7);
  s.v = Vec3(1.0, 0.0, 0.0);
  s.omega = Vec3(0, 0, 0.1);
  s.current_inertial = Vec3(0.2, 0.2, 0.2);
  s.s = Vec3(200, 0, 0);
  const SensorFrame f =
      measure(s, default_scenario().array, NoiseSpec::zero(), 3, false);
  EXPECT_LT((f.vr - (s.v - s.R.transpose() * s.current_inertial)).norm(), 1e-15);
  EXPECT_EQ(f.omega, s.omega);
  EXPECT_FALSE(f.has_usbl);
}

TEST(Measure, RangeNoiseHasConfiguredSpread) {
  const ReceiverArray a = default_scenario().array;
  TruthState s;
  s.s = Vec3(200, 0, 0);
  NoiseSpec n = default_scenario().noise;
  n.seed = 2024;
  const double truth = s.ranges(a)(0);
  const int count = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int e = 0; e < count; ++e) {
    const double d = measure(s, a, n, static_cast<std::uint64_t>(e), true).rho_ref - truth;
    sum += d;
    sum2 += d * d;
  }
  const double mean = sum / count;
  const double sd = std::sqrt(sum2 / count - mean * mean);
  EXPECT_NEAR(sd, n.range_std, 0.03 * n.range_std);
  EXPECT_NEAR(mean, 0.0, 0.02);
}

TEST(Measure, DvlNoisePerAxisScalesWithSpeed) {
  const ReceiverArray a = default_scenario().array;
  TruthState s;
  s.s = Vec3(200, 0, 0);
  s.v = Vec3(2.0, 0.0, 0.0);
  NoiseSpec n;
  n.dvl_relative = 0.002;
  n.dvl_floor = 0.001;
  n.seed = 4;
  const Vec3 clean = s.water_relative_velocity();
  const int count = 50000;
  Vec3 s2 = Vec3::Zero();
  for (int e = 0; e < count; ++e) {
    s2 += (measure(s, a, n, static_cast<std::uint64_t>(e), false).vr - clean)
              .cwiseAbs2();
  }
  const Vec3 sd = (s2 / count).cwiseSqrt();
  const double expected = 0.002 * 2.0 + 0.001;
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(sd(i), expected, 0.03 * expected);
}

TEST(Measure, DeterministicPerSeedAndEpoch) {
  const ReceiverArray a = default_scenario().array;
  TruthState s;
  s.s = Vec3(200, 0, 0);
  NoiseSpec n = default_scenario().noise;
  n.seed = 77;
  const SensorFrame f1 = measure(s, a, n, 12, true);
  const SensorFrame f2 = measure(s, a, n, 12, true);
  EXPECT_EQ(f1.rho_ref, f2.rho_ref);
  EXPECT_EQ(f1.drho, f2.drho);
  EXPECT_EQ(f1.vr, f2.vr);
  EXPECT_NE(f1.rho_ref, measure(s, a, n, 13, true).rho_ref);
}

TEST(Simulate, NoiselessMeasurementsReproduceGeometryEverywhere) {
  Scenario sc = default_scenario();
  sc.noise = NoiseSpec::zero();
  sc.survey.duration = 200.0;
  const auto epochs = simulate(sc);
  ASSERT_FALSE(epochs.empty());
  std::size_t usbl = 0;
  for (const auto& e : epochs) {
    if (!e.frame.has_usbl) continue;
    ++usbl;
    const Eigen::VectorXd d =
        e.frame.reconstructed_ranges(sc.array) - e.truth.ranges(sc.array);
    ASSERT_LT(d.cwiseAbs().maxCoeff(), 1e-9) << "t=" << e.frame.t;
  }
  EXPECT_EQ(usbl, static_cast<std::size_t>(200.0 * sc.usbl_rate) + 1);
}

TEST(Simulate, NoisyReconstructedRangesStayClose) {
  Scenario sc = default_scenario();
  sc.survey.duration = 100.0;
  sc.noise.seed = 3;
  const auto epochs = simulate(sc);
  // reconstruction error ≤ |n_range| + |n_rdoa|; allow 5σ of each
  const double bound = 5.0 * (sc.noise.range_std + sc.noise.rdoa_std);
  for (const auto& e : epochs) {
    if (!e.frame.has_usbl) continue;
    const Eigen::VectorXd d =
        e.frame.reconstructed_ranges(sc.array) - e.truth.ranges(sc.array);
    ASSERT_LT(d.cwiseAbs().maxCoeff(), bound);
  }
}

TEST(Simulate, HoverKeepsVehicleStill) {
  Scenario sc = default_scenario();
  sc.hover = true;
  sc.survey.duration = 10.0;
  const auto epochs = simulate(sc);
  EXPECT_LT((epochs.back().truth.p - epochs.front().truth.p).norm(), 1e-12);
  EXPECT_EQ(epochs.back().truth.omega, Vec3::Zero());
}

TEST(Scenario, RatesMustDivide) {
  Scenario sc = default_scenario();
  sc.usbl_rate = 30.0;
  EXPECT_THROW(sc.usbl_decimation(), std::invalid_argument);
  sc.usbl_rate = 50.0;
  EXPECT_EQ(sc.usbl_decimation(), 2u);
}
