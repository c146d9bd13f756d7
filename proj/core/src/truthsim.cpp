#include "usblnav/truthsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>

namespace usblnav {
namespace {

constexpr std::uint32_t kChannelDvl = 0;     // 0..2
constexpr std::uint32_t kChannelGyro = 3;    // 3..5
constexpr std::uint32_t kChannelRange = 6;
constexpr std::uint32_t kChannelRdoa = 7;    // 7..7+nr−2

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> ReceiverArray::pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(pair_count());
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = i + 1; j < size(); ++j) {
      out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<std::size_t> ReceiverArray::non_reference() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j) {
    if (j != reference_index) out.push_back(j);
  }
  return out;
}

bool ReceiverArray::fully_observable_geometry() const {
  if (size() < 4) return false;
  Eigen::MatrixXd m(size(), 4);
  for (std::size_t i = 0; i < size(); ++i) {
    m.row(i) << receivers[i].transpose(), 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  return sv(3) > 1e-9 * sv(0);
}

void ReceiverArray::validate() const {
  if (size() < 2) {
    throw std::invalid_argument("receiver array needs at least 2 receivers");
  }
  if (reference_index >= size()) {
    throw std::invalid_argument("reference receiver index out of range");
  }
  for (const auto& b : receivers) {
    if (!b.allFinite()) {
      throw std::invalid_argument("receiver position is not finite");
    }
  }
  for (const auto& [i, j] : pairs()) {
    if (!((receivers[i] - receivers[j]).norm() > 0.0)) {
      std::ostringstream msg;
      msg << "receivers " << i + 1 << " and " << j + 1 << " coincide";
      throw std::invalid_argument(msg.str());
    }
  }
}

Vec3 TruthState::transponder_body() const { return R.transpose() * (s - p); }

Vec3 TruthState::current_body() const {
  return R.transpose() * current_inertial;
}

Vec3 TruthState::water_relative_velocity() const { return v - current_body(); }

Eigen::VectorXd TruthState::ranges(const ReceiverArray& array) const {
  const Vec3 r = transponder_body();
  Eigen::VectorXd out(array.size());
  for (std::size_t i = 0; i < array.size(); ++i) {
    out(i) = (array.receivers[i] - r).norm();
  }
  return out;
}

bool NoiseSpec::is_zero() const {
  return dvl_relative == 0.0 && dvl_floor == 0.0 && gyro_std == 0.0 &&
         range_std == 0.0 && rdoa_std == 0.0;
}

void NoiseSpec::validate() const {
  for (double v : {dvl_relative, dvl_floor, gyro_std, range_std, rdoa_std}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("noise standard deviations must be >= 0");
    }
  }
}

Eigen::VectorXd SensorFrame::reconstructed_ranges(
    const ReceiverArray& array) const {
  const auto others = array.non_reference();
  if (static_cast<std::size_t>(drho.size()) != others.size()) {
    throw std::invalid_argument("sensor frame RDOA count does not match array");
  }
  Eigen::VectorXd out(array.size());
  out(array.reference_index) = rho_ref;
  for (std::size_t k = 0; k < others.size(); ++k) {
    out(others[k]) = rho_ref - drho(k);
  }
  return out;
}

Trajectory::Trajectory(std::vector<Segment> segments)
    : segments_(std::move(segments)) {
  if (segments_.empty()) {
    throw std::invalid_argument("trajectory needs at least one segment");
  }
}

Trajectory Trajectory::hover(const Vec3& p, double heading, double duration) {
  if (!(duration > 0.0)) {
    throw std::invalid_argument("hover duration must be positive");
  }
  Segment seg;
  seg.t0 = 0.0;
  seg.duration = duration;
  seg.p0 = p;
  seg.heading0 = heading;
  return Trajectory({seg});
}

double Trajectory::duration() const {
  const auto& last = segments_.back();
  return last.t0 + last.duration;
}

namespace {

Vec3 segment_position(const Trajectory::Segment& seg, double tau) {
  const double psi0 = seg.heading0;
  if (seg.yaw_rate == 0.0) {
    return seg.p0 +
           seg.speed * tau * Vec3(std::cos(psi0), std::sin(psi0), 0.0);
  }
  const double psi = psi0 + seg.yaw_rate * tau;
  const double k = seg.speed / seg.yaw_rate;
  return seg.p0 + k * Vec3(std::sin(psi) - std::sin(psi0),
                           -(std::cos(psi) - std::cos(psi0)), 0.0);
}

}  // namespace

Pose Trajectory::at(double t) const {
  // Last segment whose start is <= t; times past the end extrapolate it.
  auto it = std::upper_bound(
      segments_.begin(), segments_.end(), t,
      [](double value, const Segment& s) { return value < s.t0 - 1e-9; });
  const Segment& seg = (it == segments_.begin()) ? segments_.front() : *(it - 1);
  const double tau = t - seg.t0;
  Pose pose;
  pose.p = segment_position(seg, tau);
  pose.R = Rotation::about_z(seg.heading0 + seg.yaw_rate * tau);
  pose.v = Vec3(seg.speed, 0.0, 0.0);
  pose.omega = Vec3(0.0, 0.0, seg.yaw_rate);
  return pose;
}

Trajectory survey_trajectory(const SurveyParams& params) {
  if (!(params.speed > 0.0)) {
    throw std::invalid_argument("survey speed must be positive");
  }
  if (!(params.duration > 0.0)) {
    throw std::invalid_argument("survey duration must be positive");
  }
  if (!(params.turn_rate > 0.0)) {
    throw std::invalid_argument("survey turn rate must be positive");
  }
  if (!(params.leg_length > 0.0)) {
    throw std::invalid_argument("survey leg length must be positive");
  }
  const double radius = params.speed / params.turn_rate;
  const double transverse = params.leg_spacing - 2.0 * radius;
  if (transverse < -1e-9) {
    throw std::invalid_argument(
        "survey leg spacing is smaller than the turn diameter");
  }
  const double quarter_angle = 0.5 * std::numbers::pi;
  const bool ticked = params.tick > 0.0;
  // Durations snap to whole ticks; turns keep their angle by adjusting rate.
  const auto snap = [&](double duration) -> std::int64_t {
    return static_cast<std::int64_t>(std::llround(duration / params.tick));
  };

  std::vector<Trajectory::Segment> segments;
  Trajectory::Segment seg;
  seg.t0 = 0.0;
  seg.p0 = Vec3(params.start_x, params.start_y, params.depth);
  seg.heading0 = params.heading;
  seg.speed = params.speed;
  std::int64_t tick_count = 0;

  // `angle` != 0 makes a turn through that angle at nominal turn_rate.
  auto push = [&](double duration, double angle) {
    double yaw_rate = angle == 0.0 ? 0.0 : std::copysign(params.turn_rate, angle);
    if (ticked) {
      const std::int64_t n = snap(duration);
      if (n <= 0) return;
      duration = static_cast<double>(n) * params.tick;
      if (angle != 0.0) yaw_rate = angle / duration;
      seg.duration = duration;
      seg.yaw_rate = yaw_rate;
      segments.push_back(seg);
      seg.p0 = segment_position(seg, duration);
      seg.heading0 += yaw_rate * duration;
      tick_count += n;
      seg.t0 = static_cast<double>(tick_count) * params.tick;
      return;
    }
    if (duration <= 0.0) return;
    seg.duration = duration;
    seg.yaw_rate = yaw_rate;
    segments.push_back(seg);
    seg.p0 = segment_position(seg, duration);
    seg.heading0 += yaw_rate * duration;
    seg.t0 += duration;
  };

  bool left = params.first_turn_left;
  const double turn_time = quarter_angle / params.turn_rate;
  while (seg.t0 < params.duration) {
    push(params.leg_length / params.speed, 0.0);
    if (seg.t0 >= params.duration) break;
    const double angle = left ? quarter_angle : -quarter_angle;
    push(turn_time, angle);
    push(std::max(transverse, 0.0) / params.speed, 0.0);
    push(turn_time, angle);
    left = !left;
  }
  // Trim to the requested duration.
  while (segments.size() > 1 && segments.back().t0 >= params.duration) {
    segments.pop_back();
  }
  segments.back().duration = params.duration - segments.back().t0;
  return Trajectory(std::move(segments));
}

Trajectory survey_trajectory(const SurveyParams& params,
                             const ReceiverArray& array,
                             const Vec3& transponder,
                             const RangeBounds& bounds, double step) {
  Trajectory traj = survey_trajectory(params);
  const auto n = static_cast<std::size_t>(std::floor(traj.duration() / step));
  for (std::size_t k = 0; k <= n; ++k) {
    check_range_bounds(truth_at(traj, k * step, transponder, Vec3::Zero()),
                       array, bounds);
  }
  return traj;
}

TruthState truth_at(const Trajectory& trajectory, double t,
                    const Vec3& transponder, const Vec3& current_inertial) {
  const Pose pose = trajectory.at(t);
  TruthState st;
  st.t = t;
  st.p = pose.p;
  st.R = pose.R;
  st.v = pose.v;
  st.omega = pose.omega;
  st.s = transponder;
  st.current_inertial = current_inertial;
  return st;
}

void check_range_bounds(const TruthState& state, const ReceiverArray& array,
                        const RangeBounds& bounds) {
  const Eigen::VectorXd rho = state.ranges(array);
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    if (rho(i) < bounds.min || rho(i) > bounds.max) {
      std::ostringstream msg;
      msg << "range to receiver " << i + 1 << " is " << rho(i)
          << " m at t=" << state.t << " s, outside [" << bounds.min << ", "
          << bounds.max << "]";
      throw AssumptionViolation(msg.str(), state.t, static_cast<std::size_t>(i),
                                rho(i));
    }
  }
}

BodyDerivatives true_derivatives(const Vec3& r, const Vec3& vc,
                                 const Vec3& omega, const Vec3& vr) {
  return {-omega.cross(r) - vc - vr, -omega.cross(vc)};
}

BodyDerivatives true_derivatives(const TruthState& state) {
  return true_derivatives(state.transponder_body(), state.current_body(),
                          state.omega, state.water_relative_velocity());
}

SensorFrame measure(const TruthState& state, const ReceiverArray& array,
                    const NoiseSpec& noise, std::uint64_t epoch,
                    bool with_usbl) {
  const CounterRng rng(noise.seed);
  SensorFrame f;
  f.t = state.t;
  f.epoch = epoch;

  const double dvl_std = noise.dvl_relative * state.v.norm() + noise.dvl_floor;
  f.vr = state.water_relative_velocity();
  f.omega = state.omega;
  for (std::uint32_t a = 0; a < 3; ++a) {
    if (dvl_std > 0.0) f.vr(a) += dvl_std * rng.normal(epoch, kChannelDvl + a);
    if (noise.gyro_std > 0.0) {
      f.omega(a) += noise.gyro_std * rng.normal(epoch, kChannelGyro + a);
    }
  }

  f.has_usbl = with_usbl;
  if (with_usbl) {
    const Eigen::VectorXd rho = state.ranges(array);
    const std::size_t ref = array.reference_index;
    f.rho_ref = rho(ref);
    if (noise.range_std > 0.0) {
      f.rho_ref += noise.range_std * rng.normal(epoch, kChannelRange);
    }
    const auto others = array.non_reference();
    f.drho.resize(static_cast<Eigen::Index>(others.size()));
    for (std::size_t k = 0; k < others.size(); ++k) {
      double d = rho(ref) - rho(others[k]);
      if (noise.rdoa_std > 0.0) {
        d += noise.rdoa_std *
             rng.normal(epoch, kChannelRdoa + static_cast<std::uint32_t>(k));
      }
      f.drho(static_cast<Eigen::Index>(k)) = d;
    }
  }
  return f;
}

Trajectory Scenario::trajectory() const {
  if (hover) {
    return Trajectory::hover(
        Vec3(survey.start_x, survey.start_y, survey.depth), survey.heading,
        survey.duration);
  }
  SurveyParams p = survey;
  if (p.tick == 0.0) p.tick = 1.0 / imu_rate;
  return survey_trajectory(p);
}

double Scenario::duration() const { return survey.duration; }

std::size_t Scenario::usbl_decimation() const {
  if (!(imu_rate > 0.0) || !(usbl_rate > 0.0) || usbl_rate > imu_rate) {
    throw std::invalid_argument(
        "sensor rates must be positive with usbl_rate <= imu_rate");
  }
  const double ratio = imu_rate / usbl_rate;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw std::invalid_argument("imu_rate must be a multiple of usbl_rate");
  }
  return static_cast<std::size_t>(rounded);
}

void Scenario::validate() const {
  array.validate();
  noise.validate();
  (void)usbl_decimation();
  if (!(bounds.min > 0.0) || !(bounds.max > bounds.min)) {
    throw std::invalid_argument("range bounds must satisfy 0 < min < max");
  }
  if (!(init_direction.norm() > 0.0) && init_offset != 0.0) {
    throw std::invalid_argument("initial offset direction must be non-zero");
  }
  if (!(survey.tick >= 0.0)) {
    throw std::invalid_argument("survey tick must be non-negative");
  }
  if (!(survey.duration > 0.0)) {
    throw std::invalid_argument("run duration must be positive");
  }
}

Scenario default_scenario() {
  Scenario sc;
  sc.array.receivers = {Vec3(0.2, -0.15, 0.0), Vec3(0.2, 0.15, 0.0),
                        Vec3(0.4, 0.0, 0.15), Vec3(0.4, 0.0, -0.15)};
  sc.array.reference_index = 0;
  sc.transponder = Vec3(200.0, 0.0, 0.0);
  sc.current = Vec3(0.2, 0.2, 0.2);
  sc.noise.dvl_relative = 0.002;
  sc.noise.dvl_floor = 0.001;
  sc.noise.gyro_std = 0.05 * std::numbers::pi / 180.0;
  sc.noise.range_std = 1.0;
  sc.noise.rdoa_std = 0.006;
  sc.noise.seed = 1;
  sc.init_offset = 20.0;
  sc.init_direction = Vec3(1.0, 1.0, 1.0);
  return sc;
}

std::vector<SimEpoch> simulate(const Scenario& scenario) {
  scenario.validate();
  const Trajectory traj = scenario.trajectory();
  const std::size_t decim = scenario.usbl_decimation();
  const double dt = 1.0 / scenario.imu_rate;
  const auto n = static_cast<std::size_t>(
      std::floor(scenario.duration() * scenario.imu_rate + 1e-9));
  std::vector<SimEpoch> out;
  out.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    SimEpoch ep;
    ep.truth = truth_at(traj, static_cast<double>(k) * dt,
                        scenario.transponder, scenario.current);
    check_range_bounds(ep.truth, scenario.array, scenario.bounds);
    ep.frame = measure(ep.truth, scenario.array, scenario.noise, k,
                       k % decim == 0);
    out.push_back(std::move(ep));
  }
  return out;
}

}  // namespace usblnav
