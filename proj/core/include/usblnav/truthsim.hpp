#pragma once

// Ground-truth vehicle motion, the true transponder kinematics and the noisy
// DVL / gyro / USBL sensor models.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "usblnav/geom3.hpp"
#include "usblnav/rng.hpp"

namespace usblnav {

/// Admissible range interval [min, max] for every receiver (m).
struct RangeBounds {
  double min = 10.0;
  double max = 500.0;
};

/// Raised when a range leaves RangeBounds. Carries the offending epoch and
/// receiver so the harness can report where a run broke.
class AssumptionViolation : public std::runtime_error {
 public:
  AssumptionViolation(std::string what, double t, std::size_t receiver,
                      double range)
      : std::runtime_error(std::move(what)),
        t_(t), receiver_(receiver), range_(range) {}

  double time() const { return t_; }
  std::size_t receiver() const { return receiver_; }
  double range() const { return range_; }

 private:
  double t_;
  std::size_t receiver_;
  double range_;
};

/// Body-frame positions of the USBL receivers.
struct ReceiverArray {
  std::vector<Vec3> receivers;
  std::size_t reference_index = 0;

  std::size_t size() const { return receivers.size(); }

  /// nC = nr(nr−1)/2
  std::size_t pair_count() const { return size() * (size() - 1) / 2; }

  /// Receiver pairs in lexicographic order (0,1),(0,2),…,(nr−2,nr−1).
  std::vector<std::pair<std::size_t, std::size_t>> pairs() const;

  /// Receiver indices other than the reference, ascending.
  std::vector<std::size_t> non_reference() const;

  /// True iff the nr×4 matrix with rows [biᵀ, 1] has rank 4 (relative
  /// singular-value threshold 1e-9), i.e. at least 4 non-coplanar receivers.
  bool fully_observable_geometry() const;

  /// Throws std::invalid_argument if nr < 2, the reference index is out of
  /// range, entries are non-finite or two receivers coincide.
  void validate() const;
};

struct TruthState {
  double t = 0.0;
  Vec3 p = Vec3::Zero();  // inertial vehicle position (m)
  Rotation R;             // body to inertial
  Vec3 v = Vec3::Zero();  // body velocity over ground (m/s)
  Vec3 omega = Vec3::Zero();
  Vec3 s = Vec3::Zero();  // inertial transponder position (m)
  Vec3 current_inertial = Vec3::Zero();

  /// r = Rᵀ(s − p)
  Vec3 transponder_body() const;
  /// vc = Rᵀ·current
  Vec3 current_body() const;
  /// Noise-free DVL reading, v − Rᵀ·current.
  Vec3 water_relative_velocity() const;
  /// ρi = ‖bi − r‖ for every receiver.
  Eigen::VectorXd ranges(const ReceiverArray& array) const;
};

/// Sensor noise standard deviations. DVL noise is per axis with std
/// dvl_relative·‖v‖ + dvl_floor.
struct NoiseSpec {
  double dvl_relative = 0.0;
  double dvl_floor = 0.0;   // m/s
  double gyro_std = 0.0;    // rad/s
  double range_std = 0.0;   // m
  double rdoa_std = 0.0;    // m
  std::uint64_t seed = 0;

  static NoiseSpec zero() { return {}; }
  bool is_zero() const;
  void validate() const;
};

/// One sensor epoch. USBL fields are only meaningful when has_usbl is set.
struct SensorFrame {
  double t = 0.0;
  std::uint64_t epoch = 0;
  Vec3 vr = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
  bool has_usbl = false;
  double rho_ref = 0.0;
  /// δρ_ref,j = ρ_ref − ρ_j for every non-reference receiver j, ascending.
  Eigen::VectorXd drho;

  /// ρj = ρ_ref − δρ_ref,j, with ρ_ref itself at the reference index.
  Eigen::VectorXd reconstructed_ranges(const ReceiverArray& array) const;
};

/// Lawnmower survey geometry. Legs are straight at constant speed; each leg
/// end is joined by a quarter turn, a transverse straight of length
/// leg_spacing − 2·speed/turn_rate and a second quarter turn. Turns alternate
/// in direction so that successive legs march across the survey area.
///
/// With tick > 0 every segment lasts a whole number of ticks, so yaw-rate
/// changes coincide with sensor epochs. Turns keep their quarter-turn angle
/// and take the rate (π/2)/duration, which differs from turn_rate by at most
/// turn_rate·tick/(2·duration); straight segments keep the speed.
struct SurveyParams {
  double leg_length = 100.0;
  double leg_spacing = 20.0;
  double speed = 1.0;
  double depth = 10.0;  // z of the vehicle (transponder plane at z = 0)
  double turn_rate = 0.1;
  double duration = 1200.0;
  double start_x = 90.0;
  double start_y = -50.0;
  double heading = 1.5707963267948966;  // initial yaw (rad)
  bool first_turn_left = true;
  /// Segment time quantum (s); 0 leaves durations unsnapped. Scenario uses
  /// the sensor period when this is 0.
  double tick = 0.0;
};

struct Pose {
  Vec3 p = Vec3::Zero();
  Rotation R;
  Vec3 v = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
};

/// Piecewise-analytic level trajectory made of constant-speed,
/// constant-yaw-rate segments. Evaluation is exact at any t.
class Trajectory {
 public:
  struct Segment {
    double t0 = 0.0;
    double duration = 0.0;
    Vec3 p0 = Vec3::Zero();
    double heading0 = 0.0;
    double speed = 0.0;
    double yaw_rate = 0.0;
  };

  explicit Trajectory(std::vector<Segment> segments);

  /// Vehicle hovering at p with constant heading.
  static Trajectory hover(const Vec3& p, double heading, double duration);

  Pose at(double t) const;
  double duration() const;
  const std::vector<Segment>& segments() const { return segments_; }

 private:
  std::vector<Segment> segments_;
};

/// Throws std::invalid_argument if speed, duration or turn_rate are not
/// positive or the spacing is smaller than the turn diameter.
Trajectory survey_trajectory(const SurveyParams& params);

/// Same, additionally rejecting surveys whose ranges to `transponder` leave
/// `bounds` (sampled every `step` seconds) with AssumptionViolation.
Trajectory survey_trajectory(const SurveyParams& params,
                             const ReceiverArray& array,
                             const Vec3& transponder,
                             const RangeBounds& bounds, double step = 0.1);

TruthState truth_at(const Trajectory& trajectory, double t,
                    const Vec3& transponder, const Vec3& current_inertial);

/// Throws AssumptionViolation if any range of `state` is outside `bounds`.
void check_range_bounds(const TruthState& state, const ReceiverArray& array,
                        const RangeBounds& bounds);

struct BodyDerivatives {
  Vec3 r_dot;
  Vec3 vc_dot;
};

/// ṙ = −S(ω)r − vc − vr,  v̇c = −S(ω)vc.
BodyDerivatives true_derivatives(const Vec3& r, const Vec3& vc,
                                 const Vec3& omega, const Vec3& vr);
BodyDerivatives true_derivatives(const TruthState& state);

/// Noisy measurement of `state` at `epoch`. USBL channels are sampled only
/// when `with_usbl` is set. Deterministic in (noise.seed, epoch).
SensorFrame measure(const TruthState& state, const ReceiverArray& array,
                    const NoiseSpec& noise, std::uint64_t epoch,
                    bool with_usbl);

/// Full simulation scenario.
struct Scenario {
  ReceiverArray array;
  Vec3 transponder = Vec3(200.0, 0.0, 0.0);
  Vec3 current = Vec3(0.2, 0.2, 0.2);
  NoiseSpec noise;
  SurveyParams survey;
  /// Hover in place for the whole run instead of flying the survey.
  bool hover = false;
  double imu_rate = 100.0;  // Hz, DVL and gyro
  double usbl_rate = 50.0;  // Hz
  RangeBounds bounds;
  double init_offset = 20.0;  // m, initial position-estimate offset
  Vec3 init_direction = Vec3(1.0, 1.0, 1.0);

  Trajectory trajectory() const;
  double duration() const;
  /// Sensor epochs between USBL epochs; throws if the rates do not divide.
  std::size_t usbl_decimation() const;
  void validate() const;
};

/// Vehicle, array and noise figures of the reference survey scenario.
Scenario default_scenario();

struct SimEpoch {
  TruthState truth;
  SensorFrame frame;
};

/// Runs the truth model over the scenario and synthesizes all sensor frames.
/// Throws AssumptionViolation at the first epoch whose ranges leave bounds.
std::vector<SimEpoch> simulate(const Scenario& scenario);

}  // namespace usblnav
