#pragma once

// Transponder-position estimators sharing one step interface:
//
//   Ltv   Kalman filter on the body-reverted augmented LTV system.
//   Ekf   extended Kalman filter on (r, vc) linearizing range and RDOA.
//   Kfpw  linear Kalman filter on (r, vc) fed with planar-wave position fixes.
//
// All filters run at the sensor rate. Prediction over [t_prev, t] holds the
// previous frame's ω and uses the mean of the two frames' vr; the USBL update
// uses the current frame.

#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "usblnav/augmented_ltv.hpp"
#include "usblnav/truthsim.hpp"

namespace usblnav {

enum class FilterKind { Ltv, Ekf, Kfpw };

std::string_view filter_id(FilterKind kind);
/// Accepts "ltv", "ekf", "kfpw" in any case.
std::optional<FilterKind> parse_filter_kind(std::string_view text);

/// Noise model and tuning shared by all filters.
///
/// `model` holds the sensor standard deviations the filters assume; it is
/// independent of the noise actually injected by the simulator so noiseless
/// runs keep a well-conditioned filter. Process noise is the sensor noise
/// mapped through the linearized dynamics plus the random-walk floors below
/// (continuous-time PSDs, per second).
struct FilterConfig {
  NoiseSpec model;
  RangeBounds bounds;

  double init_position_std = 20.0;  // m
  double init_current_std = 0.5;    // m/s
  double init_range_std = 1.0;      // m
  double init_cross_std = 100.0;    // m²/s
  double init_speed2_std = 0.5;     // m²/s²

  double q_position = 1e-8;  // m²/s
  double q_current = 1e-10;  // (m/s)²/s
  double q_range = 1e-8;     // m²/s
  double q_cross = 1e-6;     // (m²/s)²/s
  double q_speed2 = 1e-10;   // (m²/s²)²/s

  /// Added to every measurement variance.
  double qy_floor = 1e-8;
  /// Keep the cross-correlations of the augmented outputs (they share the
  /// reference-range noise) instead of only their variances.
  bool dense_qy = false;
  /// Ltv: evaluate A_Γ and C_Γ with the filter's own range estimates
  /// instead of the measured ranges.
  bool ranges_from_estimate = true;

  static FilterConfig defaults();
  void validate() const;
};

struct FilterEstimate {
  FilterKind kind = FilterKind::Ltv;
  double t = 0.0;
  /// Ltv: body-reverted augmented state. Ekf/Kfpw: [r; vc].
  Eigen::VectorXd state;
  Eigen::MatrixXd covariance;
  /// Residual of the last measurement update (empty when none happened).
  Eigen::VectorXd innovation;
  /// Normalized innovation squared of the last update (NaN when none).
  double nis = 0.0;
  bool updated = false;
  /// A USBL frame arrived but was rejected.
  bool update_skipped = false;

  Vec3 last_vr = Vec3::Zero();
  Vec3 last_omega = Vec3::Zero();
  /// Ltv only: ranges used in A_Γ. Set from each USBL frame and carried
  /// forward between frames with the model range rates.
  Eigen::VectorXd held_ranges;

  Vec3 position() const { return state.head<3>(); }
  Vec3 current() const { return state.segment<3>(3); }
  /// Ltv only.
  AugmentedState augmented() const;
};

enum class InitMode { Offset, Truth, Custom };

struct InitSpec {
  InitMode mode = InitMode::Offset;
  /// Offset: position offset magnitude and direction.
  double offset = 20.0;
  Vec3 direction = Vec3(1.0, 1.0, 1.0);
  /// Custom: additive errors on position and current.
  Vec3 position_offset = Vec3::Zero();
  Vec3 current_offset = Vec3::Zero();
};

/// Initial estimate at the first frame.
///
/// Offset: ranges from the first measurements, position = truth +
/// offset·direction/‖direction‖, current, cross and speed2 zero.
/// Truth: every field exact. Custom: truth plus the given offsets, ranges
/// from the first measurements, cross and speed2 zero.
/// Throws std::invalid_argument if the mode needs USBL data that the first
/// frame lacks.
FilterEstimate initialize(FilterKind kind, const TruthState& truth0,
                          const SensorFrame& first, const ReceiverArray& array,
                          const FilterConfig& config, const InitSpec& init);

FilterEstimate ltv_kf_step(const FilterEstimate& prev, const SensorFrame& frame,
                           const ReceiverArray& array,
                           const FilterConfig& config);
FilterEstimate ekf_step(const FilterEstimate& prev, const SensorFrame& frame,
                        const ReceiverArray& array, const FilterConfig& config);
FilterEstimate kfpw_step(const FilterEstimate& prev, const SensorFrame& frame,
                         const ReceiverArray& array,
                         const FilterConfig& config);

/// Dispatches on prev.kind.
FilterEstimate filter_step(const FilterEstimate& prev, const SensorFrame& frame,
                           const ReceiverArray& array,
                           const FilterConfig& config);

/// Measurement covariance of the augmented outputs for the given ranges.
Eigen::MatrixXd augmented_output_covariance(const Eigen::VectorXd& ranges,
                                            const ReceiverArray& array,
                                            const FilterConfig& config);

struct PlanarWaveFix {
  Vec3 position = Vec3::Zero();
  Vec3 direction = Vec3::Zero();  // unit vector from the array centroid
  Mat3 covariance = Mat3::Zero();
};

/// Position fix under the planar-wave approximation ρi ≈ ρc − dᵀ(bi − c)
/// about the array centroid c: the unit vector d solves
/// (bj − b_ref)ᵀd = δρ_ref,j in least squares on the sphere, ρc is the mean
/// of ρi + dᵀ(bi − c), and the fix is c + ρc·d. The covariance is
/// planar_wave_covariance at the fix. Returns nullopt when the receiver
/// baselines do not span 3-D space or the frame has no USBL data.
std::optional<PlanarWaveFix> planar_wave_fix(const SensorFrame& frame,
                                             const ReceiverArray& array,
                                             const NoiseSpec& model);

/// First-order covariance of a planar-wave fix of a transponder at
/// `position`: range noise along the arrival direction, RDOA noise mapped
/// through the direction fit across it.
Mat3 planar_wave_covariance(const Vec3& position, const ReceiverArray& array,
                            const NoiseSpec& model);

}  // namespace usblnav
