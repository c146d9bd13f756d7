#pragma once

// Augmented linear time-varying model of the range/RDOA system.
//
// State layout (dimension 8 + nr):
//   [0,3)        x1      transponder position (inertial-transformed or body)
//   [3,6)        x2      current velocity (same frame as x1)
//   [6,6+nr)     ranges  ρ1..ρnr
//   6+nr         cross   x1ᵀx2
//   7+nr         speed2  ‖x2‖²
//
// Outputs (dimension nr + nC): the reference range, the nr−1 reference range
// differences and, for every receiver pair (i,j) in lexicographic order, the
// measured right-hand side (‖bi‖² − ‖bj‖²)/(ρi + ρj).

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "usblnav/geom3.hpp"
#include "usblnav/truthsim.hpp"

namespace usblnav {

enum class Frame {
  /// x1 = R·r, x2 = R·vc; dynamics driven by u = R·vr.
  InertialTransformed,
  /// x1 = r, x2 = vc; dynamics driven by the DVL reading vr.
  BodyReverted,
};

struct AugmentedLayout {
  std::size_t nr;

  static constexpr Eigen::Index x1 = 0;
  static constexpr Eigen::Index x2 = 3;
  Eigen::Index range(std::size_t i) const {
    return 6 + static_cast<Eigen::Index>(i);
  }
  Eigen::Index cross() const { return 6 + static_cast<Eigen::Index>(nr); }
  Eigen::Index speed2() const { return 7 + static_cast<Eigen::Index>(nr); }
  Eigen::Index dim() const { return 8 + static_cast<Eigen::Index>(nr); }
  Eigen::Index outputs() const {
    return static_cast<Eigen::Index>(nr + nr * (nr - 1) / 2);
  }
};

struct AugmentedState {
  Vec3 x1 = Vec3::Zero();
  Vec3 x2 = Vec3::Zero();
  Eigen::VectorXd ranges;
  double cross = 0.0;
  double speed2 = 0.0;
  Frame frame = Frame::InertialTransformed;

  Eigen::Index dimension() const { return 8 + ranges.size(); }
  Eigen::VectorXd to_vector() const;
  static AugmentedState from_vector(const Eigen::VectorXd& x, Frame frame);
};

struct LtvMatrices {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
};

/// Signals entering A(t), B(t) at one instant. `input` is u = R·vr for
/// Frame::InertialTransformed and vr for Frame::BodyReverted.
struct LtvInputs {
  double t = 0.0;
  Rotation R;
  Vec3 omega = Vec3::Zero();
  Vec3 input = Vec3::Zero();
  Eigen::VectorXd ranges;
};

/// (x1, x2) = (R·r, R·vc)
std::pair<Vec3, Vec3> to_inertial(const Vec3& r, const Vec3& vc,
                                  const Rotation& R);
/// (r, vc) = (Rᵀ·x1, Rᵀ·x2)
std::pair<Vec3, Vec3> from_inertial(const Vec3& x1, const Vec3& x2,
                                    const Rotation& R);

/// Augmented state of the true system, with the algebraic relations holding.
AugmentedState augmented_truth(const TruthState& truth,
                               const ReceiverArray& array, Frame frame);

/// A(t) and B(t) (C left empty). Throws AssumptionViolation naming the
/// receiver whose range lies outside `bounds`.
LtvMatrices assemble_A_B(const LtvInputs& in, const ReceiverArray& array,
                         Frame frame, const RangeBounds& bounds);

/// C(t) (or C_Γ(t) for the body-reverted frame, which does not depend on R).
Eigen::MatrixXd assemble_C(const Rotation& R, const Eigen::VectorXd& ranges,
                           const ReceiverArray& array, Frame frame);

/// The constant C0 block (nr×nr).
Eigen::MatrixXd output_range_block(const ReceiverArray& array);

struct AugmentedOutputs {
  Eigen::VectorXd y;       // nr + nC
  Eigen::VectorXd ranges;  // reconstructed ρ1..ρnr
};

/// Thrown when a reconstructed range is not positive.
class RejectedFrame : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output vector from measured ranges ρ1..ρnr.
AugmentedOutputs outputs_from_ranges(const Eigen::VectorXd& ranges,
                                     const ReceiverArray& array);

/// Output vector from one USBL frame. Throws RejectedFrame if the frame has
/// no USBL data or a reconstructed range is not positive.
AugmentedOutputs compute_outputs(const SensorFrame& frame,
                                 const ReceiverArray& array);

/// Γ = T_r·x with T_r = diag(Rᵀ, Rᵀ, 1, …, 1).
AugmentedState revert(const AugmentedState& x, const Rotation& R);
/// Inverse of revert().
AugmentedState unrevert(const AugmentedState& gamma, const Rotation& R);

/// One sample of the signals the LTV matrices depend on. `u` is the
/// inertial input R·vr; `vr` is kept for the body-reverted frame.
struct SignalSample {
  double t = 0.0;
  Rotation R;
  Vec3 omega = Vec3::Zero();
  Vec3 vr = Vec3::Zero();
  Vec3 u = Vec3::Zero();
  Eigen::VectorXd ranges;

  LtvInputs inputs(Frame frame) const;
};

using SignalHistory = std::vector<SignalSample>;
using SignalSource = std::function<SignalSample(double)>;

/// Noise-free signals evaluated from the scenario's true trajectory.
SignalSource truth_signal_source(const Scenario& scenario);

/// Samples `source` on t0, t0+dt, …, up to tf (inclusive within 1e-9).
SignalHistory sample_signals(const SignalSource& source, double t0, double tf,
                             double dt);

/// Signals built from simulated sensor frames: measured ω and vr at every
/// epoch, attitude from truth, ranges from USBL epochs linearly interpolated
/// in between (held after the last one).
SignalHistory signals_from_simulation(const std::vector<SimEpoch>& epochs,
                                      const ReceiverArray& array);

/// Maximum sample spacing accepted by the quadrature routines (s).
inline constexpr double kMaxSignalSpacing = 0.1;

struct TransitionBlocks {
  Eigen::MatrixXd Phi_AA;  // 6×6
  Eigen::MatrixXd Phi_BA;  // nr×6
  Eigen::MatrixXd Phi_BC;  // nr×2
  Eigen::MatrixXd Phi_CA;  // 2×6
  Eigen::MatrixXd Phi_CC;  // 2×2
  Eigen::MatrixXd Phi;     // (8+nr)×(8+nr)
};

/// Φ(t, t0) of the inertial-transformed system. Φ_AA is closed form;
/// Φ_BA and Φ_BC come from trapezoidal quadrature of their integrals over
/// the sampled history; Φ_CA and Φ_CC from trapezoidal integration of the
/// corresponding rows of Φ̇ = AΦ. t0 and t must be sample times.
/// Throws std::invalid_argument if t < t0, if the times are not sampled or if
/// the history is sparser than kMaxSignalSpacing on [t0, t].
TransitionBlocks transition_blocks(const SignalHistory& history,
                                   const ReceiverArray& array, double t0,
                                   double t);

/// Φ(t_k, t_first) for every k in [first, last], sharing one cumulative pass.
std::vector<Eigen::MatrixXd> transition_sequence(const SignalHistory& history,
                                                 const ReceiverArray& array,
                                                 std::size_t first,
                                                 std::size_t last);

/// Index of the sample at time t (within 1e-9 s); throws if absent.
std::size_t sample_index(const SignalHistory& history, double t);

}  // namespace usblnav
