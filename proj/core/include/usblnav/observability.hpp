#pragma once

// Numerical observability certificates for the augmented LTV pair (A, C).

#include <vector>

#include <Eigen/Core>

#include "usblnav/augmented_ltv.hpp"

namespace usblnav {

/// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankThreshold = 1e-8;

/// Eigenvalues of W are reported as computed. The rank decision is made on
/// the equilibrated Gramian D·W·D with D = diag(W)^(-1/2), which has the
/// same rank as W but does not depend on the units of the state
/// components (metres, m/s, m²/s, ...). Components with a zero diagonal
/// entry are unobservable and count as rank-deficient directions.
struct GramianReport {
  double t0 = 0.0;
  double tf = 0.0;
  Eigen::MatrixXd gramian;
  double min_eig = 0.0;
  double max_eig = 0.0;
  /// Rank of the equilibrated Gramian at kRankThreshold.
  int rank = 0;
  /// Rank of W itself at kRankThreshold, for reference.
  int raw_rank = 0;
  /// Smallest eigenvalue of the equilibrated Gramian.
  double scaled_min_eig = 0.0;
  bool observable = false;
};

/// W(t0, tf) = ∫ Φᵀ(t,t0) Cᵀ(t) C(t) Φ(t,t0) dt by trapezoidal quadrature
/// over the history samples.
///
/// In the inertial-transformed frame Φ comes from transition_sequence(); in
/// the body-reverted frame Φ_Γ is integrated numerically (RK4 on A_Γ
/// linearly interpolated between samples), which keeps the two routes
/// independent. tf == t0 yields the zero matrix (not observable). Throws
/// std::invalid_argument if tf < t0 or the window holds fewer than two
/// samples.
GramianReport gramian(const SignalHistory& history, const ReceiverArray& array,
                      double t0, double tf, Frame frame,
                      const RangeBounds& bounds = {});

/// Same quadrature but with Φ always obtained by RK4 integration of Φ̇ = AΦ
/// (direct output-sensitivity integration).
GramianReport gramian_numerical(const SignalHistory& history,
                                const ReceiverArray& array, double t0,
                                double tf, Frame frame,
                                const RangeBounds& bounds = {});

/// Eigen/rank summary of a symmetric PSD matrix.
GramianReport summarize_gramian(const Eigen::MatrixXd& w, double t0,
                                double tf);

struct UcoWindow {
  double t0 = 0.0;
  double delta = 0.0;
  double min_eig = 0.0;
  double max_eig = 0.0;
  double scaled_min_eig = 0.0;
  int rank = 0;
};

struct UcoSweep {
  double delta = 0.0;
  std::vector<UcoWindow> windows;
  double alpha1 = 0.0;  // inf of min_eig over windows
  double alpha2 = 0.0;  // sup of max_eig over windows
  int min_rank = 0;
  int dimension = 0;
};

/// Slides windows [t, t+δ] across the history with the given stride.
/// Throws std::invalid_argument if δ <= 0, stride <= 0 or δ exceeds the
/// history span.
UcoSweep uco_sweep(const SignalHistory& history, const ReceiverArray& array,
                   double delta, double stride,
                   Frame frame = Frame::InertialTransformed,
                   const RangeBounds& bounds = {});

struct CoplanarityResult {
  /// At least four receivers not lying in one plane.
  bool non_coplanar = false;
  /// Unit normal of the best-fit common plane when coplanar.
  Vec3 witness = Vec3::Zero();
};

CoplanarityResult coplanarity_check(const ReceiverArray& array);

}  // namespace usblnav
