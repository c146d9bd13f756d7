#pragma once

// Minimal rigid-body kinematics: skew operator, SO(3) exponential and
// attitude propagation.

#include <Eigen/Dense>

namespace usblnav {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Orthonormality and determinant tolerance for Rotation (Frobenius norm).
inline constexpr double kRotationTolerance = 1e-9;

/// A 3x3 matrix constrained to SO(3).
///
/// Construction through from_matrix() validates RᵀR = I and det(R) = 1 to
/// kRotationTolerance. Kinematic routines in this library only ever produce
/// rotations through exact exponentials or polar projection, so the
/// invariant is preserved by every public operation.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }

  /// Throws std::invalid_argument if `m` is not a rotation within tolerance.
  static Rotation from_matrix(const Mat3& m);

  /// Rotation by `angle` radians about the body z axis.
  static Rotation about_z(double angle);

  const Mat3& matrix() const { return m_; }
  Mat3 transpose() const { return m_.transpose(); }

  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation operator*(const Rotation& other) const;

  /// ‖RᵀR − I‖_F
  double orthonormality_error() const;

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;

  friend Rotation exp_so3(const Vec3& rotation_vector);
  friend Rotation renormalize(const Mat3& m);
};

/// S(w) with S(w)·a = w × a.
Mat3 skew(const Vec3& w);

/// Closed-form exponential of S(rotation_vector) (Rodrigues).
Rotation exp_so3(const Vec3& rotation_vector);

/// R·exp(S(w)·dt), the exact solution of Ṙ = R S(w) over dt for constant w.
/// Throws std::invalid_argument if dt <= 0.
Rotation propagate_attitude(const Rotation& r, const Vec3& w, double dt);

/// Nearest rotation to `m` in the Frobenius sense (orthogonal polar factor).
/// Throws std::invalid_argument for non-finite input or det(m) <= 0.
Rotation renormalize(const Mat3& m);

bool all_finite(const Vec3& v);

}  // namespace usblnav
