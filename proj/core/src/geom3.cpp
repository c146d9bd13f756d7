#include "usblnav/geom3.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace usblnav {

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!m.allFinite()) {
    throw std::invalid_argument("rotation: non-finite entries");
  }
  const double ortho = (m.transpose() * m - Mat3::Identity()).norm();
  const double det = m.determinant();
  if (ortho > kRotationTolerance || std::abs(det - 1.0) > kRotationTolerance) {
    throw std::invalid_argument("rotation: matrix is not in SO(3)");
  }
  return Rotation(m);
}

Rotation Rotation::about_z(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 m;
  m << c, -s, 0.0,
       s,  c, 0.0,
       0.0, 0.0, 1.0;
  return Rotation(m);
}

Rotation Rotation::operator*(const Rotation& other) const {
  return Rotation(m_ * other.m_);
}

double Rotation::orthonormality_error() const {
  return (m_.transpose() * m_ - Mat3::Identity()).norm();
}

Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return s;
}

Rotation exp_so3(const Vec3& rotation_vector) {
  const double theta2 = rotation_vector.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 k = skew(rotation_vector);
  double a;  // sin(θ)/θ
  double b;  // (1 − cos(θ))/θ²
  if (theta < 1e-4) {
    // Taylor terms; truncation error below 1e-20 at this threshold.
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Rotation(Mat3::Identity() + a * k + b * k * k);
}

Rotation propagate_attitude(const Rotation& r, const Vec3& w, double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("propagate_attitude: dt must be positive");
  }
  if (w.isZero(0.0)) {
    return r;
  }
  return r * exp_so3(w * dt);
}

Rotation renormalize(const Mat3& m) {
  if (!m.allFinite()) {
    throw std::invalid_argument("renormalize: non-finite entries");
  }
  if (!(m.determinant() > 0.0)) {
    throw std::invalid_argument("renormalize: non-positive determinant");
  }
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 polar = svd.matrixU() * svd.matrixV().transpose();
  if (!(polar.determinant() > 0.0)) {
    throw std::invalid_argument("renormalize: projection is a reflection");
  }
  return Rotation(polar);
}

bool all_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace usblnav
