#include "usblnav/filters.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace usblnav {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void symmetrize(Eigen::MatrixXd& p) { p = 0.5 * (p + p.transpose()).eval(); }

/// Joseph-form update. Returns false (leaving x, P untouched) when the
/// innovation or its covariance is unusable.
bool kalman_update(Eigen::VectorXd& x, Eigen::MatrixXd& p,
                   const Eigen::MatrixXd& h, const Eigen::VectorXd& nu,
                   const Eigen::MatrixXd& rm, double& nis) {
  if (!nu.allFinite() || !h.allFinite()) return false;
  Eigen::MatrixXd s = h * p * h.transpose() + rm;
  symmetrize(s);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
  const Eigen::MatrixXd pht = p * h.transpose();
  const Eigen::MatrixXd k = ldlt.solve(pht.transpose()).transpose();
  const Eigen::VectorXd dx = k * nu;
  if (!dx.allFinite()) return false;
  x += dx;
  const Eigen::MatrixXd ikh =
      Eigen::MatrixXd::Identity(x.size(), x.size()) - k * h;
  p = ikh * p * ikh.transpose() + k * rm * k.transpose();
  symmetrize(p);
  nis = nu.dot(ldlt.solve(nu));
  return true;
}

struct Discrete {
  Eigen::MatrixXd phi;
  Eigen::MatrixXd gamma;
};

/// Second-order discretization of ẋ = Ax + Bu with u held over dt.
Discrete discretize(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                    double dt) {
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd ad = a * dt;
  Discrete d;
  d.phi = id + ad + 0.5 * ad * ad;
  d.gamma = (id * dt + 0.5 * dt * ad) * b;
  return d;
}

/// Per-sample sensor variances: DVL on three axes, then gyro on three axes.
Eigen::VectorXd sensor_variances(const NoiseSpec& model, const Vec3& vr,
                                 const Vec3& vc) {
  const double dvl = model.dvl_relative * (vr + vc).norm() + model.dvl_floor;
  Eigen::VectorXd v(6);
  v << dvl * dvl, dvl * dvl, dvl * dvl, model.gyro_std * model.gyro_std,
      model.gyro_std * model.gyro_std, model.gyro_std * model.gyro_std;
  return v;
}

/// Process noise of a held sensor sample over dt plus random-walk floors.
Eigen::MatrixXd process_noise(const Eigen::MatrixXd& g,
                              const Eigen::VectorXd& sensor_var,
                              const Eigen::VectorXd& floors, double dt) {
  Eigen::MatrixXd q =
      dt * dt * g * sensor_var.asDiagonal() * g.transpose();
  q.diagonal() += dt * floors;
  symmetrize(q);
  return q;
}

/// Noise-input matrix of the augmented body-reverted model with respect to
/// the DVL and gyro errors, at the current estimate.
Eigen::MatrixXd ltv_noise_map(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& ranges,
                              const ReceiverArray& array) {
  const AugmentedLayout lay{array.size()};
  const Vec3 r = x.segment<3>(AugmentedLayout::x1);
  const Vec3 vc = x.segment<3>(AugmentedLayout::x2);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(lay.dim(), 6);
  g.block<3, 3>(AugmentedLayout::x1, 0) = -Mat3::Identity();
  g.block<3, 3>(AugmentedLayout::x1, 3) = skew(r);
  g.block<3, 3>(AugmentedLayout::x2, 3) = skew(vc);
  for (std::size_t i = 0; i < array.size(); ++i) {
    const Vec3& b = array.receivers[i];
    const double rho = ranges(static_cast<Eigen::Index>(i));
    g.block<1, 3>(lay.range(i), 0) = (b - r).transpose() / rho;
    g.block<1, 3>(lay.range(i), 3) = r.cross(b).transpose() / rho;
  }
  g.block<1, 3>(lay.cross(), 0) = -vc.transpose();
  return g;
}

Eigen::VectorXd ltv_floors(const ReceiverArray& array,
                           const FilterConfig& cfg) {
  const AugmentedLayout lay{array.size()};
  Eigen::VectorXd f(lay.dim());
  f.segment<3>(AugmentedLayout::x1).setConstant(cfg.q_position);
  f.segment<3>(AugmentedLayout::x2).setConstant(cfg.q_current);
  f.segment(lay.range(0), static_cast<Eigen::Index>(array.size()))
      .setConstant(cfg.q_range);
  f(lay.cross()) = cfg.q_cross;
  f(lay.speed2()) = cfg.q_speed2;
  return f;
}

Eigen::VectorXd rv_floors(const FilterConfig& cfg) {
  Eigen::VectorXd f(6);
  f << cfg.q_position, cfg.q_position, cfg.q_position, cfg.q_current,
      cfg.q_current, cfg.q_current;
  return f;
}

/// Kinematics shared by the EKF and KFPW: ṙ = −S(ω)r − vc − vr,
/// v̇c = −S(ω)vc, linear in (r, vc).
void predict_rv(FilterEstimate& est, const Vec3& vr, double dt,
                const FilterConfig& cfg) {
  const Mat3 s = skew(est.last_omega);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 6);
  a.block<3, 3>(0, 0) = -s;
  a.block<3, 3>(0, 3) = -Mat3::Identity();
  a.block<3, 3>(3, 3) = -s;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 3);
  b.block<3, 3>(0, 0) = -Mat3::Identity();
  const Discrete d = discretize(a, b, dt);

  const Vec3 r = est.position();
  const Vec3 vc = est.current();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(6, 6);
  g.block<3, 3>(0, 0) = -Mat3::Identity();
  g.block<3, 3>(0, 3) = skew(r);
  g.block<3, 3>(3, 3) = skew(vc);

  est.state = d.phi * est.state + d.gamma * vr;
  est.covariance = d.phi * est.covariance * d.phi.transpose() +
                   process_noise(g, sensor_variances(cfg.model, vr, vc),
                                 rv_floors(cfg), dt);
  symmetrize(est.covariance);
}

/// Water-relative velocity over [prev.t, frame.t]. vr turns with the vehicle,
/// so the two samples are averaged; ω is piecewise constant and the previous
/// sample holds over the step.
Vec3 step_vr(const FilterEstimate& prev, const SensorFrame& frame) {
  return 0.5 * (prev.last_vr + frame.vr);
}

/// Copies prev and clears the per-step update fields.
FilterEstimate begin_step(const FilterEstimate& prev, const SensorFrame& frame) {
  const double dt = frame.t - prev.t;
  if (!(dt >= 0.0)) {
    throw std::invalid_argument("filter step: frame time precedes estimate");
  }
  FilterEstimate est = prev;
  est.innovation.resize(0);
  est.nis = kNaN;
  est.updated = false;
  est.update_skipped = false;
  return est;
}

void end_step(FilterEstimate& est, const SensorFrame& frame) {
  est.t = frame.t;
  est.last_vr = frame.vr;
  est.last_omega = frame.omega;
}

Vec3 array_centroid(const ReceiverArray& array) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& b : array.receivers) c += b;
  return c / static_cast<double>(array.size());
}

/// Orthonormal columns spanning the plane normal to the unit vector d.
Eigen::Matrix<double, 3, 2> tangent_basis(const Vec3& d) {
  Eigen::Matrix<double, 3, 2> t;
  t.col(0) = d.unitOrthogonal();
  t.col(1) = d.cross(t.col(0));
  return t;
}

Eigen::MatrixXd initial_rv_covariance(const FilterConfig& cfg) {
  Eigen::VectorXd d(6);
  const double p = cfg.init_position_std * cfg.init_position_std;
  const double c = cfg.init_current_std * cfg.init_current_std;
  d << p, p, p, c, c, c;
  return d.asDiagonal();
}

}  // namespace

std::string_view filter_id(FilterKind kind) {
  switch (kind) {
    case FilterKind::Ltv: return "LTV";
    case FilterKind::Ekf: return "EKF";
    case FilterKind::Kfpw: return "KFPW";
  }
  return "?";
}

std::optional<FilterKind> parse_filter_kind(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "ltv") return FilterKind::Ltv;
  if (s == "ekf") return FilterKind::Ekf;
  if (s == "kfpw") return FilterKind::Kfpw;
  return std::nullopt;
}

FilterConfig FilterConfig::defaults() {
  FilterConfig c;
  c.model = default_scenario().noise;
  return c;
}

void FilterConfig::validate() const {
  model.validate();
  const double values[] = {init_position_std, init_current_std, init_range_std,
                           init_cross_std,    init_speed2_std,  q_position,
                           q_current,         q_range,          q_cross,
                           q_speed2,          qy_floor};
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument(
          "filter config: standard deviations and noise levels must be "
          "finite and non-negative");
    }
  }
  if (!(bounds.min > 0.0) || !(bounds.max > bounds.min)) {
    throw std::invalid_argument("filter config: invalid range bounds");
  }
}

AugmentedState FilterEstimate::augmented() const {
  if (kind != FilterKind::Ltv) {
    throw std::logic_error("augmented() is only defined for the LTV filter");
  }
  return AugmentedState::from_vector(state, Frame::BodyReverted);
}

FilterEstimate initialize(FilterKind kind, const TruthState& truth0,
                          const SensorFrame& first, const ReceiverArray& array,
                          const FilterConfig& config, const InitSpec& init) {
  const Vec3 r = truth0.transponder_body();
  const Vec3 vc = truth0.current_body();

  Vec3 r0 = r;
  Vec3 vc0 = vc;
  bool exact = false;
  switch (init.mode) {
    case InitMode::Offset: {
      const double n = init.direction.norm();
      if (!(n > 0.0)) {
        throw std::invalid_argument("initialize: zero offset direction");
      }
      r0 = r + init.offset * init.direction / n;
      vc0 = Vec3::Zero();
      break;
    }
    case InitMode::Truth:
      exact = true;
      break;
    case InitMode::Custom:
      r0 = r + init.position_offset;
      vc0 = vc + init.current_offset;
      break;
  }

  FilterEstimate est;
  est.kind = kind;
  est.t = first.t;
  est.nis = kNaN;
  est.last_vr = first.vr;
  est.last_omega = first.omega;

  if (kind != FilterKind::Ltv) {
    est.state.resize(6);
    est.state << r0, vc0;
    est.covariance = initial_rv_covariance(config);
    return est;
  }

  const AugmentedLayout lay{array.size()};
  Eigen::VectorXd ranges;
  if (exact) {
    ranges = truth0.ranges(array);
  } else {
    if (!first.has_usbl) {
      throw std::invalid_argument(
          "initialize: the first frame must carry a USBL measurement");
    }
    ranges = first.reconstructed_ranges(array);
  }
  AugmentedState s;
  s.x1 = r0;
  s.x2 = vc0;
  s.ranges = ranges;
  s.cross = exact ? r.dot(vc) : 0.0;
  s.speed2 = exact ? vc.squaredNorm() : 0.0;
  s.frame = Frame::BodyReverted;
  est.state = s.to_vector();
  est.held_ranges = ranges;

  Eigen::VectorXd d(lay.dim());
  d.segment<3>(AugmentedLayout::x1).setConstant(config.init_position_std);
  d.segment<3>(AugmentedLayout::x2).setConstant(config.init_current_std);
  d.segment(lay.range(0), static_cast<Eigen::Index>(array.size()))
      .setConstant(config.init_range_std);
  d(lay.cross()) = config.init_cross_std;
  d(lay.speed2()) = config.init_speed2_std;
  est.covariance = d.cwiseAbs2().asDiagonal();
  return est;
}

Eigen::MatrixXd augmented_output_covariance(const Eigen::VectorXd& ranges,
                                            const ReceiverArray& array,
                                            const FilterConfig& config) {
  const std::size_t nr = array.size();
  const AugmentedLayout lay{nr};
  const auto others = array.non_reference();

  // Raw errors e = [e_ref, e_rdoa(others...)]; reconstructed range errors
  // are δρ_ref = e_ref and δρ_j = e_ref − e_rdoa(j).
  const auto ne = static_cast<Eigen::Index>(nr);
  Eigen::MatrixXd drange = Eigen::MatrixXd::Zero(ne, ne);
  drange.col(0).setOnes();
  for (std::size_t k = 0; k < others.size(); ++k) {
    drange(static_cast<Eigen::Index>(others[k]),
           static_cast<Eigen::Index>(k + 1)) = -1.0;
  }

  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(lay.outputs(), ne);
  j.topRows(ne).setIdentity();
  // Pair rows: the innovation y − C(ρ)x depends on the measured ranges
  // through ρi + ρj; to first order its sensitivity is −(ρi − ρj)/(ρi + ρj).
  Eigen::Index row = ne;
  for (const auto& [a, b] : array.pairs()) {
    const double ra = ranges(static_cast<Eigen::Index>(a));
    const double rb = ranges(static_cast<Eigen::Index>(b));
    const double coef = -(ra - rb) / (ra + rb);
    j.row(row++) = coef * (drange.row(static_cast<Eigen::Index>(a)) +
                           drange.row(static_cast<Eigen::Index>(b)));
  }

  Eigen::VectorXd ev(ne);
  ev(0) = config.model.range_std * config.model.range_std;
  ev.tail(ne - 1).setConstant(config.model.rdoa_std * config.model.rdoa_std);
  Eigen::MatrixXd qy = j * ev.asDiagonal() * j.transpose();
  if (!config.dense_qy) {
    qy = Eigen::MatrixXd(qy.diagonal().asDiagonal());
  }
  qy.diagonal().array() += config.qy_floor;
  symmetrize(qy);
  return qy;
}

FilterEstimate ltv_kf_step(const FilterEstimate& prev, const SensorFrame& frame,
                           const ReceiverArray& array,
                           const FilterConfig& config) {
  if (prev.kind != FilterKind::Ltv) {
    throw std::invalid_argument("ltv_kf_step: estimate is not an LTV state");
  }
  FilterEstimate est = begin_step(prev, frame);
  const AugmentedLayout lay{array.size()};
  const auto nr = static_cast<Eigen::Index>(array.size());
  const double dt = frame.t - prev.t;

  if (dt > 0.0) {
    LtvInputs in;
    in.t = prev.t;
    const Vec3 vr = step_vr(prev, frame);
    in.omega = prev.last_omega;
    in.input = vr;
    in.ranges = config.ranges_from_estimate
                    ? Eigen::VectorXd(prev.state.segment(lay.range(0), nr))
                    : prev.held_ranges;
    const LtvMatrices m =
        assemble_A_B(in, array, Frame::BodyReverted, config.bounds);
    const Discrete d = discretize(m.A, m.B, dt);

    const Eigen::VectorXd xdot = m.A * prev.state + m.B * vr;
    est.held_ranges = prev.held_ranges + dt * xdot.segment(lay.range(0), nr);

    const Vec3 vc = prev.state.segment<3>(AugmentedLayout::x2);
    const Eigen::MatrixXd g = ltv_noise_map(prev.state, in.ranges, array);
    est.state = d.phi * prev.state + d.gamma * vr;
    est.covariance =
        d.phi * prev.covariance * d.phi.transpose() +
        process_noise(g, sensor_variances(config.model, vr, vc),
                      ltv_floors(array, config), dt);
    symmetrize(est.covariance);
  }

  if (frame.has_usbl) {
    try {
      const AugmentedOutputs out = compute_outputs(frame, array);
      est.held_ranges = out.ranges;
      const Eigen::VectorXd c_ranges =
          config.ranges_from_estimate
              ? Eigen::VectorXd(est.state.segment(lay.range(0), nr))
              : out.ranges;
      const Eigen::MatrixXd c =
          assemble_C(Rotation::identity(), c_ranges, array, Frame::BodyReverted);
      const Eigen::MatrixXd qy =
          augmented_output_covariance(out.ranges, array, config);
      const Eigen::VectorXd nu = out.y - c * est.state;
      double nis = kNaN;
      if (kalman_update(est.state, est.covariance, c, nu, qy, nis)) {
        est.innovation = nu;
        est.nis = nis;
        est.updated = true;
      } else {
        est.update_skipped = true;
      }
    } catch (const RejectedFrame&) {
      est.update_skipped = true;
    }
  }
  end_step(est, frame);
  return est;
}

FilterEstimate ekf_step(const FilterEstimate& prev, const SensorFrame& frame,
                        const ReceiverArray& array, const FilterConfig& config) {
  if (prev.kind != FilterKind::Ekf) {
    throw std::invalid_argument("ekf_step: estimate is not an EKF state");
  }
  FilterEstimate est = begin_step(prev, frame);
  const double dt = frame.t - prev.t;
  if (dt > 0.0) predict_rv(est, step_vr(prev, frame), dt, config);

  if (frame.has_usbl) {
    const auto others = array.non_reference();
    const std::size_t ref = array.reference_index;
    const auto m = static_cast<Eigen::Index>(array.size());
    const Vec3 r = est.position();

    std::vector<double> rho(array.size());
    std::vector<Vec3> unit(array.size());
    bool degenerate = false;
    for (std::size_t i = 0; i < array.size(); ++i) {
      const Vec3 d = r - array.receivers[i];
      rho[i] = d.norm();
      if (rho[i] < 1e-6) {
        degenerate = true;
        break;
      }
      unit[i] = d / rho[i];
    }
    if (degenerate) {
      est.update_skipped = true;
    } else {
      Eigen::VectorXd y(m), h(m);
      Eigen::MatrixXd hm = Eigen::MatrixXd::Zero(m, 6);
      y(0) = frame.rho_ref;
      h(0) = rho[ref];
      hm.block<1, 3>(0, 0) = unit[ref].transpose();
      for (std::size_t k = 0; k < others.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(k + 1);
        y(row) = frame.drho(static_cast<Eigen::Index>(k));
        h(row) = rho[ref] - rho[others[k]];
        hm.block<1, 3>(row, 0) =
            (unit[ref] - unit[others[k]]).transpose();
      }
      Eigen::VectorXd rv(m);
      rv(0) = config.model.range_std * config.model.range_std;
      rv.tail(m - 1).setConstant(config.model.rdoa_std * config.model.rdoa_std);
      rv.array() += config.qy_floor;
      const Eigen::VectorXd nu = y - h;
      double nis = kNaN;
      if (kalman_update(est.state, est.covariance, hm, nu,
                        Eigen::MatrixXd(rv.asDiagonal()), nis)) {
        est.innovation = nu;
        est.nis = nis;
        est.updated = true;
      } else {
        est.update_skipped = true;
      }
    }
  }
  end_step(est, frame);
  return est;
}

std::optional<PlanarWaveFix> planar_wave_fix(const SensorFrame& frame,
                                             const ReceiverArray& array,
                                             const NoiseSpec& model) {
  if (!frame.has_usbl) return std::nullopt;
  const auto others = array.non_reference();
  if (others.size() < 3) return std::nullopt;
  const Eigen::VectorXd rho = frame.reconstructed_ranges(array);

  // Plane wave ρi ≈ ρc − dᵀ(bi − c) with d a unit vector. The reference
  // differences (bj − b_ref)ᵀd = ρ_ref − ρj carry independent RDOA errors.
  const Vec3& bref = array.receivers[array.reference_index];
  Eigen::MatrixXd mref(static_cast<Eigen::Index>(others.size()), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(others.size()));
  for (std::size_t k = 0; k < others.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    mref.row(row) = (array.receivers[others[k]] - bref).transpose();
    y(row) = frame.drho(row);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mref,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv(2) > 1e-9 * sv(0))) return std::nullopt;
  Vec3 d = svd.solve(y);
  const double dn = d.norm();
  if (!(dn > 1e-12) || !d.allFinite()) return std::nullopt;
  d /= dn;

  // Gauss-Newton on the unit sphere, two tangent coordinates per step.
  for (int it = 0; it < 4; ++it) {
    const Eigen::Matrix<double, 3, 2> tangent = tangent_basis(d);
    const Eigen::MatrixXd j = mref * tangent;
    const Eigen::Vector2d step =
        (j.transpose() * j).ldlt().solve(j.transpose() * (y - mref * d));
    d = (d + tangent * step).normalized();
    if (step.norm() < 1e-14) break;
  }
  if (!d.allFinite()) return std::nullopt;

  PlanarWaveFix fix;
  fix.direction = d;
  // The fitted wave front is centred on the array centroid; scale from there.
  const Vec3 c = array_centroid(array);
  double rho_c = 0.0;
  for (std::size_t i = 0; i < array.size(); ++i) {
    rho_c += rho(static_cast<Eigen::Index>(i)) +
             fix.direction.dot(array.receivers[i] - c);
  }
  rho_c /= static_cast<double>(array.size());
  fix.position = c + rho_c * fix.direction;
  fix.covariance = planar_wave_covariance(fix.position, array, model);
  // A noisy unit vector is short on average, E[d] ≈ (1 − tr Σd/2)·d, which
  // pulls the fix towards the array; scale it back out.
  const Mat3 perp = Mat3::Identity() - d * d.transpose();
  const double dir_var = (perp * fix.covariance * perp).trace() / (rho_c * rho_c);
  fix.position = c + rho_c * fix.direction / (1.0 - 0.5 * dir_var);
  return fix;
}

Mat3 planar_wave_covariance(const Vec3& position, const ReceiverArray& array,
                            const NoiseSpec& model) {
  const Vec3 rel = position - array_centroid(array);
  const double rho = rel.norm();
  if (!(rho > 1e-9)) return Mat3::Constant(kNaN);
  const Vec3 d = rel / rho;
  const Vec3& bref = array.receivers[array.reference_index];
  const auto others = array.non_reference();
  Eigen::MatrixXd mref(static_cast<Eigen::Index>(others.size()), 3);
  for (std::size_t k = 0; k < others.size(); ++k) {
    mref.row(static_cast<Eigen::Index>(k)) =
        (array.receivers[others[k]] - bref).transpose();
  }
  const Eigen::Matrix<double, 3, 2> tangent = tangent_basis(d);
  const Eigen::MatrixXd j = mref * tangent;
  const Eigen::Matrix2d info = j.transpose() * j;
  const Mat3 cov_dir = model.rdoa_std * model.rdoa_std * tangent *
                       info.inverse() * tangent.transpose();
  Mat3 cov = rho * rho * cov_dir +
             model.range_std * model.range_std * d * d.transpose();
  return 0.5 * (cov + cov.transpose());
}

FilterEstimate kfpw_step(const FilterEstimate& prev, const SensorFrame& frame,
                         const ReceiverArray& array,
                         const FilterConfig& config) {
  if (prev.kind != FilterKind::Kfpw) {
    throw std::invalid_argument("kfpw_step: estimate is not a KFPW state");
  }
  FilterEstimate est = begin_step(prev, frame);
  const double dt = frame.t - prev.t;
  if (dt > 0.0) predict_rv(est, step_vr(prev, frame), dt, config);

  if (frame.has_usbl) {
    const auto fix = planar_wave_fix(frame, array, config.model);
    if (!fix) {
      est.update_skipped = true;
    } else {
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 6);
      h.block<3, 3>(0, 0).setIdentity();
      // Noise shaped along the prior direction; the fix's own direction
      // would bias the update outwards.
      Eigen::MatrixXd rm =
          planar_wave_covariance(est.position(), array, config.model);
      rm.diagonal().array() += config.qy_floor;
      const Eigen::VectorXd nu = fix->position - est.position();
      double nis = kNaN;
      if (kalman_update(est.state, est.covariance, h, nu, rm, nis)) {
        est.innovation = nu;
        est.nis = nis;
        est.updated = true;
      } else {
        est.update_skipped = true;
      }
    }
  }
  end_step(est, frame);
  return est;
}

FilterEstimate filter_step(const FilterEstimate& prev, const SensorFrame& frame,
                           const ReceiverArray& array,
                           const FilterConfig& config) {
  switch (prev.kind) {
    case FilterKind::Ltv: return ltv_kf_step(prev, frame, array, config);
    case FilterKind::Ekf: return ekf_step(prev, frame, array, config);
    case FilterKind::Kfpw: return kfpw_step(prev, frame, array, config);
  }
  throw std::invalid_argument("filter_step: unknown filter kind");
}

}  // namespace usblnav
