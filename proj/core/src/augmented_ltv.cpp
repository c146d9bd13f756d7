#include "usblnav/augmented_ltv.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace usblnav {

Eigen::VectorXd AugmentedState::to_vector() const {
  const AugmentedLayout lay{static_cast<std::size_t>(ranges.size())};
  Eigen::VectorXd x(lay.dim());
  x.segment<3>(AugmentedLayout::x1) = x1;
  x.segment<3>(AugmentedLayout::x2) = x2;
  x.segment(lay.range(0), ranges.size()) = ranges;
  x(lay.cross()) = cross;
  x(lay.speed2()) = speed2;
  return x;
}

AugmentedState AugmentedState::from_vector(const Eigen::VectorXd& x,
                                           Frame frame) {
  if (x.size() < 10) {
    throw std::invalid_argument("augmented state needs at least 10 entries");
  }
  const AugmentedLayout lay{static_cast<std::size_t>(x.size() - 8)};
  AugmentedState s;
  s.x1 = x.segment<3>(AugmentedLayout::x1);
  s.x2 = x.segment<3>(AugmentedLayout::x2);
  s.ranges = x.segment(lay.range(0), static_cast<Eigen::Index>(lay.nr));
  s.cross = x(lay.cross());
  s.speed2 = x(lay.speed2());
  s.frame = frame;
  return s;
}

std::pair<Vec3, Vec3> to_inertial(const Vec3& r, const Vec3& vc,
                                  const Rotation& R) {
  return {R * r, R * vc};
}

std::pair<Vec3, Vec3> from_inertial(const Vec3& x1, const Vec3& x2,
                                    const Rotation& R) {
  return {R.transpose() * x1, R.transpose() * x2};
}

AugmentedState augmented_truth(const TruthState& truth,
                               const ReceiverArray& array, Frame frame) {
  AugmentedState s;
  const Vec3 r = truth.transponder_body();
  const Vec3 vc = truth.current_body();
  if (frame == Frame::InertialTransformed) {
    std::tie(s.x1, s.x2) = to_inertial(r, vc, truth.R);
  } else {
    s.x1 = r;
    s.x2 = vc;
  }
  s.ranges = truth.ranges(array);
  s.cross = s.x1.dot(s.x2);
  s.speed2 = s.x2.squaredNorm();
  s.frame = frame;
  return s;
}

LtvMatrices assemble_A_B(const LtvInputs& in, const ReceiverArray& array,
                         Frame frame, const RangeBounds& bounds) {
  const std::size_t nr = array.size();
  if (static_cast<std::size_t>(in.ranges.size()) != nr) {
    throw std::invalid_argument("assemble_A_B: range count does not match array");
  }
  for (std::size_t i = 0; i < nr; ++i) {
    const double rho = in.ranges(static_cast<Eigen::Index>(i));
    if (!(rho >= bounds.min && rho <= bounds.max)) {
      std::ostringstream msg;
      msg << "range to receiver " << i + 1 << " is " << rho << " m at t="
          << in.t << " s, outside [" << bounds.min << ", " << bounds.max << "]";
      throw AssumptionViolation(msg.str(), in.t, i, rho);
    }
  }

  const AugmentedLayout lay{nr};
  const Eigen::Index n = lay.dim();
  LtvMatrices m;
  m.A = Eigen::MatrixXd::Zero(n, n);
  m.B = Eigen::MatrixXd::Zero(n, 3);

  const Mat3 S = skew(in.omega);
  const Mat3 Rt = in.R.transpose();
  const bool body = frame == Frame::BodyReverted;

  m.A.block<3, 3>(AugmentedLayout::x1, AugmentedLayout::x2) = -Mat3::Identity();
  if (body) {
    m.A.block<3, 3>(AugmentedLayout::x1, AugmentedLayout::x1) = -S;
    m.A.block<3, 3>(AugmentedLayout::x2, AugmentedLayout::x2) = -S;
  }
  for (std::size_t i = 0; i < nr; ++i) {
    const Vec3& b = array.receivers[i];
    const double inv = 1.0 / in.ranges(static_cast<Eigen::Index>(i));
    const Eigen::Index row = lay.range(i);
    if (body) {
      m.A.block<1, 3>(row, AugmentedLayout::x1) =
          (b.transpose() * S - in.input.transpose()) * inv;
      m.A.block<1, 3>(row, AugmentedLayout::x2) = b.transpose() * inv;
      m.B.block<1, 3>(row, 0) = b.transpose() * inv;
    } else {
      m.A.block<1, 3>(row, AugmentedLayout::x1) =
          (b.transpose() * S * Rt - in.input.transpose()) * inv;
      m.A.block<1, 3>(row, AugmentedLayout::x2) = b.transpose() * Rt * inv;
      m.B.block<1, 3>(row, 0) = (in.R * b).transpose() * inv;
    }
    m.A(row, lay.cross()) = -inv;
  }
  m.A.block<1, 3>(lay.cross(), AugmentedLayout::x2) = -in.input.transpose();
  m.A(lay.cross(), lay.speed2()) = -1.0;

  m.B.block<3, 3>(AugmentedLayout::x1, 0) = -Mat3::Identity();
  return m;
}

Eigen::MatrixXd output_range_block(const ReceiverArray& array) {
  const auto nr = static_cast<Eigen::Index>(array.size());
  const auto ref = static_cast<Eigen::Index>(array.reference_index);
  Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(nr, nr);
  c0(0, ref) = 1.0;
  Eigen::Index row = 1;
  for (std::size_t j : array.non_reference()) {
    c0(row, ref) = 1.0;
    c0(row, static_cast<Eigen::Index>(j)) = -1.0;
    ++row;
  }
  return c0;
}

Eigen::MatrixXd assemble_C(const Rotation& R, const Eigen::VectorXd& ranges,
                           const ReceiverArray& array, Frame frame) {
  const std::size_t nr = array.size();
  if (static_cast<std::size_t>(ranges.size()) != nr) {
    throw std::invalid_argument("assemble_C: range count does not match array");
  }
  const AugmentedLayout lay{nr};
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(lay.outputs(), lay.dim());
  const auto n = static_cast<Eigen::Index>(nr);
  C.block(0, lay.range(0), n, n) = output_range_block(array);

  const Mat3 Rt = R.transpose();
  Eigen::Index row = n;
  for (const auto& [i, j] : array.pairs()) {
    const double sum = ranges(static_cast<Eigen::Index>(i)) +
                       ranges(static_cast<Eigen::Index>(j));
    const Vec3 db = array.receivers[i] - array.receivers[j];
    if (frame == Frame::BodyReverted) {
      C.block<1, 3>(row, AugmentedLayout::x1) = 2.0 * db.transpose() / sum;
    } else {
      C.block<1, 3>(row, AugmentedLayout::x1) = 2.0 * db.transpose() * Rt / sum;
    }
    C(row, lay.range(i)) = 1.0;
    C(row, lay.range(j)) = -1.0;
    ++row;
  }
  return C;
}

AugmentedOutputs outputs_from_ranges(const Eigen::VectorXd& ranges,
                                     const ReceiverArray& array) {
  const std::size_t nr = array.size();
  if (static_cast<std::size_t>(ranges.size()) != nr) {
    throw std::invalid_argument("outputs: range count does not match array");
  }
  for (Eigen::Index i = 0; i < ranges.size(); ++i) {
    if (!(ranges(i) > 0.0)) {
      std::ostringstream msg;
      msg << "reconstructed range " << i + 1 << " is not positive";
      throw RejectedFrame(msg.str());
    }
  }
  const AugmentedLayout lay{nr};
  AugmentedOutputs out;
  out.ranges = ranges;
  out.y.resize(lay.outputs());
  const auto ref = static_cast<Eigen::Index>(array.reference_index);
  out.y(0) = ranges(ref);
  Eigen::Index row = 1;
  for (std::size_t j : array.non_reference()) {
    out.y(row++) = ranges(ref) - ranges(static_cast<Eigen::Index>(j));
  }
  for (const auto& [i, j] : array.pairs()) {
    const double sum = ranges(static_cast<Eigen::Index>(i)) +
                       ranges(static_cast<Eigen::Index>(j));
    out.y(row++) = (array.receivers[i].squaredNorm() -
                    array.receivers[j].squaredNorm()) / sum;
  }
  return out;
}

AugmentedOutputs compute_outputs(const SensorFrame& frame,
                                 const ReceiverArray& array) {
  if (!frame.has_usbl) {
    throw RejectedFrame("frame carries no USBL measurement");
  }
  AugmentedOutputs out =
      outputs_from_ranges(frame.reconstructed_ranges(array), array);
  // The first nr entries come straight from the measured quantities.
  out.y(0) = frame.rho_ref;
  out.y.segment(1, frame.drho.size()) = frame.drho;
  return out;
}

AugmentedState revert(const AugmentedState& x, const Rotation& R) {
  AugmentedState g = x;
  g.x1 = R.transpose() * x.x1;
  g.x2 = R.transpose() * x.x2;
  g.frame = Frame::BodyReverted;
  return g;
}

AugmentedState unrevert(const AugmentedState& gamma, const Rotation& R) {
  AugmentedState x = gamma;
  x.x1 = R * gamma.x1;
  x.x2 = R * gamma.x2;
  x.frame = Frame::InertialTransformed;
  return x;
}

LtvInputs SignalSample::inputs(Frame frame) const {
  LtvInputs in;
  in.t = t;
  in.R = R;
  in.omega = omega;
  in.input = frame == Frame::BodyReverted ? vr : u;
  in.ranges = ranges;
  return in;
}

SignalSource truth_signal_source(const Scenario& scenario) {
  return [traj = scenario.trajectory(), s = scenario.transponder,
          c = scenario.current, array = scenario.array](double t) {
    const TruthState st = truth_at(traj, t, s, c);
    SignalSample smp;
    smp.t = t;
    smp.R = st.R;
    smp.omega = st.omega;
    smp.vr = st.water_relative_velocity();
    smp.u = st.R * smp.vr;
    smp.ranges = st.ranges(array);
    return smp;
  };
}

SignalHistory sample_signals(const SignalSource& source, double t0, double tf,
                             double dt) {
  if (!(dt > 0.0) || tf < t0) {
    throw std::invalid_argument("sample_signals: need dt > 0 and tf >= t0");
  }
  const auto n = static_cast<std::size_t>(std::floor((tf - t0) / dt + 1e-9));
  SignalHistory h;
  h.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    h.push_back(source(t0 + static_cast<double>(k) * dt));
  }
  return h;
}

SignalHistory signals_from_simulation(const std::vector<SimEpoch>& epochs,
                                      const ReceiverArray& array) {
  SignalHistory h;
  h.reserve(epochs.size());
  std::vector<std::size_t> usbl;
  for (std::size_t k = 0; k < epochs.size(); ++k) {
    const auto& ep = epochs[k];
    SignalSample s;
    s.t = ep.frame.t;
    s.R = ep.truth.R;
    s.omega = ep.frame.omega;
    s.vr = ep.frame.vr;
    s.u = s.R * s.vr;
    if (ep.frame.has_usbl) {
      s.ranges = ep.frame.reconstructed_ranges(array);
      usbl.push_back(k);
    }
    h.push_back(std::move(s));
  }
  if (usbl.empty()) {
    throw std::invalid_argument("simulation contains no USBL epochs");
  }
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (h[k].ranges.size() != 0) continue;
    auto next = std::upper_bound(usbl.begin(), usbl.end(), k);
    if (next == usbl.begin()) {
      h[k].ranges = h[*next].ranges;
    } else if (next == usbl.end()) {
      h[k].ranges = h[*(next - 1)].ranges;
    } else {
      const auto& a = h[*(next - 1)];
      const auto& b = h[*next];
      const double w = (h[k].t - a.t) / (b.t - a.t);
      h[k].ranges = (1.0 - w) * a.ranges + w * b.ranges;
    }
  }
  return h;
}

std::size_t sample_index(const SignalHistory& history, double t) {
  auto it = std::lower_bound(
      history.begin(), history.end(), t - 1e-9,
      [](const SignalSample& s, double value) { return s.t < value; });
  if (it == history.end() || std::abs(it->t - t) > 1e-9) {
    std::ostringstream msg;
    msg << "t=" << t << " is not a sample time of the signal history";
    throw std::invalid_argument(msg.str());
  }
  return static_cast<std::size_t>(it - history.begin());
}

std::vector<Eigen::MatrixXd> transition_sequence(const SignalHistory& history,
                                                 const ReceiverArray& array,
                                                 std::size_t first,
                                                 std::size_t last) {
  if (last >= history.size() || first > last) {
    throw std::invalid_argument("transition_sequence: bad sample range");
  }
  for (std::size_t k = first + 1; k <= last; ++k) {
    const double h = history[k].t - history[k - 1].t;
    if (!(h > 0.0) || h > kMaxSignalSpacing + 1e-9) {
      std::ostringstream msg;
      msg << "signal history spacing " << h << " s at t=" << history[k].t
          << " exceeds " << kMaxSignalSpacing << " s";
      throw std::invalid_argument(msg.str());
    }
  }

  const std::size_t nr = array.size();
  const AugmentedLayout lay{nr};
  const Eigen::Index n = lay.dim();
  const double t0 = history[first].t;

  // Integrands of the range rows at one sample, for every receiver:
  //   a_i = (biᵀS(ω)Rᵀ − uᵀ)/ρi,  c_i = biᵀRᵀ/ρi,  g_i = 1/ρi.
  // ω is held from the left sample over each interval: yaw rates switch at
  // sample times, and the sample carries the value after the switch.
  struct Integrands {
    Eigen::MatrixXd a;  // nr×3
    Eigen::MatrixXd c;  // nr×3
    Eigen::VectorXd g;  // nr
  };
  auto integrands = [&](const SignalSample& s, const Vec3& omega) {
    Integrands in{Eigen::MatrixXd(nr, 3), Eigen::MatrixXd(nr, 3),
                  Eigen::VectorXd(nr)};
    const Mat3 S = skew(omega);
    const Mat3 Rt = s.R.transpose();
    for (std::size_t i = 0; i < nr; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double inv = 1.0 / s.ranges(ii);
      const Vec3& b = array.receivers[i];
      in.a.row(ii) = (b.transpose() * S * Rt - s.u.transpose()) * inv;
      in.c.row(ii) = b.transpose() * Rt * inv;
      in.g(ii) = inv;
    }
    return in;
  };

  Eigen::MatrixXd ba1 = Eigen::MatrixXd::Zero(nr, 3);
  Eigen::MatrixXd ba2 = Eigen::MatrixXd::Zero(nr, 3);
  Eigen::VectorXd bc1 = Eigen::VectorXd::Zero(nr);
  Eigen::VectorXd bc2 = Eigen::VectorXd::Zero(nr);
  Vec3 u1 = Vec3::Zero();                         // ∫u
  Eigen::RowVectorXd cross_row = Eigen::RowVectorXd::Zero(n);
  cross_row(lay.cross()) = 1.0;

  auto assemble = [&](double tau) {
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n);
    phi.block<3, 3>(0, 0).setIdentity();
    phi.block<3, 3>(0, 3) = -tau * Mat3::Identity();
    phi.block<3, 3>(3, 3).setIdentity();
    const auto nn = static_cast<Eigen::Index>(nr);
    phi.block(lay.range(0), 0, nn, 3) = ba1;
    phi.block(lay.range(0), 3, nn, 3) = ba2;
    phi.block(lay.range(0), lay.range(0), nn, nn).setIdentity();
    phi.block(lay.range(0), lay.cross(), nn, 1) = -bc1;
    phi.block(lay.range(0), lay.speed2(), nn, 1) = bc2;
    phi.row(lay.cross()) = cross_row;
    phi(lay.speed2(), lay.speed2()) = 1.0;
    return phi;
  };

  // Derivative of the cross row of Φ: the cross row of A times Φ. The rows of
  // Φ it touches (x2 and speed2) are constant, [0 I 0 0 0] and e_speed2.
  auto cross_rate = [&](const Vec3& u) {
    Eigen::RowVectorXd d = Eigen::RowVectorXd::Zero(n);
    d.segment<3>(AugmentedLayout::x2) = -u.transpose();
    d(lay.speed2()) = -1.0;
    return d;
  };

  std::vector<Eigen::MatrixXd> out;
  out.reserve(last - first + 1);
  out.push_back(assemble(0.0));

  Vec3 prev_u1 = u1;
  for (std::size_t k = first + 1; k <= last; ++k) {
    const SignalSample& s0 = history[k - 1];
    const SignalSample& s1 = history[k];
    const double h = s1.t - s0.t;
    const double tau0 = s0.t - t0;
    const double tau1 = s1.t - t0;
    const Integrands prev = integrands(s0, s0.omega);
    const Integrands cur = integrands(s1, s0.omega);

    u1 += 0.5 * h * (s0.u + s1.u);
    ba1 += 0.5 * h * (prev.a + cur.a);
    // c_i + u1ᵀ/ρi − (σ − t0)·a_i
    const Eigen::MatrixXd f0 =
        prev.c + prev.g * prev_u1.transpose() - tau0 * prev.a;
    const Eigen::MatrixXd f1 = cur.c + cur.g * u1.transpose() - tau1 * cur.a;
    ba2 += 0.5 * h * (f0 + f1);
    bc1 += 0.5 * h * (prev.g + cur.g);
    bc2 += 0.5 * h * (tau0 * prev.g + tau1 * cur.g);
    cross_row += 0.5 * h * (cross_rate(s0.u) + cross_rate(s1.u));

    out.push_back(assemble(tau1));
    prev_u1 = u1;
  }
  return out;
}

TransitionBlocks transition_blocks(const SignalHistory& history,
                                   const ReceiverArray& array, double t0,
                                   double t) {
  if (t < t0) {
    throw std::invalid_argument("transition_blocks: need t >= t0");
  }
  const std::size_t i0 = sample_index(history, t0);
  const std::size_t i1 = sample_index(history, t);
  const Eigen::MatrixXd phi = transition_sequence(history, array, i0, i1).back();
  const auto nr = static_cast<Eigen::Index>(array.size());
  const AugmentedLayout lay{array.size()};
  TransitionBlocks tb;
  tb.Phi = phi;
  tb.Phi_AA = phi.block(0, 0, 6, 6);
  tb.Phi_BA = phi.block(lay.range(0), 0, nr, 6);
  tb.Phi_BC = phi.block(lay.range(0), lay.cross(), nr, 2);
  tb.Phi_CA = phi.block(lay.cross(), 0, 2, 6);
  tb.Phi_CC = phi.block(lay.cross(), lay.cross(), 2, 2);
  return tb;
}

}  // namespace usblnav
