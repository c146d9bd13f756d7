#include "usblnav/observability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace usblnav {
namespace {

std::pair<std::size_t, std::size_t> window_indices(const SignalHistory& history,
                                                   double t0, double tf) {
  if (tf < t0) {
    throw std::invalid_argument("gramian: window end precedes its start");
  }
  auto lo = std::lower_bound(
      history.begin(), history.end(), t0 - 1e-9,
      [](const SignalSample& s, double v) { return s.t < v; });
  auto hi = std::upper_bound(
      history.begin(), history.end(), tf + 1e-9,
      [](double v, const SignalSample& s) { return v < s.t; });
  if (hi - lo < 2) {
    throw std::invalid_argument("gramian: window holds fewer than two samples");
  }
  return {static_cast<std::size_t>(lo - history.begin()),
          static_cast<std::size_t>(hi - history.begin()) - 1};
}

Eigen::MatrixXd output_matrix(const SignalSample& s, const ReceiverArray& array,
                              Frame frame) {
  return assemble_C(s.R, s.ranges, array, frame);
}

std::vector<Eigen::MatrixXd> integrate_transition(const SignalHistory& history,
                                                  const ReceiverArray& array,
                                                  std::size_t first,
                                                  std::size_t last, Frame frame,
                                                  const RangeBounds& bounds) {
  const Eigen::Index n = AugmentedLayout{array.size()}.dim();
  std::vector<Eigen::MatrixXd> out;
  out.reserve(last - first + 1);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  out.push_back(phi);
  // ω held from the left sample over each step, as in transition_sequence
  Eigen::MatrixXd a0 =
      assemble_A_B(history[first].inputs(frame), array, frame, bounds).A;
  for (std::size_t k = first + 1; k <= last; ++k) {
    const double h = history[k].t - history[k - 1].t;
    if (!(h > 0.0) || h > kMaxSignalSpacing + 1e-9) {
      throw std::invalid_argument("gramian: signal history too sparse");
    }
    LtvInputs right = history[k].inputs(frame);
    right.omega = history[k - 1].omega;
    const Eigen::MatrixXd a1 = assemble_A_B(right, array, frame, bounds).A;
    const Eigen::MatrixXd am = 0.5 * (a0 + a1);
    const Eigen::MatrixXd k1 = a0 * phi;
    const Eigen::MatrixXd k2 = am * (phi + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = am * (phi + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = a1 * (phi + h * k3);
    phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.push_back(phi);
    a0 = assemble_A_B(history[k].inputs(frame), array, frame, bounds).A;
  }
  return out;
}

GramianReport accumulate(const SignalHistory& history,
                         const ReceiverArray& array, std::size_t first,
                         std::size_t last,
                         const std::vector<Eigen::MatrixXd>& phis,
                         Frame frame) {
  const Eigen::Index n = AugmentedLayout{array.size()}.dim();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd prev;
  for (std::size_t k = first; k <= last; ++k) {
    const Eigen::MatrixXd cphi =
        output_matrix(history[k], array, frame) * phis[k - first];
    Eigen::MatrixXd term = cphi.transpose() * cphi;
    if (k > first) {
      const double h = history[k].t - history[k - 1].t;
      w += 0.5 * h * (prev + term);
    }
    prev = std::move(term);
  }
  return summarize_gramian(0.5 * (w + w.transpose()), history[first].t,
                           history[last].t);
}

}  // namespace

GramianReport summarize_gramian(const Eigen::MatrixXd& w, double t0,
                                double tf) {
  GramianReport rep;
  rep.t0 = t0;
  rep.tf = tf;
  rep.gramian = w;
  const auto count = [](const Eigen::VectorXd& ev) {
    const double top = ev.cwiseAbs().maxCoeff();
    int r = 0;
    if (top > 0.0) {
      for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i)) > kRankThreshold * top) ++r;
      }
    }
    return r;
  };
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  rep.min_eig = ev.minCoeff();
  rep.max_eig = ev.maxCoeff();
  rep.raw_rank = count(ev);

  Eigen::VectorXd d = w.diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    d(i) = d(i) > 0.0 ? 1.0 / std::sqrt(d(i)) : 0.0;
  }
  const Eigen::MatrixXd ws = d.asDiagonal() * w * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ss(ws, Eigen::EigenvaluesOnly);
  rep.scaled_min_eig = ss.eigenvalues().minCoeff();
  rep.rank = count(ss.eigenvalues());
  rep.observable = rep.rank == w.rows();
  return rep;
}

GramianReport gramian(const SignalHistory& history, const ReceiverArray& array,
                      double t0, double tf, Frame frame,
                      const RangeBounds& bounds) {
  if (tf == t0) {
    const Eigen::Index n = AugmentedLayout{array.size()}.dim();
    return summarize_gramian(Eigen::MatrixXd::Zero(n, n), t0, tf);
  }
  const auto [first, last] = window_indices(history, t0, tf);
  if (frame == Frame::InertialTransformed) {
    const auto phis = transition_sequence(history, array, first, last);
    return accumulate(history, array, first, last, phis, frame);
  }
  const auto phis =
      integrate_transition(history, array, first, last, frame, bounds);
  return accumulate(history, array, first, last, phis, frame);
}

GramianReport gramian_numerical(const SignalHistory& history,
                                const ReceiverArray& array, double t0,
                                double tf, Frame frame,
                                const RangeBounds& bounds) {
  if (tf == t0) {
    const Eigen::Index n = AugmentedLayout{array.size()}.dim();
    return summarize_gramian(Eigen::MatrixXd::Zero(n, n), t0, tf);
  }
  const auto [first, last] = window_indices(history, t0, tf);
  const auto phis =
      integrate_transition(history, array, first, last, frame, bounds);
  return accumulate(history, array, first, last, phis, frame);
}

UcoSweep uco_sweep(const SignalHistory& history, const ReceiverArray& array,
                   double delta, double stride, Frame frame,
                   const RangeBounds& bounds) {
  if (!(delta > 0.0) || !(stride > 0.0)) {
    throw std::invalid_argument("uco_sweep: delta and stride must be positive");
  }
  if (history.empty() || history.back().t - history.front().t < delta - 1e-9) {
    throw std::invalid_argument("uco_sweep: delta exceeds the history span");
  }
  UcoSweep sweep;
  sweep.delta = delta;
  sweep.dimension = static_cast<int>(AugmentedLayout{array.size()}.dim());
  sweep.alpha1 = std::numeric_limits<double>::infinity();
  sweep.alpha2 = -std::numeric_limits<double>::infinity();
  sweep.min_rank = sweep.dimension;
  const double start = history.front().t;
  const double end = history.back().t;
  for (std::size_t k = 0;; ++k) {
    const double t = start + static_cast<double>(k) * stride;
    if (t + delta > end + 1e-9) break;
    const GramianReport rep = gramian(history, array, t, t + delta, frame, bounds);
    sweep.windows.push_back(
        {t, delta, rep.min_eig, rep.max_eig, rep.scaled_min_eig, rep.rank});
    sweep.alpha1 = std::min(sweep.alpha1, rep.min_eig);
    sweep.alpha2 = std::max(sweep.alpha2, rep.max_eig);
    sweep.min_rank = std::min(sweep.min_rank, rep.rank);
  }
  return sweep;
}

CoplanarityResult coplanarity_check(const ReceiverArray& array) {
  CoplanarityResult res;
  const auto nr = static_cast<Eigen::Index>(array.size());
  if (nr == 0) {
    res.witness = Vec3::UnitZ();
    return res;
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(nr, 4), 4);
  for (Eigen::Index i = 0; i < nr; ++i) {
    m.row(i) << array.receivers[static_cast<std::size_t>(i)].transpose(), 1.0;
  }
  // Zero padding rows leave the row space (and so the rank) unchanged.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  res.non_coplanar = nr >= 4 && sv(3) > 1e-9 * sv(0);
  if (!res.non_coplanar) {
    // Null vector [n; d] of the rows [biᵀ 1]: n·bi + d = 0 for every i.
    Vec3 normal = svd.matrixV().col(3).head<3>();
    if (normal.norm() < 1e-12) {
      normal = svd.matrixV().col(2).head<3>();
    }
    res.witness = normal.normalized();
  }
  return res;
}

}  // namespace usblnav
