#include "usblnav/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "usblnav/filters.hpp"
#include "usblnav/harness.hpp"

namespace usblnav {
namespace {

void put_vec(std::ostream& out, const Vec3& v) {
  out << ',' << csv_number(v.x()) << ',' << csv_number(v.y()) << ','
      << csv_number(v.z());
}

void put_axes(std::ostream& out, const std::string& prefix) {
  out << ',' << prefix << "_x," << prefix << "_y," << prefix << "_z";
}

}  // namespace

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_truth_csv(std::ostream& out, const std::vector<SimEpoch>& epochs,
                     const ReceiverArray& array) {
  out << "t";
  put_axes(out, "p");
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out << ",R_" << i << j;
  }
  put_axes(out, "v");
  put_axes(out, "omega");
  for (std::size_t i = 0; i < array.size(); ++i) out << ",rho_" << i + 1;
  put_axes(out, "vr");
  out << '\n';
  for (const auto& ep : epochs) {
    const TruthState& s = ep.truth;
    out << csv_number(s.t);
    put_vec(out, s.p);
    const Mat3& r = s.R.matrix();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) out << ',' << csv_number(r(i, j));
    }
    put_vec(out, s.v);
    put_vec(out, s.omega);
    const Eigen::VectorXd rho = s.ranges(array);
    for (Eigen::Index i = 0; i < rho.size(); ++i) {
      out << ',' << csv_number(rho(i));
    }
    put_vec(out, s.water_relative_velocity());
    out << '\n';
  }
}

void write_measurements_csv(std::ostream& out,
                            const std::vector<SimEpoch>& epochs,
                            const ReceiverArray& array) {
  const auto others = array.non_reference();
  out << "t,has_usbl";
  put_axes(out, "vr");
  put_axes(out, "omega");
  out << ",rho_ref";
  for (std::size_t j : others) out << ",drho_" << j + 1;
  out << '\n';
  for (const auto& ep : epochs) {
    const SensorFrame& f = ep.frame;
    out << csv_number(f.t) << ',' << (f.has_usbl ? 1 : 0);
    put_vec(out, f.vr);
    put_vec(out, f.omega);
    if (f.has_usbl) {
      out << ',' << csv_number(f.rho_ref);
      for (Eigen::Index k = 0; k < f.drho.size(); ++k) {
        out << ',' << csv_number(f.drho(k));
      }
    } else {
      out << ",";
      for (std::size_t k = 0; k < others.size(); ++k) out << ",";
    }
    out << '\n';
  }
}

void write_estimates_csv(std::ostream& out, const FilterRun& run) {
  out << "t,filter_id";
  put_axes(out, "rhat");
  put_axes(out, "vchat");
  put_axes(out, "err");
  out << ",P_trace,nis\n";
  const std::string id(filter_id(run.kind));
  for (const auto& row : run.rows) {
    out << csv_number(row.t) << ',' << id;
    put_vec(out, row.r_hat);
    put_vec(out, row.vc_hat);
    put_vec(out, row.error);
    out << ',' << csv_number(row.p_trace) << ',' << csv_number(row.nis)
        << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const UcoSweep& sweep) {
  out << "t0,delta,min_eig,max_eig,rank\n";
  for (const auto& w : sweep.windows) {
    out << csv_number(w.t0) << ',' << csv_number(w.delta) << ','
        << csv_number(w.min_eig) << ',' << csv_number(w.max_eig) << ','
        << w.rank << '\n';
  }
}

void write_per_seed_csv(std::ostream& out, const MonteCarloResult& mc) {
  out << "seed,status,filter_id,rms_x,rms_y,rms_z,error\n";
  for (const auto& s : mc.seeds) {
    if (!s.ok) {
      std::string msg = s.error;
      for (char& c : msg) {
        if (c == ',' || c == '\n') c = ' ';
      }
      out << s.seed << ",failed,,,,," << msg << '\n';
      continue;
    }
    for (std::size_t k = 0; k < s.kinds.size(); ++k) {
      const Vec3 rms = s.mse[k].cwiseSqrt();
      out << s.seed << ",ok," << filter_id(s.kinds[k]);
      put_vec(out, rms);
      out << ",\n";
    }
  }
}

void write_rms_csv(std::ostream& out, const RmsTable& table) {
  out << "filter_id,runs,rms_x,rms_y,rms_z,seed_std_x,seed_std_y,seed_std_z\n";
  for (const auto& row : table.rows) {
    out << filter_id(row.kind) << ',' << row.runs;
    put_vec(out, row.rms);
    put_vec(out, row.seed_std);
    out << '\n';
  }
}

void write_matrix(std::ostream& out, const std::string& name, double t,
                  std::size_t nr, const Eigen::MatrixXd& m) {
  out << "# " << name << " t=" << csv_number(t) << " nr=" << nr << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << csv_number(m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(std::istream& in, std::string* header) {
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (header) *header = line;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("read_matrix: ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

void write_file(const std::string& path,
                const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  body(f);
  f.flush();
  if (!f) throw IoError("write to '" + path + "' failed");
}

}  // namespace usblnav
