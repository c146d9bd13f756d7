#pragma once

// CSV artifacts. Every file starts with a header row; numbers are written
// with 17 significant digits so values round-trip exactly.
//
//   truth.csv         t, p_x..z, R_00..R_22, v_x..z, omega_x..z,
//                     rho_1..rho_nr, vr_x..z
//   measurements.csv  t, has_usbl, vr_x..z, omega_x..z, rho_ref,
//                     drho_<j> for every non-reference receiver j
//   estimates_*.csv   t, filter_id, rhat_x..z, vchat_x..z, err_x..z,
//                     P_trace, nis
//   sweep csv         t0, delta, min_eig, max_eig, rank
//
// Matrix dumps are plain CSV preceded by `# <name> t=<t> nr=<nr>`.

#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "usblnav/observability.hpp"
#include "usblnav/truthsim.hpp"

namespace usblnav {

struct FilterRun;
struct MonteCarloResult;
struct RmsTable;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full-precision decimal representation ("%.17g").
std::string csv_number(double v);

void write_truth_csv(std::ostream& out, const std::vector<SimEpoch>& epochs,
                     const ReceiverArray& array);
void write_measurements_csv(std::ostream& out,
                            const std::vector<SimEpoch>& epochs,
                            const ReceiverArray& array);
void write_estimates_csv(std::ostream& out, const FilterRun& run);
void write_sweep_csv(std::ostream& out, const UcoSweep& sweep);
void write_per_seed_csv(std::ostream& out, const MonteCarloResult& mc);
void write_rms_csv(std::ostream& out, const RmsTable& table);
void write_matrix(std::ostream& out, const std::string& name, double t,
                  std::size_t nr, const Eigen::MatrixXd& m);

/// Reads back a matrix written by write_matrix; returns the header line
/// through `header` when non-null.
Eigen::MatrixXd read_matrix(std::istream& in, std::string* header = nullptr);

/// Opens `path` for writing or throws IoError.
void write_file(const std::string& path,
                const std::function<void(std::ostream&)>& body);

}  // namespace usblnav
