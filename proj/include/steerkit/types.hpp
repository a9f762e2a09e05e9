#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace steerkit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

/// Time- or arclength-stamped samples of a solution curve. `states` holds one
/// vector per sample; `controls` is optional and, when present, parallel to
/// `times`.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> controls;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
};

/// Outcome of an independent re-check of a solution: the raw residual vector,
/// its norm, and the specific error channels the verifier measures.
struct ResidualReport {
    Vec residual;
    double norm = 0.0;
    int iterations = 0;
    bool converged = false;

    double terminal_error = 0.0;
    double junction_error = 0.0;
    double hamiltonian_violation = 0.0;
};

}  // namespace steerkit
