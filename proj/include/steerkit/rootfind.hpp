#pragma once

#include <functional>
#include <vector>

#include "steerkit/types.hpp"

namespace steerkit {

using ResidualFn = std::function<Vec(const Vec&)>;

/// A residual system R(x) = 0 with optional per-variable box bounds.
/// Empty lower/upper vectors mean unbounded. The residual dimension must be
/// the same at every evaluation; when it differs from dim(x) the system is
/// solved in the damped least-squares sense.
struct RootProblem {
    ResidualFn residual;
    Vec lower;
    Vec upper;
    Vec x0;
    int max_iters = 200;
    double residual_tol = 1e-9;
    double step_tol = 1e-12;
    double fd_step = 1e-7;
    bool keep_history = false;
};

struct RootResult {
    Vec x;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;
    int start_index = 0;
};

/// Levenberg-Marquardt with central finite-difference Jacobians. Damping
/// starts at 1e-3, doubles on a rejected trial and shrinks by 1/3 on an
/// accepted one. Trial steps are projected onto the bounds. Underdetermined
/// systems are handled by the damped normal equations; any zero is accepted.
RootResult solve_lm(const RootProblem& problem);

/// Damped Newton for square systems (Armijo backtracking, contraction 0.5,
/// slope factor 1e-4). Falls back to a Levenberg-Marquardt step when the
/// Jacobian condition estimate exceeds 1e12.
RootResult solve_newton(const RootProblem& problem);

/// Runs solve_lm from sampler(0..n_starts-1). Results are sorted: converged
/// first, then by residual norm, then by distance to the start point. With
/// stop_at_first, only starts up to and including the first converged index
/// are reported, so the outcome does not depend on the worker count.
/// The residual function must be reentrant: starts may run concurrently.
std::vector<RootResult> multi_start(const RootProblem& problem_template,
                                    const std::function<Vec(int)>& sampler, int n_starts,
                                    bool stop_at_first, int workers = 0);

}  // namespace steerkit
