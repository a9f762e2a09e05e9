#pragma once

#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "steerkit/types.hpp"

namespace steerkit {

using OdeRhs = std::function<Vec(double, const Vec&)>;

/// An initial value problem dv/dt = rhs(t, v) on [t0, t1].
struct OdeProblem {
    OdeRhs rhs;
    double t0 = 0.0;
    double t1 = 1.0;
    Vec v0;
    double max_step = std::numeric_limits<double>::infinity();
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
};

enum class IntegrationStatus { converged, step_underflow, event_limit };

struct IntegrationResult {
    std::vector<double> times;
    std::vector<Vec> states;
    IntegrationStatus status = IntegrationStatus::converged;
    /// Zero crossings of the switching function, in increasing time order.
    std::vector<double> switch_times;

    double final_time() const { return times.back(); }
    const Vec& final_state() const { return states.back(); }

    /// Linear interpolation between stored samples (clamped to the range).
    Vec state_at(double t) const;
};

/// Thrown when the state leaves the finite domain mid-flight; carries the last
/// finite sample reached.
class PropagationError : public std::runtime_error {
  public:
    PropagationError(const std::string& what, double t, Vec last)
        : std::runtime_error(what), time(t), last_state(std::move(last)) {}
    double time;
    Vec last_state;
};

/// Classical fixed-step fourth-order Runge-Kutta with n_steps uniform steps.
IntegrationResult integrate_rk4(const OdeProblem& problem, int n_steps);

/// Embedded Dormand-Prince 4(5) with error-controlled steps. Any `checkpoints`
/// (sorted, inside [t0, t1]) are hit exactly by step clamping and appear among
/// the output samples.
IntegrationResult integrate_adaptive(const OdeProblem& problem,
                                     std::span<const double> checkpoints = {});

using SwitchFn = std::function<double(const Vec&)>;

struct SwitchingOptions {
    int max_switches = 1000;
    /// Bisection time tolerance as a fraction of the span.
    double time_tol_scale = 1e-12;
};

/// Adaptive integration for right-hand sides that change branch at zeros of
/// switch_fn(state). Each sign change is bracketed by the accepted steps and
/// located by bisection in time; integration restarts at the crossing so no
/// step straddles the discontinuity by more than the time tolerance.
IntegrationResult integrate_with_switching(const OdeProblem& problem, const SwitchFn& switch_fn,
                                           std::span<const double> checkpoints = {},
                                           const SwitchingOptions& options = {});

enum class FdScheme { forward, central };

/// Finite-difference Jacobian of residual at point. Column i is perturbed with
/// step h * max(1, |x_i|). Rows are residual components.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& residual, const Vec& point, FdScheme scheme,
                double h);

}  // namespace steerkit
