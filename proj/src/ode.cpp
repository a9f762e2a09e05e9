#include "steerkit/ode.hpp"

#include <algorithm>
#include <cmath>

namespace steerkit {

namespace {

bool finite(const Vec& v) { return v.allFinite(); }

void check_problem(const OdeProblem& p) {
    if (!p.rhs) throw std::invalid_argument("OdeProblem: rhs not set");
    if (!(p.t1 >= p.t0)) throw std::invalid_argument("OdeProblem: t1 < t0");
    if (!(p.abs_tol > 0.0) || !(p.rel_tol > 0.0))
        throw std::invalid_argument("OdeProblem: tolerances must be positive");
    if (!(p.max_step > 0.0)) throw std::invalid_argument("OdeProblem: max_step must be positive");
}

Vec rk4_step(const OdeRhs& rhs, double t, const Vec& v, double h) {
    const Vec k1 = rhs(t, v);
    const Vec k2 = rhs(t + 0.5 * h, v + 0.5 * h * k1);
    const Vec k3 = rhs(t + 0.5 * h, v + 0.5 * h * k2);
    const Vec k4 = rhs(t + h, v + h * k3);
    return v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Dormand-Prince 5(4) tableau.
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0, kA53 = 64448.0 / 6561.0,
                 kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0, kA63 = 46732.0 / 5247.0,
                 kA64 = 49.0 / 176.0, kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                 kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
// Difference between 5th- and 4th-order weights (k7 = rhs at the new point).
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0, kE4 = 71.0 / 1920.0,
                 kE5 = -17253.0 / 339200.0, kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;

struct Dopri45 {
    const OdeRhs& rhs;
    Vec k1, k2, k3, k4, k5, k6, k7;

    // Returns the 5th-order candidate; err_norm is the scaled local error.
    Vec step(double t, const Vec& v, double h, double abs_tol, double rel_tol, double& err_norm) {
        k2 = rhs(t + 0.2 * h, v + h * (kA21 * k1));
        k3 = rhs(t + 0.3 * h, v + h * (kA31 * k1 + kA32 * k2));
        k4 = rhs(t + 0.8 * h, v + h * (kA41 * k1 + kA42 * k2 + kA43 * k3));
        k5 = rhs(t + 8.0 / 9.0 * h, v + h * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4));
        k6 = rhs(t + h, v + h * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5));
        Vec vnew = v + h * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
        k7 = rhs(t + h, vnew);
        const Vec err = h * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);

        if (!finite(vnew) || !finite(err)) {
            err_norm = std::numeric_limits<double>::infinity();
            return vnew;
        }
        double acc = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double sc = abs_tol + rel_tol * std::max(std::abs(v[i]), std::abs(vnew[i]));
            const double e = err[i] / sc;
            acc += e * e;
        }
        err_norm = v.size() > 0 ? std::sqrt(acc / static_cast<double>(v.size())) : 0.0;
        return vnew;
    }
};

double initial_step(const OdeProblem& p, const Vec& f0) {
    const double span = p.t1 - p.t0;
    if (span == 0.0) return 0.0;
    const double sc = p.abs_tol + p.rel_tol * p.v0.norm();
    const double d0 = p.v0.norm() / sc;
    const double d1 = f0.norm() / sc;
    double h = (d0 > 1e-5 && d1 > 1e-5) ? 0.01 * d0 / d1 : 1e-6 * span;
    h = std::min({h, span, p.max_step});
    return std::max(h, 1e-12 * span);
}

double step_floor(double t, double span) {
    return 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), std::abs(span));
}

// Core adaptive loop. on_step is invoked after every accepted step with the
// bracketing times/states and may rewind: if it returns a time < tb the loop
// resumes from (returned time, replaced state).
struct StepCallbackResult {
    bool rewind = false;
    double t;
    Vec v;
};

IntegrationResult adaptive_core(
    const OdeProblem& p, std::span<const double> checkpoints,
    const std::function<StepCallbackResult(double, const Vec&, double, const Vec&,
                                           IntegrationResult&)>& on_step) {
    check_problem(p);
    IntegrationResult out;
    out.times.push_back(p.t0);
    out.states.push_back(p.v0);
    const double span = p.t1 - p.t0;
    if (span == 0.0) return out;

    double t = p.t0;
    Vec v = p.v0;
    Dopri45 stepper{p.rhs};
    stepper.k1 = p.rhs(t, v);
    if (!finite(stepper.k1) || !finite(v))
        throw PropagationError("non-finite state at initial point", t, v);
    double h = initial_step(p, stepper.k1);
    std::size_t next_cp = 0;

    while (t < p.t1) {
        while (next_cp < checkpoints.size() && checkpoints[next_cp] <= t + step_floor(t, span))
            ++next_cp;
        double limit = p.t1;
        if (next_cp < checkpoints.size()) limit = std::min(limit, checkpoints[next_cp]);
        h = std::min({h, p.max_step, limit - t});

        double err = 0.0;
        Vec vnew = stepper.step(t, v, h, p.abs_tol, p.rel_tol, err);
        if (err <= 1.0) {
            const double ta = t;
            const Vec va = v;
            t += h;
            if (t >= limit - step_floor(t, span)) t = limit;
            v = std::move(vnew);
            if (!finite(v)) throw PropagationError("non-finite state", ta, va);
            out.times.push_back(t);
            out.states.push_back(v);
            const StepCallbackResult cb =
                on_step ? on_step(ta, va, t, v, out)
                        : StepCallbackResult{false, 0.0, Vec()};
            if (out.status == IntegrationStatus::event_limit) return out;
            if (cb.rewind) {
                t = cb.t;
                v = cb.v;
                stepper.k1 = p.rhs(t, v);
                h = std::min(p.max_step, std::max((p.t1 - t) * 1e-3, step_floor(t, span) * 64.0));
                continue;
            }
            stepper.k1 = stepper.k7;  // FSAL
            const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            h *= std::clamp(grow, 0.2, 5.0);
        } else {
            const double shrink =
                std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9) : 0.1;
            h *= shrink;
            if (h < step_floor(t, span)) {
                if (!finite(vnew)) throw PropagationError("non-finite state", t, v);
                out.status = IntegrationStatus::step_underflow;
                return out;
            }
        }
    }
    return out;
}

}  // namespace

Vec IntegrationResult::state_at(double t) const {
    if (times.empty()) throw std::logic_error("state_at on empty result");
    if (t <= times.front()) return states.front();
    if (t >= times.back()) return states.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - times.begin());
    const double t0 = times[j - 1], t1 = times[j];
    if (t1 == t0) return states[j];
    const double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * states[j - 1] + w * states[j];
}

IntegrationResult integrate_rk4(const OdeProblem& problem, int n_steps) {
    check_problem(problem);
    if (n_steps < 1) throw std::invalid_argument("integrate_rk4: n_steps must be >= 1");
    IntegrationResult out;
    out.times.reserve(static_cast<std::size_t>(n_steps) + 1);
    out.states.reserve(static_cast<std::size_t>(n_steps) + 1);
    out.times.push_back(problem.t0);
    out.states.push_back(problem.v0);
    const double h = (problem.t1 - problem.t0) / n_steps;
    double t = problem.t0;
    Vec v = problem.v0;
    for (int i = 0; i < n_steps; ++i) {
        Vec vnew = rk4_step(problem.rhs, t, v, h);
        if (!finite(vnew)) throw PropagationError("non-finite state", t, v);
        t = (i + 1 == n_steps) ? problem.t1 : problem.t0 + (i + 1) * h;
        v = std::move(vnew);
        out.times.push_back(t);
        out.states.push_back(v);
    }
    return out;
}

IntegrationResult integrate_adaptive(const OdeProblem& problem,
                                     std::span<const double> checkpoints) {
    return adaptive_core(problem, checkpoints, nullptr);
}

IntegrationResult integrate_with_switching(const OdeProblem& problem, const SwitchFn& switch_fn,
                                           std::span<const double> checkpoints,
                                           const SwitchingOptions& options) {
    if (!switch_fn) return integrate_adaptive(problem, checkpoints);
    const double span = problem.t1 - problem.t0;
    const double time_tol = std::max(options.time_tol_scale * std::max(span, 1e-300),
                                     4.0 * std::numeric_limits<double>::epsilon() * span);

    // 0 = sign not yet established (start, or just past a crossing).
    int current_sign = 0;
    {
        const double g0 = switch_fn(problem.v0);
        if (g0 > 0.0) current_sign = 1;
        else if (g0 < 0.0) current_sign = -1;
    }
    int n_switches = 0;

    // State at ta + dt, integrating from (ta, va) over the smooth stretch.
    const auto substate = [&](double ta, const Vec& va, double dt) -> Vec {
        if (dt <= 0.0) return va;
        OdeProblem sub = problem;
        sub.t0 = ta;
        sub.t1 = ta + dt;
        sub.v0 = va;
        return integrate_adaptive(sub).final_state();
    };

    auto on_step = [&](double ta, const Vec& va, double tb, const Vec& vb,
                       IntegrationResult& out) -> StepCallbackResult {
        const double gb = switch_fn(vb);
        const int sb = gb > 0.0 ? 1 : (gb < 0.0 ? -1 : 0);
        if (sb == 0) return {false, 0.0, Vec()};
        if (current_sign == 0 || sb == current_sign) {
            current_sign = sb;
            return {false, 0.0, Vec()};
        }
        // Sign change inside (ta, tb]: bisect on time. The bisection keeps the
        // last state on the pre-crossing side (sub-flows ending past the
        // crossing have stages straddling the branch jump, and the embedded
        // error estimate under-reports that error); one explicit micro-step of
        // width <= time_tol then carries the state just past the crossing so
        // the restarted flow is smooth again.
        double lo = ta, hi = tb;
        Vec vlo = va;
        while (hi - lo > time_tol) {
            const double mid = 0.5 * (lo + hi);
            const Vec vm = substate(ta, va, mid - ta);
            const double gm = switch_fn(vm);
            const int sm = gm > 0.0 ? 1 : (gm < 0.0 ? -1 : 0);
            if (sm == current_sign) {
                lo = mid;
                vlo = vm;
            } else {
                hi = mid;
            }
        }
        const double ts = hi;
        const Vec vs = hi > lo ? rk4_step(problem.rhs, lo, vlo, hi - lo) : vlo;
        out.switch_times.push_back(ts);
        // Replace the overshooting sample with the crossing sample.
        out.times.back() = ts;
        out.states.back() = vs;
        current_sign = 0;
        if (++n_switches > options.max_switches) {
            out.status = IntegrationStatus::event_limit;
            return {false, 0.0, Vec()};
        }
        return {true, ts, vs};
    };

    return adaptive_core(problem, checkpoints, on_step);
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& residual, const Vec& point, FdScheme scheme,
                double h) {
    if (!(h > 0.0)) throw std::invalid_argument("fd_jacobian: h must be positive");
    const Vec r0 = residual(point);
    if (!finite(r0)) throw std::runtime_error("fd_jacobian: residual not finite at base point");
    Mat jac(r0.size(), point.size());
    Vec x = point;
    for (Eigen::Index j = 0; j < point.size(); ++j) {
        const double step = h * std::max(1.0, std::abs(point[j]));
        if (scheme == FdScheme::forward) {
            x[j] = point[j] + step;
            const Vec rp = residual(x);
            x[j] = point[j];
            if (!finite(rp))
                throw std::runtime_error("fd_jacobian: non-finite residual at perturbed column " +
                                         std::to_string(j));
            jac.col(j) = (rp - r0) / step;
        } else {
            x[j] = point[j] + step;
            const Vec rp = residual(x);
            x[j] = point[j] - step;
            const Vec rm = residual(x);
            x[j] = point[j];
            if (!finite(rp) || !finite(rm))
                throw std::runtime_error("fd_jacobian: non-finite residual at perturbed column " +
                                         std::to_string(j));
            jac.col(j) = (rp - rm) / (2.0 * step);
        }
    }
    return jac;
}

}  // namespace steerkit
