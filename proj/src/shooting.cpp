#include "steerkit/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "steerkit/ode.hpp"
#include "steerkit/rng.hpp"
#include "steerkit/rootfind.hpp"

namespace steerkit {

namespace {
constexpr double kDegenerateRate = 1e-14;

double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a < 0.0) a += 2.0 * M_PI;
    return a;
}

int count_free(const BoundarySpec& spec) {
    int k = 0;
    for (const auto& c : spec)
        if (!c.has_value()) ++k;
    return k;
}
}  // namespace

Vec ExtremalField::flow(const Vec& chi, const Vec& p) const {
    const Vec u = maximizer(chi, p);
    Vec out(2 * state_dim);
    out.head(state_dim) = dynamics(chi, u);
    out.tail(state_dim) = costate_rate(chi, p, u);
    return out;
}

ExtremalField negated(const ExtremalField& field) {
    ExtremalField neg;
    neg.state_dim = field.state_dim;
    neg.control_dim = field.control_dim;
    neg.dynamics = [d = field.dynamics](const Vec& chi, const Vec& u) -> Vec { return -d(chi, u); };
    neg.maximizer = [m = field.maximizer](const Vec& chi, const Vec& p) -> Vec {
        return m(chi, -p);
    };
    neg.costate_rate = [c = field.costate_rate](const Vec& chi, const Vec& p, const Vec& u) -> Vec {
        return c(chi, -p, u);
    };
    if (field.switch_fn) {
        neg.switch_fn = [s = field.switch_fn](const Vec& chi, const Vec& p) -> double {
            return s(chi, -p);
        };
    }
    neg.control_grid = field.control_grid;
    return neg;
}

BoundarySpec SteeringProblem::fixed(const Vec& v) {
    BoundarySpec spec(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) spec[static_cast<std::size_t>(i)] = v[i];
    return spec;
}

int SteeringProblem::n_free_i() const { return count_free(chi_i); }
int SteeringProblem::n_free_f() const { return count_free(chi_f); }

Vec SteeringProblem::resolve(const BoundarySpec& spec, const Vec& freed) const {
    Vec out(static_cast<Eigen::Index>(spec.size()));
    Eigen::Index j = 0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] =
            spec[i].has_value() ? *spec[i] : freed[j++];
    }
    return out;
}

UnknownLayout unknown_layout(const SteeringProblem& problem) {
    UnknownLayout layout;
    layout.state_dim = problem.field.state_dim;
    layout.n_free_i = problem.n_free_i();
    layout.n_free_f = problem.n_free_f();
    layout.angles = problem.field.state_dim - 1;
    return layout;
}

Vec sphere_point(const Vec& angles) {
    const Eigen::Index n = angles.size() + 1;
    Vec p(n);
    double s = 1.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        p[i] = s * std::cos(angles[i]);
        s *= std::sin(angles[i]);
    }
    p[n - 1] = s;
    return p;
}

Vec sphere_angles(const Vec& p) {
    const Eigen::Index n = p.size();
    Vec a(n - 1);
    for (Eigen::Index i = 0; i + 2 < n; ++i) {
        a[i] = std::atan2(p.tail(n - i - 1).norm(), p[i]);
    }
    a[n - 2] = std::atan2(p[n - 1], p[n - 2]);
    return a;
}

namespace {

struct DecodedUnknowns {
    Vec p1_0, p2_0;
    double tau;
    Vec freed_i, freed_f;
};

DecodedUnknowns decode(const UnknownLayout& layout, const Vec& z) {
    DecodedUnknowns d;
    d.p1_0 = sphere_point(z.segment(0, layout.angles));
    d.p2_0 = sphere_point(z.segment(layout.angles, layout.angles));
    d.tau = z[layout.tau_index()];
    d.freed_i = z.segment(layout.tau_index() + 1, layout.n_free_i);
    d.freed_f = z.tail(layout.n_free_f);
    return d;
}

IntegrationResult propagate_arc(const ExtremalField& field, const Vec& chi0, const Vec& p0,
                                double rate, double tol,
                                std::span<const double> checkpoints = {}) {
    const int n = field.state_dim;
    OdeProblem prob;
    prob.rhs = [&field, rate, n](double, const Vec& s) -> Vec {
        return rate * field.flow(s.head(n), s.tail(n));
    };
    prob.t0 = 0.0;
    prob.t1 = 1.0;
    prob.v0.resize(2 * n);
    prob.v0.head(n) = chi0;
    prob.v0.tail(n) = p0;
    prob.abs_tol = tol;
    prob.rel_tol = tol;
    if (field.switch_fn) {
        SwitchFn sw = [&field, n](const Vec& s) -> double {
            return field.switch_fn(s.head(n), s.tail(n));
        };
        return integrate_with_switching(prob, sw, checkpoints);
    }
    return integrate_adaptive(prob, checkpoints);
}

// Per-interval controls of a propagated arc, evaluated strictly inside each
// inter-switch interval.
std::vector<Vec> interval_controls(const IntegrationResult& arc, const ExtremalField& field) {
    const int n = field.state_dim;
    std::vector<double> bounds;
    bounds.push_back(0.0);
    for (double s : arc.switch_times) bounds.push_back(s);
    bounds.push_back(1.0);
    std::vector<Vec> controls;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        const double mid = 0.5 * (bounds[i] + bounds[i + 1]);
        const Vec s = arc.state_at(mid);
        controls.push_back(field.maximizer(s.head(n), s.tail(n)));
    }
    return controls;
}

void check_problem(const SteeringProblem& problem) {
    const auto dim = static_cast<std::size_t>(problem.field.state_dim);
    if (problem.chi_i.size() != dim || problem.chi_f.size() != dim)
        throw std::invalid_argument("SteeringProblem: boundary dimension mismatch");
    if (count_free(problem.chi_i) == static_cast<int>(dim) ||
        count_free(problem.chi_f) == static_cast<int>(dim))
        throw std::invalid_argument(
            "SteeringProblem: each boundary needs at least one fixed component");
    if (!(problem.T > 0.0) || !std::isfinite(problem.T))
        throw std::invalid_argument("SteeringProblem: T must be positive and finite");
}

}  // namespace

ResidualFn assemble_residual(const SteeringProblem& problem, double integration_tol) {
    check_problem(problem);
    const UnknownLayout layout = unknown_layout(problem);
    const ExtremalField neg = negated(problem.field);
    return [problem, layout, neg, integration_tol](const Vec& z) -> Vec {
        const DecodedUnknowns d = decode(layout, z);
        const Vec chi_i = problem.resolve(problem.chi_i, d.freed_i);
        const Vec chi_f = problem.resolve(problem.chi_f, d.freed_f);
        const int n = problem.field.state_dim;
        try {
            const IntegrationResult fwd =
                propagate_arc(problem.field, chi_i, d.p1_0, d.tau * problem.T, integration_tol);
            const IntegrationResult bwd =
                propagate_arc(neg, chi_f, d.p2_0, (1.0 - d.tau) * problem.T, integration_tol);
            if (fwd.status != IntegrationStatus::converged ||
                bwd.status != IntegrationStatus::converged)
                return Vec::Constant(n, std::numeric_limits<double>::quiet_NaN());
            return fwd.final_state().head(n) - bwd.final_state().head(n);
        } catch (const PropagationError&) {
            return Vec::Constant(n, std::numeric_limits<double>::quiet_NaN());
        }
    };
}

namespace {

SteeringSolution package_solution(const SteeringProblem& problem, const UnknownLayout& layout,
                                  const Vec& z, int iterations, const ShootingOptions& options) {
    SteeringSolution sol;
    sol.z = z;
    sol.iterations = iterations;
    DecodedUnknowns d = decode(layout, z);
    d.tau = std::clamp(d.tau, 0.0, 1.0);
    sol.p1_0 = d.p1_0;
    sol.p2_0 = d.p2_0;
    sol.tau = d.tau;
    sol.concat_time = d.tau * problem.T;
    sol.freed_i = d.freed_i;
    sol.freed_f = d.freed_f;
    sol.chi_i_resolved = problem.resolve(problem.chi_i, d.freed_i);
    sol.chi_f_resolved = problem.resolve(problem.chi_f, d.freed_f);

    const int n = problem.field.state_dim;
    const double t_concat = sol.concat_time;
    const double rate1 = d.tau * problem.T;
    const double rate2 = (1.0 - d.tau) * problem.T;
    const ExtremalField neg = negated(problem.field);

    // Uniform sample grid plus the junction time, forward side owning the
    // junction sample.
    std::vector<double> grid;
    const int m = std::max(2, options.trajectory_samples);
    for (int j = 0; j < m; ++j) grid.push_back(problem.T * j / (m - 1));
    if (std::none_of(grid.begin(), grid.end(),
                     [&](double t) { return std::abs(t - t_concat) < 1e-12 * problem.T; }))
        grid.push_back(t_concat);
    std::sort(grid.begin(), grid.end());

    std::vector<double> cps1, cps2;
    for (double t : grid) {
        if (t <= t_concat && rate1 > kDegenerateRate) {
            const double s = std::clamp(t / rate1, 0.0, 1.0);
            if (s > 0.0 && s < 1.0) cps1.push_back(s);
        } else if (t > t_concat && rate2 > kDegenerateRate) {
            const double s = std::clamp((problem.T - t) / rate2, 0.0, 1.0);
            if (s > 0.0 && s < 1.0) cps2.push_back(s);
        }
    }
    std::sort(cps1.begin(), cps1.end());
    std::sort(cps2.begin(), cps2.end());
    cps1.erase(std::unique(cps1.begin(), cps1.end()), cps1.end());
    cps2.erase(std::unique(cps2.begin(), cps2.end()), cps2.end());

    const IntegrationResult fwd =
        propagate_arc(problem.field, sol.chi_i_resolved, d.p1_0, rate1, options.polish_tol, cps1);
    const IntegrationResult bwd =
        propagate_arc(neg, sol.chi_f_resolved, d.p2_0, rate2, options.polish_tol, cps2);

    sol.junction = fwd.final_state().head(n);
    sol.residual_norm = (fwd.final_state().head(n) - bwd.final_state().head(n)).norm();

    // Assemble the physical-time trajectory.
    for (double t : grid) {
        Vec state;
        Vec ctrl;
        if (t <= t_concat + 1e-15 * problem.T) {
            const double s = rate1 > kDegenerateRate ? std::clamp(t / rate1, 0.0, 1.0)
                                                     : (t < t_concat ? 0.0 : 1.0);
            state = fwd.state_at(s);
            ctrl = problem.field.maximizer(state.head(n), state.tail(n));
        } else {
            const double s =
                rate2 > kDegenerateRate ? std::clamp((problem.T - t) / rate2, 0.0, 1.0) : 0.0;
            state = bwd.state_at(s);
            ctrl = neg.maximizer(state.head(n), state.tail(n));
        }
        sol.trajectory.times.push_back(t);
        sol.trajectory.states.push_back(state);
        sol.trajectory.controls.push_back(ctrl);
    }

    sol.arc1.switch_fractions = fwd.switch_times;
    sol.arc1.controls = interval_controls(fwd, problem.field);
    sol.arc2.switch_fractions = bwd.switch_times;
    sol.arc2.controls = interval_controls(bwd, neg);
    return sol;
}

// Two packaged roots describe the same steering solution when their
// observable signatures agree; the costate angles may differ freely wherever
// an arc carries no switch.
bool same_solution(const SteeringSolution& a, const SteeringSolution& b) {
    const double tol = 1e-4;
    if (std::abs(a.tau - b.tau) > tol) return false;
    if ((a.junction - b.junction).norm() > tol) return false;
    if ((a.chi_i_resolved - b.chi_i_resolved).norm() > tol) return false;
    if ((a.chi_f_resolved - b.chi_f_resolved).norm() > tol) return false;
    if (a.arc1.switch_fractions.size() != b.arc1.switch_fractions.size()) return false;
    if (a.arc2.switch_fractions.size() != b.arc2.switch_fractions.size()) return false;
    for (std::size_t i = 0; i < a.arc1.switch_fractions.size(); ++i)
        if (std::abs(a.arc1.switch_fractions[i] - b.arc1.switch_fractions[i]) > tol) return false;
    for (std::size_t i = 0; i < a.arc2.switch_fractions.size(); ++i)
        if (std::abs(a.arc2.switch_fractions[i] - b.arc2.switch_fractions[i]) > tol) return false;
    return true;
}

struct SolveContext {
    const SteeringProblem& problem;
    const UnknownLayout layout;
    ResidualFn search_residual;
    ResidualFn polish_residual;
    const ShootingOptions& options;

    RootProblem base(bool polish) const {
        RootProblem rp;
        rp.residual = polish ? polish_residual : search_residual;
        const int dim = layout.dim();
        rp.lower = Vec::Constant(dim, -std::numeric_limits<double>::infinity());
        rp.upper = Vec::Constant(dim, std::numeric_limits<double>::infinity());
        rp.lower[layout.tau_index()] = 0.0;
        rp.upper[layout.tau_index()] = 1.0;
        rp.residual_tol = polish ? options.residual_tol : std::max(1e-7, options.residual_tol);
        rp.max_iters = polish ? 60 : options.max_iters;
        rp.fd_step = polish ? 1e-5 : 1e-4;
        return rp;
    }
};

// Polish a search-stage root at the tight integration tolerance. The inner
// target is below the requested tolerance so that repackaging (which re-runs
// the propagation with trajectory checkpoints) stays within it.
std::optional<RootResult> polish_root(const SolveContext& ctx, const Vec& x, int prior_iters) {
    RootProblem p = ctx.base(true);
    p.x0 = x;
    p.residual_tol = 0.2 * ctx.options.residual_tol;
    try {
        RootResult pr = solve_lm(p);
        if (pr.residual_norm > ctx.options.residual_tol) return std::nullopt;
        pr.converged = true;
        pr.iterations += prior_iters;
        return pr;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// Square-ish solve with tau (and optionally freed components) pinned: the
// pinned coordinates are fixed by equal bounds so LM only moves the rest.
std::optional<RootResult> pinned_solve(const SolveContext& ctx, const Vec& x0,
                                       const SolutionPin& pin, bool polish) {
    RootProblem p = ctx.base(polish);
    p.x0 = x0;
    const int ti = ctx.layout.tau_index();
    if (pin.tau.has_value()) {
        p.x0[ti] = *pin.tau;
        p.lower[ti] = p.upper[ti] = *pin.tau;
    }
    for (int k = 0; k < ctx.layout.n_free_i; ++k) {
        if (k < static_cast<int>(pin.freed_i.size()) && pin.freed_i[k].has_value()) {
            p.x0[ti + 1 + k] = *pin.freed_i[k];
            p.lower[ti + 1 + k] = p.upper[ti + 1 + k] = *pin.freed_i[k];
        }
    }
    for (int k = 0; k < ctx.layout.n_free_f; ++k) {
        if (k < static_cast<int>(pin.freed_f.size()) && pin.freed_f[k].has_value()) {
            const int j = ti + 1 + ctx.layout.n_free_i + k;
            p.x0[j] = *pin.freed_f[k];
            p.lower[j] = p.upper[j] = *pin.freed_f[k];
        }
    }
    if (polish) p.residual_tol = 0.2 * ctx.options.residual_tol;
    try {
        RootResult r = solve_lm(p);
        if (r.residual_norm > (polish ? ctx.options.residual_tol : p.residual_tol))
            return std::nullopt;
        r.converged = true;
        return r;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

std::vector<SteeringSolution> solve_steering(const SteeringProblem& problem,
                                             const ShootingOptions& options) {
    check_problem(problem);
    const UnknownLayout layout = unknown_layout(problem);
    const int dim = layout.dim();
    SolveContext ctx{problem, layout, assemble_residual(problem, options.search_tol),
                     assemble_residual(problem, options.polish_tol), options};

    const auto sampler = [&](int i) -> Vec {
        const Vec u = quasirandom_point(static_cast<std::uint64_t>(i), dim, options.seed);
        Vec z(dim);
        for (int j = 0; j < 2 * layout.angles; ++j) z[j] = 2.0 * M_PI * u[j];
        z[layout.tau_index()] = u[layout.tau_index()];
        for (int k = 0; k < layout.n_free_i + layout.n_free_f; ++k)
            z[layout.tau_index() + 1 + k] =
                options.free_range * (2.0 * u[layout.tau_index() + 1 + k] - 1.0);
        return z;
    };

    RootProblem search = ctx.base(false);
    const std::vector<RootResult> raw =
        multi_start(search, sampler, options.starts, options.stop_at_first, options.workers);

    std::vector<RootResult> roots;
    for (const RootResult& r : raw) {
        if (!r.converged) continue;
        if (auto pr = polish_root(ctx, r.x, r.iterations)) roots.push_back(std::move(*pr));
    }

    // Continuation: walk each root's solution curve along tau in both
    // directions, recording roots on a uniform tau grid.
    if (options.continue_in_tau && !roots.empty()) {
        const double step = std::max(options.tau_step, 1e-4);
        std::vector<char> covered(static_cast<std::size_t>(1.0 / step) + 2, 0);
        const auto mark = [&](double tau) {
            const auto idx = static_cast<std::size_t>(std::clamp(tau, 0.0, 1.0) / step);
            const bool fresh = !covered[idx];
            covered[idx] = 1;
            return fresh;
        };
        const std::size_t n_seeds = roots.size();
        for (std::size_t s = 0; s < n_seeds; ++s) {
            mark(roots[s].x[layout.tau_index()]);
            for (const int dir : {+1, -1}) {
                Vec x = roots[s].x;
                double tau = x[layout.tau_index()];
                int fails = 0;
                while (fails == 0) {
                    tau += dir * step;
                    if (tau < 0.0 || tau > 1.0) break;
                    SolutionPin pin;
                    pin.tau = tau;
                    const auto r = pinned_solve(ctx, x, pin, true);
                    if (!r) {
                        ++fails;
                        break;
                    }
                    x = r->x;
                    if (mark(tau)) roots.push_back(*r);
                }
            }
        }
    }

    // Explicit regression pins from the caller.
    for (const SolutionPin& pin : options.pins) {
        bool found = false;
        // Seed from existing roots (nearest in tau first), then fresh samples.
        std::vector<std::size_t> order(roots.size());
        for (std::size_t s = 0; s < roots.size(); ++s) order[s] = s;
        if (pin.tau.has_value()) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return std::abs(roots[a].x[layout.tau_index()] - *pin.tau) <
                       std::abs(roots[b].x[layout.tau_index()] - *pin.tau);
            });
        }
        for (std::size_t s = 0; s < order.size() && !found; ++s) {
            if (auto r = pinned_solve(ctx, roots[order[s]].x, pin, true)) {
                roots.push_back(*r);
                found = true;
            }
        }
        for (int i = 0; i < options.starts && !found; ++i) {
            if (auto r = pinned_solve(ctx, sampler(i), pin, false)) {
                if (auto pr = polish_root(ctx, r->x, r->iterations)) {
                    // Re-pin during polish so the pinned values survive.
                    if (auto rp = pinned_solve(ctx, r->x, pin, true)) {
                        roots.push_back(*rp);
                        found = true;
                    }
                }
            }
        }
    }

    std::vector<SteeringSolution> solutions;
    for (const RootResult& r : roots) {
        if (r.residual_norm > options.residual_tol) continue;
        SteeringSolution sol = package_solution(problem, layout, r.x, r.iterations, options);
        bool dup = false;
        for (const SteeringSolution& existing : solutions) {
            if (same_solution(sol, existing)) {
                dup = true;
                break;
            }
        }
        if (!dup) solutions.push_back(std::move(sol));
    }
    std::sort(solutions.begin(), solutions.end(),
              [](const SteeringSolution& a, const SteeringSolution& b) {
                  if (a.tau != b.tau) return a.tau < b.tau;
                  return a.residual_norm < b.residual_norm;
              });
    return solutions;
}

namespace {

// Piecewise-constant forward propagation chi_dot = f(chi, u_k) across the
// given interval boundaries.
Vec propagate_schedule(const ExtremalField& field, const Vec& chi0,
                       const std::vector<double>& bounds, const std::vector<Vec>& controls,
                       double tol, Vec* at_split = nullptr, double split_time = 0.0) {
    Vec chi = chi0;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        const double a = bounds[i], b = bounds[i + 1];
        if (at_split && std::abs(a - split_time) < 1e-14 * std::max(1.0, split_time))
            *at_split = chi;
        if (b - a <= 0.0) continue;
        OdeProblem prob;
        const Vec u = controls[i];
        prob.rhs = [&field, u](double, const Vec& v) -> Vec { return field.dynamics(v, u); };
        prob.t0 = a;
        prob.t1 = b;
        prob.v0 = chi;
        prob.abs_tol = tol;
        prob.rel_tol = tol;
        chi = integrate_adaptive(prob).final_state();
    }
    if (at_split && std::abs(bounds.back() - split_time) < 1e-14 * std::max(1.0, split_time))
        *at_split = chi;
    return chi;
}

double hamiltonian_violation_on_arc(const ExtremalField& field, const Vec& chi0, const Vec& p0,
                                    double rate, int n_times, int n_controls) {
    if (rate <= kDegenerateRate) return 0.0;
    std::vector<double> cps;
    for (int j = 1; j + 1 < n_times; ++j) cps.push_back(static_cast<double>(j) / (n_times - 1));
    const IntegrationResult arc = propagate_arc(field, chi0, p0, rate, 1e-10, cps);
    const std::vector<Vec> grid = field.control_grid(n_controls);
    const int n = field.state_dim;
    double worst = 0.0;
    for (int j = 0; j < n_times; ++j) {
        const double s = static_cast<double>(j) / (n_times - 1);
        const Vec state = arc.state_at(s);
        const Vec chi = state.head(n);
        const Vec p = state.tail(n);
        const double h_star = p.dot(field.dynamics(chi, field.maximizer(chi, p)));
        for (const Vec& u : grid) {
            const double h = p.dot(field.dynamics(chi, u));
            worst = std::max(worst, h - h_star);
        }
    }
    return worst;
}

}  // namespace

ResidualReport verify_solution(const SteeringSolution& solution, const SteeringProblem& problem) {
    ResidualReport report;
    const double T = problem.T;
    const double tau = solution.tau;
    const double t_concat = tau * T;
    const double rate1 = tau * T;
    const double rate2 = (1.0 - tau) * T;
    const Vec chi_i = solution.chi_i_resolved;
    const Vec chi_f = solution.chi_f_resolved;

    // Full schedule over [0, T]. Arc 1 fractions map to [0, tau*T]; arc 2
    // fractions run backward from T, so its blocks appear reversed.
    std::vector<double> bounds;
    std::vector<Vec> controls;
    bounds.push_back(0.0);
    for (std::size_t i = 0; i < solution.arc1.controls.size(); ++i) {
        controls.push_back(solution.arc1.controls[i]);
        bounds.push_back(i < solution.arc1.switch_fractions.size()
                             ? solution.arc1.switch_fractions[i] * rate1
                             : t_concat);
    }
    const std::size_t k2 = solution.arc2.controls.size();
    for (std::size_t j = 0; j < k2; ++j) {
        const std::size_t i = k2 - 1 - j;
        controls.push_back(solution.arc2.controls[i]);
        const double sigma_low = i == 0 ? 0.0 : solution.arc2.switch_fractions[i - 1];
        bounds.push_back(T - sigma_low * rate2);
    }

    Vec at_junction = chi_i;
    const Vec chi_T =
        propagate_schedule(problem.field, chi_i, bounds, controls, 1e-11, &at_junction, t_concat);
    report.residual = chi_T - chi_f;
    report.terminal_error = report.residual.norm();
    report.norm = report.terminal_error;

    // Independent backward pass over arc 2 for the junction mismatch.
    {
        const ExtremalField neg = negated(problem.field);
        std::vector<double> b2;
        std::vector<Vec> c2;
        b2.push_back(0.0);
        for (std::size_t i = 0; i < k2; ++i) {
            c2.push_back(solution.arc2.controls[i]);
            const double sigma_high =
                i + 1 < k2 ? solution.arc2.switch_fractions[i] : 1.0;
            b2.push_back(sigma_high * rate2);
        }
        const Vec junction_bwd = propagate_schedule(neg, chi_f, b2, c2, 1e-11);
        report.junction_error = (at_junction - junction_bwd).norm();
    }

    const double viol1 = hamiltonian_violation_on_arc(problem.field, chi_i, solution.p1_0,
                                                      solution.tau * T, 100, 101);
    const double viol2 = hamiltonian_violation_on_arc(negated(problem.field), chi_f,
                                                      solution.p2_0, (1.0 - solution.tau) * T,
                                                      100, 101);
    report.hamiltonian_violation = std::max(viol1, viol2);
    report.converged = report.terminal_error <= 1e-6 && report.junction_error <= 1e-6 &&
                       report.hamiltonian_violation <= 1e-8;
    return report;
}

}  // namespace steerkit
