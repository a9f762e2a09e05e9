#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "steerkit/rootfind.hpp"
#include "steerkit/types.hpp"

namespace steerkit {

/// A control system together with its Pontryagin extremal flow: the dynamics
/// f(chi, u), the pointwise Hamiltonian maximizer u*(chi, p), and the costate
/// rate -(df/dchi)^T p. For bang-bang systems switch_fn supplies the scalar
/// whose sign selects the control branch, so the integrator can locate the
/// switching times. control_grid(n) yields a deterministic n-point sample of
/// the restraint set, used for maximization spot checks.
struct ExtremalField {
    int state_dim = 0;
    int control_dim = 0;
    std::function<Vec(const Vec& chi, const Vec& u)> dynamics;
    std::function<Vec(const Vec& chi, const Vec& p)> maximizer;
    std::function<Vec(const Vec& chi, const Vec& p, const Vec& u)> costate_rate;
    std::function<double(const Vec& chi, const Vec& p)> switch_fn;  // optional
    std::function<std::vector<Vec>(int)> control_grid;

    /// Combined extremal rate: (chi_dot, p_dot) under the maximizing control.
    Vec flow(const Vec& chi, const Vec& p) const;
};

/// The same system run backward in time: trajectories of -f. Extremals of the
/// reversed field are extremals of the original with the costate negated, so
/// every callback is derived from the original field.
ExtremalField negated(const ExtremalField& field);

/// Per-component boundary value; nullopt leaves the component as an unknown
/// parameter of the shooting system.
using BoundarySpec = std::vector<std::optional<double>>;

/// Steer from chi_i to chi_f in exactly time T. Unconstrained components on
/// either boundary become unknowns alongside the costates and the junction
/// fraction tau; each boundary needs at least one fixed component.
struct SteeringProblem {
    ExtremalField field;
    BoundarySpec chi_i;
    BoundarySpec chi_f;
    double T = 1.0;

    static BoundarySpec fixed(const Vec& v);
    int n_free_i() const;
    int n_free_f() const;
    Vec resolve(const BoundarySpec& spec, const Vec& freed) const;
};

/// Piecewise-constant control record of one extremal arc. Switch locations
/// are stored as fractions of the arc's own pseudo-time in [0, 1]; physical
/// times follow from tau and T (arc 1 runs over [0, tau*T], arc 2 backward
/// from T to tau*T), so the record stays meaningful under reparametrization.
struct ArcLog {
    std::vector<double> switch_fractions;
    std::vector<Vec> controls;  // one per interval, size = switch_fractions.size() + 1
};

struct SteeringSolution {
    Vec p1_0, p2_0;
    double tau = 0.0;
    double concat_time = 0.0;
    Vec freed_i, freed_f;
    Vec chi_i_resolved, chi_f_resolved;
    Vec junction;
    Trajectory trajectory;  // states stacked as [chi; p]
    double residual_norm = 0.0;
    Vec z;  // raw unknown vector (angles, tau, freed components)
    ArcLog arc1, arc2;
    int iterations = 0;
};

/// A regression seed: solve with tau and/or freed boundary components pinned
/// to the given values, leaving only the costate angles (and any unpinned
/// frees) unknown.
struct SolutionPin {
    std::optional<double> tau;
    std::vector<std::optional<double>> freed_i;  // aligned with the free slots
    std::vector<std::optional<double>> freed_f;
};

struct ShootingOptions {
    int starts = 100;
    std::uint64_t seed = 0;
    double residual_tol = 1e-9;
    double search_tol = 1e-8;   // integration tolerance while root-finding
    double polish_tol = 1e-10;  // integration tolerance for accepted roots
    int max_iters = 200;
    int trajectory_samples = 1001;
    double free_range = 2.5;  // sampling range for freed boundary components
    int workers = 0;
    bool stop_at_first = false;
    /// The solution set of the shooting system is generically a continuum;
    /// when true, converged roots are continued along tau (step tau_step)
    /// so the reported set samples the whole reachable tau range.
    bool continue_in_tau = true;
    double tau_step = 0.005;
    std::vector<SolutionPin> pins;
};

/// Unknown-vector layout: unit-sphere angles for p1(0) and p2(0) (state_dim-1
/// each, so the costates are exactly unit norm), then tau, then one entry per
/// freed boundary component (initial boundary first).
struct UnknownLayout {
    int state_dim = 0;
    int n_free_i = 0;
    int n_free_f = 0;
    int angles = 0;  // per costate
    int dim() const { return 2 * angles + 1 + n_free_i + n_free_f; }
    int tau_index() const { return 2 * angles; }
};
UnknownLayout unknown_layout(const SteeringProblem& problem);

Vec sphere_point(const Vec& angles);        // angles -> unit vector
Vec sphere_angles(const Vec& unit_vector);  // inverse parametrization

/// The two-sided shooting residual R(z) = chi1(1) - chi2(1): the forward arc
/// runs from chi_i at rate tau*T*f, the backward arc from chi_f at rate
/// (1-tau)*T*(-f), both over unit pseudo-time. Propagation failures surface
/// as non-finite residuals.
ResidualFn assemble_residual(const SteeringProblem& problem, double integration_tol = 1e-8);

/// Multi-start solve of the shooting system, followed by tau continuation and
/// any pinned regression solves. Returns converged, deduplicated solutions
/// sorted by residual norm; empty means no start converged (not a proof of
/// nonexistence).
std::vector<SteeringSolution> solve_steering(const SteeringProblem& problem,
                                             const ShootingOptions& options = {});

/// Re-integrates the recorded control sequence through the original dynamics
/// in physical time and reports the terminal error, the junction mismatch
/// between the independently propagated arcs, and the largest Hamiltonian
/// maximization violation over a 101-point control grid at 100 sample times.
ResidualReport verify_solution(const SteeringSolution& solution, const SteeringProblem& problem);

}  // namespace steerkit
