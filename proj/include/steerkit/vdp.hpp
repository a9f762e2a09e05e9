#pragma once

#include "steerkit/shooting.hpp"

namespace steerkit {

/// Controlled Van der Pol oscillator with |u| <= 1:
///   x1_dot = x2
///   x2_dot = (1 - x1^2) x2 - x1 + u
/// The Hamiltonian maximizer is bang-bang, u* = sgn(p2), with switching
/// function p2; there is no singular arc.
ExtremalField vdp_field();

/// Default anchor state for the bundled regression cases.
Vec vdp_default_chi_i();

/// Steering problem for the Van der Pol field between the two boundary
/// specs (components may be left free on either side).
SteeringProblem vdp_problem(const BoundarySpec& chi_i, const BoundarySpec& chi_f, double T);

}  // namespace steerkit
