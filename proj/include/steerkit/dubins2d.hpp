#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "steerkit/types.hpp"

namespace steerkit {

/// Planar configuration of the unit-speed, unit-turn-radius car. Headings are
/// compared modulo 2*pi everywhere.
struct Config2D {
    double x = 0.0;
    double y = 0.0;
    double gamma = 0.0;
};

enum class TurnDir : std::uint8_t { L, R };

/// One path primitive: a maximum-curvature circular arc or a straight segment.
struct Primitive2D {
    enum class Kind : std::uint8_t { C, S };
    Kind kind = Kind::S;
    TurnDir dir = TurnDir::L;  // meaningful for C only
    double len = 0.0;
};

/// A word of at most three primitives in a CSC or CCC pattern; zero lengths
/// realize the subsegment shapes.
struct Word2D {
    std::vector<Primitive2D> primitives;
};

/// Two words concatenated into one prescribed-length path from the origin.
struct TwoWordPath2D {
    Word2D word1, word2;
    double total_length = 0.0;
    Config2D goal;
    double residual_norm = 0.0;
    /// Canonical structure after pruning zero-length primitives and merging
    /// mergeable neighbours, e.g. "CSCC".
    std::string structure;
};

Config2D apply_primitive(const Config2D& start, const Primitive2D& prim);
Config2D endpoint_2d(const Config2D& start, const Word2D& word);

/// Closed-form flow of the car under constant turn rate u for time dt
/// (dt may be negative; u may be any value in [-1, 1]).
Config2D config_step(const Config2D& start, double u, double dt);

/// Goal expressed in the frame of `base` (so paths from `base` to `goal`
/// become paths from the origin to the returned configuration).
Config2D relative_config(const Config2D& base, const Config2D& goal);

double wrap_heading(double gamma);

/// Direction pattern of a word: turn signs for the C slots, S fixed, e.g.
/// LSL or RLR. The six distinct patterns cover CSC and CCC words.
struct WordPattern2D {
    std::array<Primitive2D::Kind, 3> kinds;
    std::array<TurnDir, 3> dirs;
};
const std::vector<WordPattern2D>& word_patterns_2d();

/// Shooting residual for a fixed pattern pair: `lengths` holds the five free
/// primitive lengths, the sixth is T minus their sum. Components are
/// (dx, dy, wrapped dgamma, length-overflow penalty); the penalty is zero
/// whenever the free lengths fit into T.
Vec word_residual_2d(const Config2D& goal, double T,
                     const std::array<WordPattern2D, 2>& pattern, const Vec& lengths);

struct Dubins2DOptions {
    int starts_per_pattern = 6;
    std::uint64_t seed = 0;
    double residual_tol = 1e-9;
    int max_iters = 120;
    int workers = 0;
};

/// Enumerates all pattern pairs, solves the per-pattern length systems, and
/// returns converged paths sorted by residual. Total length is exactly T by
/// construction. Empty output means no start converged, not nonexistence.
std::vector<TwoWordPath2D> solve_dubins2d(const Config2D& goal, double T,
                                          const Dubins2DOptions& options = {});

/// n arclength-equispaced samples (states (x, y, gamma), controls u).
Trajectory sample_path_2d(const TwoWordPath2D& path, int n);

/// Structure string after pruning primitives shorter than 1e-9 and merging
/// adjacent same-direction arcs / collinear segments.
std::string pruned_structure_2d(const TwoWordPath2D& path);

/// Largest |d gamma / d s| over consecutive samples; a finite-difference
/// curvature estimate.
double max_fd_curvature_2d(const Trajectory& traj);

}  // namespace steerkit
