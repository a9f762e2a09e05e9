#include "steerkit/dubins2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "steerkit/parallel.hpp"
#include "steerkit/rng.hpp"
#include "steerkit/rootfind.hpp"

namespace steerkit {

double wrap_heading(double gamma) { return std::atan2(std::sin(gamma), std::cos(gamma)); }

Config2D config_step(const Config2D& start, double u, double dt) {
    Config2D out = start;
    if (u == 0.0) {
        out.x += dt * std::cos(start.gamma);
        out.y += dt * std::sin(start.gamma);
        return out;
    }
    const double g1 = start.gamma + u * dt;
    out.x += (std::sin(g1) - std::sin(start.gamma)) / u;
    out.y += (std::cos(start.gamma) - std::cos(g1)) / u;
    out.gamma = g1;
    return out;
}

Config2D apply_primitive(const Config2D& start, const Primitive2D& prim) {
    if (prim.kind == Primitive2D::Kind::S) return config_step(start, 0.0, prim.len);
    return config_step(start, prim.dir == TurnDir::L ? 1.0 : -1.0, prim.len);
}

Config2D endpoint_2d(const Config2D& start, const Word2D& word) {
    Config2D c = start;
    for (const auto& p : word.primitives) c = apply_primitive(c, p);
    return c;
}

Config2D relative_config(const Config2D& base, const Config2D& goal) {
    const double dx = goal.x - base.x;
    const double dy = goal.y - base.y;
    const double cg = std::cos(base.gamma), sg = std::sin(base.gamma);
    Config2D out;
    out.x = cg * dx + sg * dy;
    out.y = -sg * dx + cg * dy;
    out.gamma = goal.gamma - base.gamma;
    return out;
}

const std::vector<WordPattern2D>& word_patterns_2d() {
    using K = Primitive2D::Kind;
    static const std::vector<WordPattern2D> patterns = {
        {{K::C, K::S, K::C}, {TurnDir::L, TurnDir::L, TurnDir::L}},  // LSL
        {{K::C, K::S, K::C}, {TurnDir::L, TurnDir::L, TurnDir::R}},  // LSR
        {{K::C, K::S, K::C}, {TurnDir::R, TurnDir::L, TurnDir::L}},  // RSL
        {{K::C, K::S, K::C}, {TurnDir::R, TurnDir::L, TurnDir::R}},  // RSR
        {{K::C, K::C, K::C}, {TurnDir::L, TurnDir::R, TurnDir::L}},  // LRL
        {{K::C, K::C, K::C}, {TurnDir::R, TurnDir::L, TurnDir::R}},  // RLR
    };
    return patterns;
}

namespace {

std::array<Primitive2D, 6> build_primitives(const std::array<WordPattern2D, 2>& pattern,
                                            const Vec& lengths, double T, double* overflow) {
    std::array<Primitive2D, 6> prims;
    double used = 0.0;
    for (int i = 0; i < 6; ++i) {
        const WordPattern2D& w = pattern[static_cast<std::size_t>(i / 3)];
        prims[static_cast<std::size_t>(i)].kind = w.kinds[static_cast<std::size_t>(i % 3)];
        prims[static_cast<std::size_t>(i)].dir = w.dirs[static_cast<std::size_t>(i % 3)];
        if (i < 5) {
            const double len = std::max(lengths[i], 0.0);
            prims[static_cast<std::size_t>(i)].len = len;
            used += len;
        }
    }
    const double rest = T - used;
    prims[5].len = std::max(rest, 0.0);
    *overflow = std::max(-rest, 0.0);
    return prims;
}

std::vector<Primitive2D> pruned_primitives(const TwoWordPath2D& path) {
    std::vector<Primitive2D> out;
    for (const auto* w : {&path.word1, &path.word2}) {
        for (const auto& prim : w->primitives) {
            if (prim.len < 1e-9) continue;
            if (!out.empty() && out.back().kind == prim.kind &&
                (prim.kind == Primitive2D::Kind::S || out.back().dir == prim.dir)) {
                out.back().len += prim.len;
                continue;
            }
            out.push_back(prim);
        }
    }
    return out;
}

}  // namespace

Vec word_residual_2d(const Config2D& goal, double T,
                     const std::array<WordPattern2D, 2>& pattern, const Vec& lengths) {
    if (lengths.size() != 5) throw std::invalid_argument("word_residual_2d: expected 5 lengths");
    double overflow = 0.0;
    const auto prims = build_primitives(pattern, lengths, T, &overflow);
    Config2D c;
    for (const auto& p : prims) c = apply_primitive(c, p);
    Vec r(4);
    r[0] = c.x - goal.x;
    r[1] = c.y - goal.y;
    r[2] = wrap_heading(c.gamma - goal.gamma);
    r[3] = overflow;
    return r;
}

std::string pruned_structure_2d(const TwoWordPath2D& path) {
    std::string s;
    for (const auto& p : pruned_primitives(path))
        s.push_back(p.kind == Primitive2D::Kind::C ? 'C' : 'S');
    return s;
}

namespace {

TwoWordPath2D package_path(const Config2D& goal, double T,
                           const std::array<WordPattern2D, 2>& pattern, Vec lengths) {
    // Pin the total length to exactly T: clamp negatives, absorb any overflow
    // into the largest free length.
    for (int i = 0; i < 5; ++i) lengths[i] = std::max(lengths[i], 0.0);
    double used = lengths.sum();
    if (used > T) {
        int imax = 0;
        for (int i = 1; i < 5; ++i)
            if (lengths[i] > lengths[imax]) imax = i;
        lengths[imax] = std::max(lengths[imax] - (used - T), 0.0);
    }
    double overflow = 0.0;
    const auto prims = build_primitives(pattern, lengths, T, &overflow);

    TwoWordPath2D path;
    for (int i = 0; i < 6; ++i) {
        auto& word = i < 3 ? path.word1 : path.word2;
        word.primitives.push_back(prims[static_cast<std::size_t>(i)]);
    }
    path.goal = goal;
    double total = 0.0;
    for (const auto& p : prims) total += p.len;
    path.total_length = total;

    Config2D c;
    for (const auto& p : prims) c = apply_primitive(c, p);
    Vec r(3);
    r[0] = c.x - goal.x;
    r[1] = c.y - goal.y;
    r[2] = wrap_heading(c.gamma - goal.gamma);
    path.residual_norm = r.norm();
    path.structure = pruned_structure_2d(path);
    return path;
}

bool same_path(const TwoWordPath2D& a, const TwoWordPath2D& b) {
    if (a.structure != b.structure) return false;
    const auto pa = pruned_primitives(a), pb = pruned_primitives(b);
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (pa[i].kind != pb[i].kind) return false;
        if (pa[i].kind == Primitive2D::Kind::C && pa[i].dir != pb[i].dir) return false;
        if (std::abs(pa[i].len - pb[i].len) > 1e-6) return false;
    }
    return true;
}

}  // namespace

std::vector<TwoWordPath2D> solve_dubins2d(const Config2D& goal, double T,
                                          const Dubins2DOptions& options) {
    if (T < 0.0) throw std::invalid_argument("solve_dubins2d: T must be nonnegative");
    const auto& patterns = word_patterns_2d();
    const int n_patterns = static_cast<int>(patterns.size());
    const int n_pairs = n_patterns * n_patterns;
    const int per = std::max(1, options.starts_per_pattern);
    const int jobs = n_pairs * per;

    std::vector<std::optional<TwoWordPath2D>> found(static_cast<std::size_t>(jobs));
    parallel_for(
        jobs,
        [&](int job) {
            const int pair = job / per;
            const std::array<WordPattern2D, 2> pattern = {
                patterns[static_cast<std::size_t>(pair / n_patterns)],
                patterns[static_cast<std::size_t>(pair % n_patterns)]};

            Rng rng(substream(options.seed, static_cast<std::uint64_t>(job)));
            // Uniform point on the length simplex (all six lengths sum to T).
            double e[6];
            double esum = 0.0;
            for (double& v : e) {
                v = -std::log(std::max(rng.uniform(), 1e-300));
                esum += v;
            }
            Vec x0(5);
            for (int i = 0; i < 5; ++i) x0[i] = T * e[i] / esum;

            RootProblem rp;
            rp.residual = [&](const Vec& lengths) {
                return word_residual_2d(goal, T, pattern, lengths);
            };
            rp.x0 = x0;
            rp.lower = Vec::Constant(5, 0.0);
            rp.upper = Vec::Constant(5, T);
            rp.residual_tol = options.residual_tol;
            rp.max_iters = options.max_iters;
            rp.fd_step = 1e-7;
            try {
                const RootResult res = solve_lm(rp);
                if (!res.converged) return;
                TwoWordPath2D path = package_path(goal, T, pattern, res.x);
                if (path.residual_norm <= std::max(options.residual_tol * 10.0, 1e-9))
                    found[static_cast<std::size_t>(job)] = std::move(path);
            } catch (const std::exception&) {
            }
        },
        options.workers);

    std::vector<TwoWordPath2D> paths;
    for (auto& f : found)
        if (f.has_value()) paths.push_back(std::move(*f));
    std::sort(paths.begin(), paths.end(), [](const TwoWordPath2D& a, const TwoWordPath2D& b) {
        if (a.residual_norm != b.residual_norm) return a.residual_norm < b.residual_norm;
        return a.structure < b.structure;
    });
    std::vector<TwoWordPath2D> unique;
    for (auto& p : paths) {
        bool dup = false;
        for (const auto& u : unique)
            if (same_path(p, u)) {
                dup = true;
                break;
            }
        if (!dup) unique.push_back(std::move(p));
    }
    return unique;
}

Trajectory sample_path_2d(const TwoWordPath2D& path, int n) {
    if (n < 2) throw std::invalid_argument("sample_path_2d: n must be >= 2");
    std::vector<Primitive2D> prims;
    for (const auto* w : {&path.word1, &path.word2})
        for (const auto& p : w->primitives) prims.push_back(p);

    Trajectory traj;
    const double L = path.total_length;
    std::size_t seg = 0;
    double seg_start = 0.0;
    Config2D seg_cfg;
    for (int i = 0; i < n; ++i) {
        const double s = L * i / (n - 1);
        while (seg < prims.size() && s > seg_start + prims[seg].len + 1e-15) {
            seg_cfg = apply_primitive(seg_cfg, prims[seg]);
            seg_start += prims[seg].len;
            ++seg;
        }
        double u = 0.0;
        Config2D c = seg_cfg;
        if (seg < prims.size()) {
            const auto& p = prims[seg];
            u = p.kind == Primitive2D::Kind::S ? 0.0 : (p.dir == TurnDir::L ? 1.0 : -1.0);
            c = config_step(seg_cfg, u, std::clamp(s - seg_start, 0.0, p.len));
        }
        traj.times.push_back(s);
        Vec state(3);
        state << c.x, c.y, c.gamma;
        traj.states.push_back(state);
        traj.controls.push_back(Vec::Constant(1, u));
    }
    return traj;
}

double max_fd_curvature_2d(const Trajectory& traj) {
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < traj.times.size(); ++i) {
        const double ds = traj.times[i + 1] - traj.times[i];
        if (ds <= 0.0) continue;
        const double dg = wrap_heading(traj.states[i + 1][2] - traj.states[i][2]);
        worst = std::max(worst, std::abs(dg / ds));
    }
    return worst;
}

}  // namespace steerkit
