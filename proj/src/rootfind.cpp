#include "steerkit/rootfind.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "steerkit/ode.hpp"
#include "steerkit/parallel.hpp"

namespace steerkit {

namespace {

Vec project(const Vec& x, const Vec& lower, const Vec& upper) {
    Vec y = x;
    if (lower.size() == x.size()) y = y.cwiseMax(lower);
    if (upper.size() == x.size()) y = y.cwiseMin(upper);
    return y;
}

Vec eval(const ResidualFn& residual, const Vec& x) {
    try {
        return residual(x);
    } catch (const PropagationError&) {
        return Vec::Constant(1, std::numeric_limits<double>::quiet_NaN());
    }
}

// Jacobian evaluation that tolerates non-finite residuals at perturbed points
// by falling back to one-sided differences (and marks failure when both sides
// are unusable).
bool robust_jacobian(const ResidualFn& residual, const Vec& x, const Vec& r0, double h, Mat& jac) {
    jac.resize(r0.size(), x.size());
    Vec xp = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double step = h * std::max(1.0, std::abs(x[j]));
        xp[j] = x[j] + step;
        Vec rp = eval(residual, xp);
        xp[j] = x[j] - step;
        Vec rm = eval(residual, xp);
        xp[j] = x[j];
        const bool pf = rp.size() == r0.size() && rp.allFinite();
        const bool mf = rm.size() == r0.size() && rm.allFinite();
        if (pf && mf) {
            jac.col(j) = (rp - rm) / (2.0 * step);
        } else if (pf) {
            jac.col(j) = (rp - r0) / step;
        } else if (mf) {
            jac.col(j) = (r0 - rm) / step;
        } else {
            return false;
        }
    }
    return jac.allFinite();
}

}  // namespace

RootResult solve_lm(const RootProblem& problem) {
    if (!problem.residual) throw std::invalid_argument("solve_lm: residual not set");
    RootResult res;
    Vec x = project(problem.x0, problem.lower, problem.upper);
    Vec r = eval(problem.residual, x);
    if (!r.allFinite()) throw std::runtime_error("solve_lm: residual not finite at x0");
    double rnorm = r.norm();
    if (problem.keep_history) res.history.push_back(rnorm);

    double lambda = 1e-3;
    Mat jac;
    int iter = 0;
    bool stop = false;
    while (iter < problem.max_iters && rnorm > problem.residual_tol && !stop) {
        ++iter;
        if (!robust_jacobian(problem.residual, x, r, problem.fd_step, jac))
            throw std::runtime_error("solve_lm: Jacobian evaluation failed");
        const Mat jtj = jac.transpose() * jac;
        const Vec g = jac.transpose() * r;

        bool accepted = false;
        for (int inner = 0; inner < 50; ++inner) {
            Mat a = jtj;
            a.diagonal().array() += lambda;
            const Vec delta = a.ldlt().solve(-g);
            if (!delta.allFinite()) {
                lambda = std::min(lambda * 2.0, 1e14);
                continue;
            }
            const Vec xt = project(x + delta, problem.lower, problem.upper);
            const Vec rt = eval(problem.residual, xt);
            const bool ok = rt.size() == r.size() && rt.allFinite() && rt.norm() < rnorm;
            if (ok) {
                const double stepn = (xt - x).norm();
                x = xt;
                r = rt;
                rnorm = rt.norm();
                lambda = std::max(lambda / 3.0, 1e-14);
                if (problem.keep_history) res.history.push_back(rnorm);
                accepted = true;
                if (stepn <= problem.step_tol * (1.0 + x.norm())) stop = true;
                break;
            }
            lambda = std::min(lambda * 2.0, 1e14);
            if (lambda >= 1e14) break;
        }
        if (!accepted) break;  // stalled: damping maxed out without descent
    }

    res.x = x;
    res.residual_norm = rnorm;
    res.iterations = iter;
    res.converged = rnorm <= problem.residual_tol;
    return res;
}

RootResult solve_newton(const RootProblem& problem) {
    if (!problem.residual) throw std::invalid_argument("solve_newton: residual not set");
    RootResult res;
    Vec x = project(problem.x0, problem.lower, problem.upper);
    Vec r = eval(problem.residual, x);
    if (!r.allFinite()) throw std::runtime_error("solve_newton: residual not finite at x0");
    if (r.size() != x.size()) throw std::invalid_argument("solve_newton: system must be square");
    double rnorm = r.norm();
    if (problem.keep_history) res.history.push_back(rnorm);

    Mat jac;
    int iter = 0;
    bool stop = false;
    while (iter < problem.max_iters && rnorm > problem.residual_tol && !stop) {
        ++iter;
        if (!robust_jacobian(problem.residual, x, r, problem.fd_step, jac))
            throw std::runtime_error("solve_newton: Jacobian evaluation failed");

        Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double smax = svd.singularValues()(0);
        const double smin = svd.singularValues()(svd.singularValues().size() - 1);
        Vec delta;
        const bool ill_conditioned = smin <= 0.0 || smax / smin > 1e12;
        if (ill_conditioned) {
            // Near-singular: damped least-squares step instead.
            Mat a = jac.transpose() * jac;
            a.diagonal().array() += 1e-3 * smax * smax + 1e-300;
            delta = a.ldlt().solve(-jac.transpose() * r);
        } else {
            delta = svd.solve(-r);
        }
        if (!delta.allFinite()) break;

        // Armijo backtracking on 0.5*|r|^2.
        const double f0 = 0.5 * rnorm * rnorm;
        double step = 1.0;
        bool accepted = false;
        for (int back = 0; back < 40; ++back) {
            const Vec xt = project(x + step * delta, problem.lower, problem.upper);
            const Vec rt = eval(problem.residual, xt);
            if (rt.size() == r.size() && rt.allFinite() &&
                0.5 * rt.squaredNorm() <= (1.0 - 2.0 * 1e-4 * step) * f0) {
                const double stepn = (xt - x).norm();
                x = xt;
                r = rt;
                rnorm = rt.norm();
                accepted = true;
                if (stepn <= problem.step_tol * (1.0 + x.norm())) stop = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        // Simplified-Newton correction with the already-computed Jacobian;
        // this mops up the finite-difference noise left by the full step.
        if (!ill_conditioned && step == 1.0 && rnorm > problem.residual_tol * 1e-3) {
            const Vec delta2 = svd.solve(-r);
            if (delta2.allFinite()) {
                const Vec xt = project(x + delta2, problem.lower, problem.upper);
                const Vec rt = eval(problem.residual, xt);
                if (rt.size() == r.size() && rt.allFinite() && rt.norm() < rnorm) {
                    x = xt;
                    r = rt;
                    rnorm = rt.norm();
                }
            }
        }
        if (problem.keep_history) res.history.push_back(rnorm);
    }

    res.x = x;
    res.residual_norm = rnorm;
    res.iterations = iter;
    res.converged = rnorm <= problem.residual_tol;
    return res;
}

std::vector<RootResult> multi_start(const RootProblem& problem_template,
                                    const std::function<Vec(int)>& sampler, int n_starts,
                                    bool stop_at_first, int workers) {
    if (n_starts < 1) return {};
    std::vector<RootResult> results(static_cast<std::size_t>(n_starts));
    std::vector<Vec> starts(static_cast<std::size_t>(n_starts));
    for (int i = 0; i < n_starts; ++i) starts[static_cast<std::size_t>(i)] = sampler(i);

    const auto run_one = [&](int i) {
        RootProblem p = problem_template;
        p.x0 = starts[static_cast<std::size_t>(i)];
        RootResult r;
        try {
            r = solve_lm(p);
        } catch (const std::exception&) {
            r.x = p.x0;
            r.residual_norm = std::numeric_limits<double>::infinity();
            r.converged = false;
        }
        r.start_index = i;
        results[static_cast<std::size_t>(i)] = std::move(r);
    };

    int computed = n_starts;
    if (!stop_at_first) {
        parallel_for(n_starts, run_one, workers);
    } else {
        // Evaluate in index-ordered waves; truncate at the first converged
        // index so the returned set is the same for any worker count.
        const int w = std::max(1, resolve_workers(workers));
        int first_converged = -1;
        for (int base = 0; base < n_starts && first_converged < 0; base += w) {
            const int count = std::min(w, n_starts - base);
            parallel_for(count, [&](int k) { run_one(base + k); }, workers);
            for (int i = base; i < base + count; ++i) {
                if (results[static_cast<std::size_t>(i)].converged) {
                    first_converged = i;
                    break;
                }
            }
            if (first_converged >= 0) computed = first_converged + 1;
        }
        if (first_converged < 0) computed = n_starts;
        results.resize(static_cast<std::size_t>(computed));
        starts.resize(static_cast<std::size_t>(computed));
    }

    std::sort(results.begin(), results.end(), [&](const RootResult& a, const RootResult& b) {
        if (a.converged != b.converged) return a.converged;
        if (a.residual_norm != b.residual_norm) return a.residual_norm < b.residual_norm;
        const double da = (a.x - starts[static_cast<std::size_t>(a.start_index)]).norm();
        const double db = (b.x - starts[static_cast<std::size_t>(b.start_index)]).norm();
        if (da != db) return da < db;
        return a.start_index < b.start_index;
    });
    return results;
}

}  // namespace steerkit
