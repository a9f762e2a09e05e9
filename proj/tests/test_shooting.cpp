#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "steerkit/ode.hpp"
#include "steerkit/rng.hpp"
#include "steerkit/shooting.hpp"
#include "steerkit/vdp.hpp"

using namespace steerkit;

namespace {

// f == 0 everywhere; every control is a maximizer.
ExtremalField zero_field() {
    ExtremalField f;
    f.state_dim = 2;
    f.control_dim = 1;
    f.dynamics = [](const Vec& chi, const Vec&) { return Vec::Zero(chi.size()).eval(); };
    f.maximizer = [](const Vec&, const Vec&) { return Vec::Zero(1).eval(); };
    f.costate_rate = [](const Vec&, const Vec& p, const Vec&) { return Vec::Zero(p.size()).eval(); };
    f.control_grid = [](int n) {
        std::vector<Vec> g;
        for (int i = 0; i < n; ++i) g.push_back(Vec::Zero(1));
        return g;
    };
    return f;
}

ShootingOptions fast_options(int starts, std::uint64_t seed) {
    ShootingOptions o;
    o.starts = starts;
    o.seed = seed;
    o.continue_in_tau = false;
    return o;
}

}  // namespace

TEST_CASE("vdp field: pointwise values") {
    const auto f = vdp_field();
    Vec chi = Eigen::Vector2d(0.0, 0.0);
    Vec p = Eigen::Vector2d(0.0, 1.0);
    const Vec u = f.maximizer(chi, p);
    CHECK(u[0] == 1.0);
    const Vec dchi = f.dynamics(chi, u);
    CHECK(dchi[0] == 0.0);
    CHECK(dchi[1] == 1.0);
    const Vec dp = f.costate_rate(chi, p, u);
    CHECK(dp[0] == 1.0);
    CHECK(dp[1] == -1.0);

    p[1] = -0.5;
    CHECK(f.maximizer(chi, p)[0] == -1.0);
}

TEST_CASE("vdp field: maximizer beats a 201-point control grid") {
    const auto f = vdp_field();
    const auto grid = f.control_grid(201);
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        Vec chi(2), p(2);
        chi << rng.uniform(-3, 3), rng.uniform(-3, 3);
        p << rng.normal(), rng.normal();
        const double h_star = p.dot(f.dynamics(chi, f.maximizer(chi, p)));
        for (const Vec& u : grid) CHECK(p.dot(f.dynamics(chi, u)) <= h_star + 1e-12);
    }
}

TEST_CASE("vdp field: costate rate matches -(df/dchi)^T p by finite differences") {
    const auto f = vdp_field();
    Rng rng(22);
    for (int trial = 0; trial < 1000; ++trial) {
        Vec chi(2), p(2), u(1);
        chi << rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5);
        p << rng.normal(), rng.normal();
        u << (rng.uniform() < 0.5 ? -1.0 : 1.0);
        const double h = 1e-6;
        Mat grad(2, 2);
        for (int j = 0; j < 2; ++j) {
            Vec cp = chi, cm = chi;
            cp[j] += h;
            cm[j] -= h;
            grad.col(j) = (f.dynamics(cp, u) - f.dynamics(cm, u)) / (2 * h);
        }
        const Vec expected = -grad.transpose() * p;
        CHECK((f.costate_rate(chi, p, u) - expected).norm() < 1e-6);
    }
}

TEST_CASE("negated field is the extremal flow of -f") {
    const auto f = vdp_field();
    const auto neg = negated(f);
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        Vec chi(2), p(2);
        chi << rng.uniform(-2, 2), rng.uniform(-2, 2);
        p << rng.normal(), rng.normal();
        const Vec u = neg.maximizer(chi, p);
        // u must maximize p . (-f): compare against a grid.
        const double h_star = p.dot(neg.dynamics(chi, u));
        for (const Vec& ug : f.control_grid(101))
            CHECK(p.dot(-f.dynamics(chi, ug)) <= h_star + 1e-12);
        // Costate rate of the reversed system is +(df/dchi)^T p.
        const Vec expected = -f.costate_rate(chi, p, u);
        CHECK((neg.costate_rate(chi, p, u) - expected).norm() == 0.0);
    }
}

TEST_CASE("residual of the zero field vanishes identically") {
    SteeringProblem prob;
    prob.field = zero_field();
    prob.chi_i = SteeringProblem::fixed(Eigen::Vector2d(0.7, -1.2));
    prob.chi_f = SteeringProblem::fixed(Eigen::Vector2d(0.7, -1.2));
    prob.T = 3.0;
    auto R = assemble_residual(prob);
    Rng rng(24);
    for (int trial = 0; trial < 20; ++trial) {
        Vec z(3);
        z << rng.uniform(0, 2 * M_PI), rng.uniform(0, 2 * M_PI), rng.uniform(0, 1);
        CHECK(R(z).norm() == 0.0);
    }
}

TEST_CASE("zero field solution verifies with exactly zero errors") {
    SteeringProblem prob;
    prob.field = zero_field();
    prob.chi_i = SteeringProblem::fixed(Eigen::Vector2d(1.0, 2.0));
    prob.chi_f = SteeringProblem::fixed(Eigen::Vector2d(1.0, 2.0));
    prob.T = 2.0;
    auto sols = solve_steering(prob, fast_options(3, 5));
    REQUIRE(!sols.empty());
    const auto rep = verify_solution(sols.front(), prob);
    CHECK(rep.terminal_error == 0.0);
    CHECK(rep.junction_error == 0.0);
    CHECK(rep.hamiltonian_violation == 0.0);
}

TEST_CASE("shooting residual matches the fine-step sign-handled rk4 oracle") {
    auto prob = vdp_problem(SteeringProblem::fixed(Eigen::Vector2d(2, 2)),
                            SteeringProblem::fixed(Eigen::Vector2d(0, 0)), 4.0);
    const auto field = vdp_field();
    const auto neg = negated(field);
    // The unstable stretches of this flow amplify integration error by ~50x,
    // so the comparison needs a propagation a couple of digits tighter than
    // the target agreement.
    auto R = assemble_residual(prob, 1e-12);
    const auto arc_rhs = [](const ExtremalField& f, double rate) {
        return [&f, rate](double, const Vec& s) -> Vec {
            return (rate * f.flow(s.head(2), s.tail(2))).eval();
        };
    };
    const auto sw = [&field](const Vec& s) { return field.switch_fn(s.head(2), s.tail(2)); };
    const auto swn = [&neg](const Vec& s) { return neg.switch_fn(s.head(2), s.tail(2)); };

    Rng rng(26);
    for (int trial = 0; trial < 3; ++trial) {
        Vec z(3);
        z << rng.uniform(0, 2 * M_PI), rng.uniform(0, 2 * M_PI), rng.uniform(0.2, 0.8);
        const Vec r = R(z);
        Vec s1(4), s2(4);
        s1 << 2, 2, std::cos(z[0]), std::sin(z[0]);
        s2 << 0, 0, std::cos(z[1]), std::sin(z[1]);
        const Vec e1 =
            oracles::rk4_switching_endpoint(arc_rhs(field, z[2] * 4.0), sw, 0, 1, s1, 1000000);
        const Vec e2 = oracles::rk4_switching_endpoint(arc_rhs(neg, (1 - z[2]) * 4.0), swn, 0, 1,
                                                       s2, 1000000);
        CHECK((r - (e1.head(2) - e2.head(2))).norm() < 1e-7);
    }
}

TEST_CASE("vdp steering: forward-simulated target is recovered") {
    // Build a target reachable by construction: u = +1 from (2,2) for T = 1.
    const auto field = vdp_field();
    OdeProblem p;
    Vec u1(1);
    u1 << 1.0;
    p.rhs = [&](double, const Vec& v) { return field.dynamics(v, u1); };
    p.t0 = 0;
    p.t1 = 1.0;
    p.v0 = Eigen::Vector2d(2, 2);
    p.abs_tol = p.rel_tol = 1e-12;
    const Vec target = integrate_adaptive(p).final_state();

    auto prob = vdp_problem(SteeringProblem::fixed(Eigen::Vector2d(2, 2)),
                            SteeringProblem::fixed(target), 1.0);
    auto opts = fast_options(40, 3);
    auto sols = solve_steering(prob, opts);
    REQUIRE(!sols.empty());
    CHECK(sols.front().residual_norm <= 1e-8);
    CHECK(verify_solution(sols.front(), prob).terminal_error <= 1e-6);
}

TEST_CASE("vdp steering: origin regression case (long)") {
    auto prob = vdp_problem(SteeringProblem::fixed(Eigen::Vector2d(0, 0)),
                            SteeringProblem::fixed(Eigen::Vector2d(2, 2)), 4.0);
    ShootingOptions opts;
    opts.starts = 30;
    opts.seed = 1;
    opts.continue_in_tau = false;
    SolutionPin pin;
    pin.tau = 0.7343;
    opts.pins = {pin};
    auto sols = solve_steering(prob, opts);
    REQUIRE(!sols.empty());
    const SteeringSolution* match = nullptr;
    for (const auto& s : sols)
        if (std::abs(s.tau - 0.7343) <= 0.01) match = &s;
    REQUIRE(match != nullptr);
    CHECK(std::abs(match->concat_time - 2.9373) <= 0.05);
    CHECK(match->residual_norm <= 2e-9);

    const auto rep = verify_solution(*match, prob);
    CHECK(rep.terminal_error <= 1e-6);
    CHECK(rep.junction_error <= 1e-6);
    CHECK(rep.hamiltonian_violation <= 1e-8);

    // Costate normalization is exact by construction.
    CHECK(std::abs(match->p1_0.norm() - 1.0) < 1e-14);
    CHECK(std::abs(match->p2_0.norm() - 1.0) < 1e-14);

    // Junction continuity of the packaged trajectory.
    CHECK((match->trajectory.states.front().head(2) - match->chi_i_resolved).norm() <= 1e-8);

    SUBCASE("Hamiltonian is constant along arcs between switches") {
        const auto& field = prob.field;
        const auto neg = negated(field);
        std::vector<double> breaks = {0.0};
        for (double s : match->arc1.switch_fractions) breaks.push_back(s * match->concat_time);
        breaks.push_back(match->concat_time);
        for (double s : match->arc2.switch_fractions)
            breaks.push_back(prob.T - s * (prob.T - match->concat_time));
        breaks.push_back(prob.T);
        std::sort(breaks.begin(), breaks.end());
        // Evaluate H on each sample; compare within each inter-switch span.
        for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
            double h_min = 1e300, h_max = -1e300;
            for (std::size_t i = 0; i < match->trajectory.times.size(); ++i) {
                const double t = match->trajectory.times[i];
                if (t < breaks[b] + 1e-6 || t > breaks[b + 1] - 1e-6) continue;
                const Vec& s = match->trajectory.states[i];
                const bool fwd = t <= match->concat_time;
                const Vec chi = s.head(2), p = s.tail(2);
                const double h = fwd ? p.dot(field.dynamics(chi, field.maximizer(chi, p)))
                                     : p.dot(neg.dynamics(chi, neg.maximizer(chi, p)));
                h_min = std::min(h_min, h);
                h_max = std::max(h_max, h);
            }
            if (h_min <= h_max) CHECK(h_max - h_min < 1e-7);
        }
    }

    SUBCASE("perturbing tau breaks re-propagation") {
        SteeringSolution bad = *match;
        bad.tau += 0.05;
        bad.concat_time = bad.tau * prob.T;
        const auto bad_rep = verify_solution(bad, prob);
        CHECK(bad_rep.terminal_error > 1e-3);
    }

    SUBCASE("time reversal: the reversed solution verifies for the reversed problem") {
        SteeringProblem rev;
        rev.field = negated(prob.field);
        rev.chi_i = prob.chi_f;
        rev.chi_f = prob.chi_i;
        rev.T = prob.T;

        SteeringSolution rs;
        rs.tau = 1.0 - match->tau;
        rs.concat_time = rev.T - match->concat_time;
        rs.p1_0 = match->p2_0;
        rs.p2_0 = match->p1_0;
        rs.chi_i_resolved = match->chi_f_resolved;
        rs.chi_f_resolved = match->chi_i_resolved;
        rs.junction = match->junction;
        rs.freed_i = match->freed_f;
        rs.freed_f = match->freed_i;
        // The reversed problem's forward arc is the original backward arc,
        // with the same pseudo-time parametrization.
        rs.arc1 = match->arc2;
        rs.arc2 = match->arc1;
        const auto rep_rev = verify_solution(rs, rev);
        CHECK(rep_rev.terminal_error <= 1e-6);
        CHECK(rep_rev.junction_error <= 1e-6);
    }
}

TEST_CASE("vdp steering: free initial component regression (long)") {
    SteeringProblem prob = vdp_problem(BoundarySpec{0.0, std::nullopt},
                                       SteeringProblem::fixed(Eigen::Vector2d(2, 2)), 4.0);
    ShootingOptions opts;
    opts.starts = 30;
    opts.seed = 2;
    opts.continue_in_tau = false;
    SolutionPin pin;
    pin.tau = 0.6313;
    pin.freed_i = {-0.3585};
    opts.pins = {pin};
    auto sols = solve_steering(prob, opts);
    const SteeringSolution* match = nullptr;
    for (const auto& s : sols)
        if (std::abs(s.tau - 0.6313) <= 0.01 && std::abs(s.freed_i[0] + 0.3585) <= 0.01) match = &s;
    REQUIRE(match != nullptr);
    CHECK(verify_solution(*match, prob).terminal_error <= 1e-6);
}

TEST_CASE("solve_steering is deterministic across worker counts") {
    auto prob = vdp_problem(SteeringProblem::fixed(Eigen::Vector2d(0, 0)),
                            SteeringProblem::fixed(Eigen::Vector2d(2, 2)), 4.0);
    ShootingOptions a = fast_options(12, 9);
    a.workers = 1;
    ShootingOptions b = a;
    b.workers = 2;
    const auto sa = solve_steering(prob, a);
    const auto sb = solve_steering(prob, b);
    REQUIRE(sa.size() == sb.size());
    for (std::size_t i = 0; i < sa.size(); ++i) {
        CHECK(sa[i].tau == sb[i].tau);
        CHECK(sa[i].z == sb[i].z);
        CHECK(sa[i].residual_norm == sb[i].residual_norm);
    }
}
