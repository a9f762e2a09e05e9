#include "steerkit/vdp.hpp"

#include <stdexcept>

namespace steerkit {

ExtremalField vdp_field() {
    ExtremalField field;
    field.state_dim = 2;
    field.control_dim = 1;
    field.dynamics = [](const Vec& chi, const Vec& u) -> Vec {
        Vec d(2);
        d[0] = chi[1];
        d[1] = (1.0 - chi[0] * chi[0]) * chi[1] - chi[0] + u[0];
        return d;
    };
    field.maximizer = [](const Vec&, const Vec& p) -> Vec {
        Vec u(1);
        u[0] = p[1] >= 0.0 ? 1.0 : -1.0;
        return u;
    };
    field.costate_rate = [](const Vec& chi, const Vec& p, const Vec&) -> Vec {
        Vec d(2);
        d[0] = p[1] * (2.0 * chi[0] * chi[1] + 1.0);
        d[1] = -p[0] - p[1] * (1.0 - chi[0] * chi[0]);
        return d;
    };
    field.switch_fn = [](const Vec&, const Vec& p) -> double { return p[1]; };
    field.control_grid = [](int n) -> std::vector<Vec> {
        std::vector<Vec> grid;
        for (int i = 0; i < n; ++i) {
            Vec u(1);
            u[0] = n > 1 ? -1.0 + 2.0 * i / (n - 1) : 0.0;
            grid.push_back(u);
        }
        return grid;
    };
    return field;
}

Vec vdp_default_chi_i() {
    Vec chi(2);
    chi << 2.0, 2.0;
    return chi;
}

SteeringProblem vdp_problem(const BoundarySpec& chi_i, const BoundarySpec& chi_f, double T) {
    if (chi_i.size() != 2 || chi_f.size() != 2)
        throw std::invalid_argument("vdp_problem: boundaries must have 2 components");
    SteeringProblem problem;
    problem.field = vdp_field();
    problem.chi_i = chi_i;
    problem.chi_f = chi_f;
    problem.T = T;
    return problem;
}

}  // namespace steerkit
