#include "odefit/dynamics.hpp"

#include <cmath>

#include "odefit/error.hpp"

namespace odefit {

OdeSystem DaeSystem::reduced() const {
    OdeSystem out;
    out.name = name;
    out.dim = dim_u;
    out.description = description;
    out.rhs = [F = F, g = g](const State& u) { return F(u, g(u)); };
    return out;
}

const std::string& system_name(const System& s) {
    return std::visit([](const auto& sys) -> const std::string& { return sys.name; }, s);
}

int state_dim(const System& s) {
    if (const auto* o = std::get_if<OdeSystem>(&s)) return o->dim;
    return std::get<DaeSystem>(s).dim_u;
}

int algebraic_dim(const System& s) {
    if (const auto* d = std::get_if<DaeSystem>(&s)) return d->dim_v;
    return 0;
}

RhsFn state_rhs(const System& s) {
    if (const auto* o = std::get_if<OdeSystem>(&s)) return o->rhs;
    return std::get<DaeSystem>(s).reduced().rhs;
}

State algebraic_state(const System& s, const State& u) {
    if (const auto* d = std::get_if<DaeSystem>(&s)) return d->g(u);
    return State();
}

Eigen::MatrixXd numerical_jacobian(const RhsFn& f, const State& u) {
    const auto d = u.size();
    const State f0 = f(u);
    Eigen::MatrixXd J(f0.size(), d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(u[k]));
        State up = u, um = u;
        up[k] += h;
        um[k] -= h;
        J.col(k) = (f(up) - f(um)) / (2.0 * h);
    }
    return J;
}

JacobianFn state_jacobian(const System& s) {
    if (const auto* o = std::get_if<OdeSystem>(&s); o && o->jacobian) return o->jacobian;
    return [f = state_rhs(s)](const State& u) { return numerical_jacobian(f, u); };
}

Trajectory integrate_rk4(const RhsFn& rhs, const State& u0, double dt, std::size_t steps, int substeps) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_rk4: dt must be positive");
    if (substeps < 1) throw std::invalid_argument("integrate_rk4: substeps must be >= 1");
    Trajectory out;
    out.reserve(steps + 1);
    out.push_back(u0);
    const double h = dt / substeps;
    State u = u0;
    for (std::size_t j = 1; j <= steps; ++j) {
        for (int s = 0; s < substeps; ++s) {
            const State k1 = rhs(u);
            const State k2 = rhs(u + 0.5 * h * k1);
            const State k3 = rhs(u + 0.5 * h * k2);
            const State k4 = rhs(u + h * k3);
            u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!u.allFinite()) throw BlowUpError("integrate_rk4: state became non-finite", j);
        out.push_back(u);
    }
    return out;
}

RhsFn LearnedSystem::rhs_fn() const {
    return [c = coeffs](const State& x) { return c.evaluate(x); };
}

LearnedValue eval_learned(const LearnedSystem& learned, const State& x) {
    if (x.size() != learned.dim()) {
        throw DimensionError("eval_learned: point has dimension " + std::to_string(x.size()) + ", system has " +
                             std::to_string(learned.dim()));
    }
    LearnedValue v;
    v.xdot = learned.coeffs.evaluate(x);
    if (learned.constraint) v.y = learned.constraint->evaluate(x);
    return v;
}

}  // namespace odefit
