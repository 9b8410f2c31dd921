#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "odefit/coefficients.hpp"

namespace odefit {

using State = Eigen::VectorXd;
using RhsFn = std::function<State(const State&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const State&)>;

// Autonomous system du/dt = f(u).
struct OdeSystem {
    std::string name;
    int dim = 0;
    RhsFn rhs;
    JacobianFn jacobian;  // empty: use finite differences
    std::optional<CoefficientSet> true_coefficients;
    std::optional<double> lipschitz_hint;
    std::string description;
};

// Semi-explicit index-1 DAE: du/dt = F(u, v), 0 = G(u, v), with the
// constraint solved explicitly as v = g(u).
struct DaeSystem {
    std::string name;
    int dim_u = 0;
    int dim_v = 0;
    std::function<State(const State&, const State&)> F;
    std::function<State(const State&, const State&)> G;
    std::function<State(const State&)> g;
    std::string description;

    // f(u) = F(u, g(u)).
    OdeSystem reduced() const;
};

using System = std::variant<OdeSystem, DaeSystem>;

const std::string& system_name(const System& s);
int state_dim(const System& s);
int algebraic_dim(const System& s);  // 0 for plain ODEs
RhsFn state_rhs(const System& s);
// v = g(u); empty vector for ODEs.
State algebraic_state(const System& s, const State& u);
JacobianFn state_jacobian(const System& s);

// Central finite-difference Jacobian with relative step.
Eigen::MatrixXd numerical_jacobian(const RhsFn& f, const State& u);

using Trajectory = std::vector<State>;

// Classical RK4; each of the `steps` output intervals of length dt is covered
// by `substeps` internal steps. Returns steps+1 states, the first being u0.
Trajectory integrate_rk4(const RhsFn& rhs, const State& u0, double dt, std::size_t steps, int substeps = 10);

// f~ given by coefficients, plus the optional algebraic map g~ for DAEs.
struct LearnedSystem {
    CoefficientSet coeffs;
    std::optional<CoefficientSet> constraint;

    int dim() const { return coeffs.basis.dim(); }
    State rhs(const State& x) const { return coeffs.evaluate(x); }
    RhsFn rhs_fn() const;
};

struct LearnedValue {
    State xdot;
    std::optional<State> y;
};

LearnedValue eval_learned(const LearnedSystem& learned, const State& x);

std::vector<std::string> builtin_names();
// Throws std::invalid_argument listing the catalog for unknown names.
System builtin_system(const std::string& name);

}  // namespace odefit
