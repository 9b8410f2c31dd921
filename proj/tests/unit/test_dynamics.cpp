#include <cmath>

#include "doctest.h"
#include "odefit/catalog.hpp"
#include "odefit/dynamics.hpp"
#include "odefit/error.hpp"

using namespace odefit;

namespace {

State st(std::initializer_list<double> v) {
    State s(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) s[i++] = x;
    return s;
}

// Samples inside a box used for DAE residual checks.
std::vector<State> box_samples(const std::vector<Interval>& box, std::size_t n) {
    return sample_initial_states(Domain(box), n, SamplingStrategy::uniform, 17);
}

}  // namespace

TEST_CASE("rk4 on exponential decay") {
    const RhsFn f = [](const State& u) -> State { return -u; };
    const auto tr = integrate_rk4(f, st({1.0}), 0.005, 1, 10);
    REQUIRE(tr.size() == 2);
    CHECK(tr[0][0] == 1.0);
    CHECK(std::abs(tr[1][0] - std::exp(-0.005)) < 1e-12);
}

TEST_CASE("rk4 is fourth order") {
    const RhsFn f = [](const State& u) -> State { return -u; };
    const double exact = std::exp(-2.0);
    const double e1 = std::abs(integrate_rk4(f, st({1.0}), 2.0, 1, 8).back()[0] - exact);
    const double e2 = std::abs(integrate_rk4(f, st({1.0}), 2.0, 1, 16).back()[0] - exact);
    const double ratio = e1 / e2;
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("rk4 conserves the harmonic oscillator energy") {
    const RhsFn f = [](const State& u) { return st({u[1], -u[0]}); };
    const auto tr = integrate_rk4(f, st({1.0, 0.0}), 0.005, 2000, 10);
    double drift = 0;
    for (const auto& u : tr) drift = std::max(drift, std::abs(u.squaredNorm() - 1.0));
    CHECK(drift < 1e-10);
}

TEST_CASE("rk4 argument checks and blow-up") {
    const RhsFn f = [](const State& u) -> State { return u.array().square().matrix(); };
    CHECK_THROWS_AS(integrate_rk4(f, st({1.0}), 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(integrate_rk4(f, st({1.0}), 0.1, 1, 0), std::invalid_argument);
    try {
        integrate_rk4(f, st({1.0}), 0.5, 100, 1);
        FAIL("expected blow-up");
    } catch (const BlowUpError& e) {
        CHECK(e.step() >= 1);
        CHECK(e.step() <= 100);
    }
}

TEST_CASE("saddle equilibrium is a fixed point") {
    const auto f = state_rhs(builtin_system("saddle"));
    const auto tr = integrate_rk4(f, st({1.0, 1.0}), 0.01, 50);
    for (const auto& u : tr) CHECK((u - st({1.0, 1.0})).norm() == 0.0);
}

TEST_CASE("builtin values") {
    CHECK((state_rhs(builtin_system("saddle"))(st({0, 0})) - st({-2, 0})).norm() == 0.0);
    CHECK((state_rhs(builtin_system("duffing"))(st({1, 0})) - st({0, -1 - 1e-4})).norm() < 1e-15);
    bool found = false;
    for (const auto& e : catalog_entries()) {
        if (e.name != "toggle") continue;
        for (const auto& [k, v] : e.parameters)
            if (k == "alpha1") {
                CHECK(v == 156.25);
                found = true;
            }
    }
    CHECK(found);
    CHECK_THROWS_AS(builtin_system("lorenz"), std::invalid_argument);
    CHECK(builtin_names().size() == catalog_entries().size());
}

TEST_CASE("true coefficients reproduce polynomial right-hand sides") {
    for (const auto& name : builtin_names()) {
        const System sys = builtin_system(name);
        const auto* ode = std::get_if<OdeSystem>(&sys);
        if (!ode || !ode->true_coefficients) continue;
        CAPTURE(name);
        std::vector<Interval> box(static_cast<std::size_t>(ode->dim), Interval{-3, 3});
        for (const auto& u : box_samples(box, 1000)) {
            const State a = ode->rhs(u), b = ode->true_coefficients->evaluate(u);
            CHECK((a - b).norm() <= 1e-12 * std::max(1.0, a.norm()));
        }
    }
}

TEST_CASE("analytic jacobians agree with finite differences") {
    for (const auto& name : {"duffing", "competing-species", "limit-cycle", "pendulum", "center"}) {
        CAPTURE(name);
        const System sys = builtin_system(name);
        const auto f = state_rhs(sys);
        const auto jac = state_jacobian(sys);
        for (const auto& u : box_samples({{-2, 2}, {-2, 2}}, 50)) {
            CHECK((jac(u) - numerical_jacobian(f, u)).norm() <= 1e-6 * std::max(1.0, jac(u).norm()));
        }
    }
}

TEST_CASE("dae constraint solves satisfy the implicit equations") {
    struct Case {
        const char* name;
        std::vector<Interval> box;
    };
    const std::vector<Case> cases = {
        {"network", {{-2, 2}, {-0.2, 0.2}}},
        {"toggle", {{0, 160}, {0, 16}}},
        {"batch-reactor", {{0.6, 1.6}, {6.5, 8.5}, {0, 0.7}, {0, 0.3}, {0, 0.3}, {0, 0.02}}},
    };
    for (const auto& c : cases) {
        CAPTURE(c.name);
        const System sys = builtin_system(c.name);
        const auto& dae = std::get<DaeSystem>(sys);
        CHECK(algebraic_dim(sys) == dae.dim_v);
        for (const auto& u : box_samples(c.box, 1000)) {
            const State v = dae.g(u);
            CHECK(v.size() == dae.dim_v);
            CHECK(dae.G(u, v).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((dae.reduced().rhs(u) - dae.F(u, v)).norm() == 0.0);
        }
    }
}

TEST_CASE("safeguarded newton falls back to bisection") {
    // Newton from 0 on atan overshoots wildly; the bracket keeps it safe.
    const double r = safeguarded_newton([](double x) { return std::atan(x - 3.0); },
                                        [](double x) { return 1.0 / (1.0 + (x - 3.0) * (x - 3.0)); }, -50, 50, -40);
    CHECK(std::abs(r - 3.0) < 1e-12);
    CHECK_THROWS_AS(safeguarded_newton([](double x) { return x * x + 1; }, [](double x) { return 2 * x; }, -1, 1, 0),
                    std::domain_error);
}

TEST_CASE("learned system evaluation") {
    const auto base = monomial_coefficients(2, {{-1, 1}, {-1, 1}}, 2,
                                            {{{0, 0}, {-0.01695, -0.0160}},
                                             {{1, 0}, {1.0217, 0.0086}},
                                             {{0, 1}, {0.0350, 0.50914}},
                                             {{2, 0}, {-1.0166, -0.0016}},
                                             {{1, 1}, {-1.0164, -0.7544}},
                                             {{0, 2}, {-0.0128, -0.2500}}});
    LearnedSystem ls{base, std::nullopt};
    const auto at0 = eval_learned(ls, st({0, 0}));
    CHECK(at0.xdot[0] == doctest::Approx(-0.01695));
    CHECK(at0.xdot[1] == doctest::Approx(-0.0160));
    CHECK_FALSE(at0.y);
    LearnedSystem twice{CoefficientSet(base.basis, 2.0 * base.coeffs), std::nullopt};
    for (const auto& x : box_samples({{-1, 1}, {-1, 1}}, 100)) {
        CHECK((eval_learned(twice, x).xdot - 2.0 * eval_learned(ls, x).xdot).norm() == 0.0);
        const auto phi = base.basis.eval(x);
        const Eigen::Map<const Eigen::VectorXd> p(phi.data(), static_cast<Eigen::Index>(phi.size()));
        CHECK((ls.rhs(x) - base.coeffs.transpose() * p).norm() < 1e-14);
    }
    CHECK_THROWS_AS(eval_learned(ls, st({1, 2, 3})), DimensionError);
    LearnedSystem with_g{base, CoefficientSet(base.basis, base.coeffs.leftCols(1))};
    const auto v = eval_learned(with_g, st({0.5, 0.5}));
    REQUIRE(v.y);
    CHECK((*v.y)[0] == doctest::Approx(v.xdot[0]));
}

TEST_CASE("catalog manifest lists every system") {
    const auto m = catalog_manifest();
    CHECK(m.at("format") == "odefit-catalog");
    REQUIRE(m.at("systems").size() == builtin_names().size());
    for (const auto& e : m.at("systems")) CHECK_NOTHROW(builtin_system(e.at("name").get<std::string>()));
}
