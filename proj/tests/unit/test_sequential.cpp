#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "odefit/error.hpp"
#include "odefit/sequential.hpp"
#include "oracles.hpp"

using namespace odefit;

namespace {

std::vector<DataPairing> exact_pairings(const System& sys, const Domain& dom, std::size_t count, std::uint64_t seed) {
    const auto f = state_rhs(sys);
    std::vector<DataPairing> out;
    for (const auto& x : sample_initial_states(dom, count, SamplingStrategy::uniform, seed)) {
        DataPairing p;
        p.x = x;
        p.xdot = f(x);
        out.push_back(p);
    }
    return out;
}

const Domain kBox({{0, 2}, {0, 2}});

}  // namespace

TEST_CASE("gamma schedules") {
    CHECK(GammaSchedule::parse("zero") == GammaSchedule::zero());
    const auto c = GammaSchedule::parse("constant(0.25)");
    CHECK(c.kind == GammaSchedule::Kind::constant);
    CHECK(c(7) == 0.25);
    CHECK(GammaSchedule::parse(c.tag()) == c);
    CHECK_THROWS_AS(GammaSchedule::parse("linear(1)"), std::invalid_argument);
    CHECK_THROWS_AS(GammaSchedule::constant(-1.0), std::invalid_argument);
}

TEST_CASE("single step by hand") {
    const BasisSpec basis(BasisKind::legendre, 0, kBox);
    SaState s = SaState::zeros(1, 2);
    DataPairing p;
    p.x = Point::Constant(2, 1.0);
    p.xdot = Point::Constant(2, 2.0);
    const SaState n = sa_step(s, p, basis);
    CHECK(n.coeffs(0, 0) == 2.0);
    CHECK(n.coeffs(0, 1) == 2.0);
    CHECK(n.k == 1);
    CHECK(s.k == 0);
    CHECK(s.coeffs(0, 0) == 0.0);
}

TEST_CASE("gamma equal to the basis norm halves the update") {
    const BasisSpec basis(BasisKind::monomial, 2, kBox);
    DataPairing p;
    p.x = Point::Constant(2, 0.7);
    p.xdot = Point::Constant(2, -1.3);
    const auto phi = basis.eval(p.x);
    double sq = 0;
    for (double v : phi) sq += v * v;
    const SaState z = sa_step(SaState::zeros(basis.size(), 2), p, basis);
    const SaState h = sa_step(SaState::zeros(basis.size(), 2, 0, GammaSchedule::constant(sq)), p, basis);
    CHECK((h.coeffs - 0.5 * z.coeffs).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("zero-gamma steps interpolate the pairing") {
    const BasisSpec basis(BasisKind::legendre, 4, kBox);
    const auto ps = exact_pairings(builtin_system("limit-cycle"), kBox, 200, 3);
    SaState s = SaState::zeros(basis.size(), 2);
    for (const auto& p : ps) {
        s = sa_step(s, p, basis);
        CHECK((s.coeffs.transpose() * Eigen::Map<const Eigen::VectorXd>(basis.eval(p.x).data(), static_cast<Eigen::Index>(basis.size())) - p.xdot)
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
    }
}

TEST_CASE("orthogonal stream terminates exactly") {
    // Rows of the basis matrix at Gauss nodes are mutually orthogonal.
    const BasisSpec basis(BasisKind::legendre, 2, {{-1, 1}});
    const double r = std::sqrt(0.6);
    auto f = [](double x) { return 0.5 - x + 2.0 * x * x; };
    SaState s = SaState::zeros(3, 1);
    for (double x : {-r, 0.0, r}) {
        DataPairing p;
        p.x = Point::Constant(1, x);
        p.xdot = Point::Constant(1, f(x));
        s = sa_step(s, p, basis);
    }
    for (double x : {-0.9, -0.2, 0.4, 1.0}) {
        const auto phi = basis.eval(Point::Constant(1, x));
        double v = 0;
        for (int j = 0; j < 3; ++j) v += s.coeffs(j, 0) * phi[static_cast<std::size_t>(j)];
        CHECK(std::abs(v - f(x)) < 1e-13);
    }
}

TEST_CASE("stream order") {
    const auto a = stream_order(10, 35, 4, true);
    CHECK(a.size() == 35);
    CHECK(a == stream_order(10, 35, 4, true));
    std::vector<int> seen(10, 0);
    for (std::size_t i = 0; i < 10; ++i) ++seen[a[i]];
    for (int c : seen) CHECK(c == 1);
    CHECK(stream_order(10, 35, 4, false).size() == 10);
    CHECK(stream_order(10, 0, 4).size() == 10);
    CHECK(std::vector<std::size_t>(a.begin(), a.begin() + 10) != std::vector<std::size_t>(a.begin() + 10, a.begin() + 20));
    CHECK_THROWS_AS(stream_order(0, 5, 1), std::invalid_argument);
}

TEST_CASE("saddle stream converges and history bookkeeping") {
    const System sys = builtin_system("saddle");
    const BasisSpec basis(BasisKind::monomial, 1, kBox);
    const auto ps = exact_pairings(sys, kBox, 500, 6);
    const auto mon = make_monitor(sample_initial_states(kBox, 2000, SamplingStrategy::uniform, 7), state_rhs(sys), {}, 10);
    const auto order = stream_order(ps.size(), 10000, 8);
    const auto res = sa_run(ps, order, basis, SaState::zeros(basis.size(), 2), &mon);
    REQUIRE(res.history.size() == 10000 / 10);
    CHECK(res.history.back().f_total < 1e-6);
    CHECK(res.state.k == 10000);

    // Smoothed over 100-step windows the error never increases, and log error has a negative slope.
    std::vector<double> steps, logs, window;
    for (std::size_t i = 0; i < res.history.size(); i += 10) {
        double m = 0;
        for (std::size_t j = i; j < i + 10; ++j) m += res.history[j].f_total;
        window.push_back(m / 10);
    }
    std::size_t floor_at = window.size();
    for (std::size_t i = 0; i < window.size(); ++i)
        if (window[i] < 1e-13) {
            floor_at = i;
            break;
        }
    for (std::size_t i = 1; i < floor_at; ++i) CHECK(window[i] <= window[i - 1]);
    for (std::size_t i = 0; i < floor_at; ++i) {
        steps.push_back(static_cast<double>(i));
        logs.push_back(std::log(window[i]));
    }
    CHECK(oracle::slope(steps, logs) < 0.0);

    const auto again = sa_run(ps, order, basis, SaState::zeros(basis.size(), 2), &mon);
    for (std::size_t i = 0; i < res.history.size(); ++i) CHECK(again.history[i].f_total == res.history[i].f_total);
    CHECK(again.state.coeffs == res.state.coeffs);
}

TEST_CASE("streamed constraint and csv output") {
    const System sys = builtin_system("network");
    const Domain dom({{-2, 2}, {-0.2, 0.2}});
    const BasisSpec basis(BasisKind::legendre, 3, dom);
    std::vector<DataPairing> ps;
    const auto f = state_rhs(sys);
    for (const auto& x : sample_initial_states(dom, 100, SamplingStrategy::uniform, 1)) {
        DataPairing p;
        p.x = x;
        p.xdot = f(x);
        p.v = algebraic_state(sys, x);
        ps.push_back(p);
    }
    const auto mon = make_monitor(sample_initial_states(dom, 100, SamplingStrategy::uniform, 2), f,
                                  [&](const State& u) { return algebraic_state(sys, u); }, 50);
    const auto order = stream_order(ps.size(), 200, 3);
    const auto res = sa_run(ps, order, basis, SaState::zeros(basis.size(), 2, 2), &mon);
    REQUIRE(res.history.size() == 4);
    CHECK(res.history.back().g_component.size() == 2);
    std::ostringstream os;
    write_history_csv(os, res.history);
    const std::string csv = os.str();
    CHECK(csv.rfind("step,component,relative_l2_error\n", 0) == 0);
    CHECK(csv.find("\n200,g_2,") != std::string::npos);
    CHECK(csv.find("\n200,f,") != std::string::npos);

    auto no_v = ps;
    no_v[0].v.reset();
    const std::vector<std::size_t> first{0};
    CHECK_THROWS_AS(sa_run(no_v, first, basis, SaState::zeros(basis.size(), 2, 2), nullptr), DimensionError);
}

TEST_CASE("monitor without truth records update magnitudes") {
    const BasisSpec basis(BasisKind::monomial, 1, kBox);
    const auto ps = exact_pairings(builtin_system("saddle"), kBox, 50, 1);
    SaMonitor mon;
    mon.cadence = 25;
    const auto order = stream_order(ps.size(), 100, 1);
    const auto res = sa_run(ps, order, basis, SaState::zeros(basis.size(), 2), &mon);
    REQUIRE(res.history.size() == 4);
    CHECK(res.history[1].update_norm > 0.0);
    std::ostringstream os;
    write_history_csv(os, res.history);
    CHECK(os.str().find(",update,") != std::string::npos);
}

TEST_CASE("non-finite updates abort with the step index") {
    const BasisSpec basis(BasisKind::monomial, 1, kBox);
    auto ps = exact_pairings(builtin_system("saddle"), kBox, 10, 1);
    ps[3].xdot[0] = std::numeric_limits<double>::infinity();
    const std::vector<std::size_t> order{0, 1, 2, 3, 4};
    try {
        sa_run(ps, order, basis, SaState::zeros(basis.size(), 2), nullptr);
        FAIL("expected blow-up");
    } catch (const BlowUpError& e) {
        CHECK(e.step() == 4);
    }
}
