#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "odefit/error.hpp"
#include "odefit/regression.hpp"
#include "oracles.hpp"

using namespace odefit;

namespace {

Eigen::MatrixXd random_matrix(int m, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd A(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = g(rng);
    return A;
}

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

ModelMatrix column_model(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    ModelMatrix mm;
    mm.basis = BasisSpec(BasisKind::monomial, 1, std::vector<Interval>(static_cast<std::size_t>(A.cols() - 1), {0, 1}));
    mm.A = A;
    mm.Xdot = b;
    return mm;
}

}  // namespace

TEST_CASE("assembly") {
    const BasisSpec basis(BasisKind::monomial, 2, {{0, 2}, {0, 2}});
    const auto ps = exact_pairings(builtin_system("saddle"), Domain({{0, 2}, {0, 2}}), 3, 1);
    const auto mm = assemble(ps, basis);
    CHECK(mm.A.rows() == 3);
    CHECK(mm.A.cols() == 6);
    CHECK(mm.Xdot.rows() == 3);
    CHECK(mm.Xdot.cols() == 2);
    CHECK_FALSE(mm.V);
    for (int i = 0; i < 3; ++i) {
        const auto row = basis.eval(ps[static_cast<std::size_t>(i)].x);
        for (int j = 0; j < 6; ++j) CHECK(std::abs(mm.A(i, j) - row[static_cast<std::size_t>(j)]) <= 1e-14);
    }
    std::vector<DataPairing> rev(ps.rbegin(), ps.rend());
    const auto mr = assemble(rev, basis);
    for (int i = 0; i < 3; ++i) {
        CHECK(mr.A.row(i) == mm.A.row(2 - i));
        CHECK(mr.Xdot.row(i) == mm.Xdot.row(2 - i));
    }
    CHECK_THROWS_AS(assemble({}, basis), std::invalid_argument);
    auto wrong = ps;
    wrong[1].x = Point::Zero(3);
    CHECK_THROWS_AS(assemble(wrong, basis), DimensionError);
}

TEST_CASE("l2 basics") {
    Eigen::MatrixXd A(2, 1);
    A << 1, 1;
    Eigen::VectorXd b(2);
    b << 1, 3;
    CHECK(solve_l2(A, b, {})(0, 0) == doctest::Approx(2.0));
    // Rank deficient: minimum-norm solution splits the weight evenly.
    Eigen::MatrixXd R(3, 2);
    R << 1, 1, 2, 2, 3, 3;
    Eigen::VectorXd y(3);
    y << 2, 4, 6;
    std::vector<FitDiagnostics> diag;
    const Eigen::MatrixXd c = solve_l2(R, y, {}, &diag);
    CHECK(c(0, 0) == doctest::Approx(1.0));
    CHECK(c(1, 0) == doctest::Approx(1.0));
    REQUIRE(diag.size() == 1);
    CHECK(diag[0].rank == 1);
    Eigen::MatrixXd bad = A;
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(solve_l2(bad, b, {}), std::domain_error);
}

TEST_CASE("l2 recovers exact polynomial systems") {
    for (const char* name : {"competing-species", "limit-cycle", "duffing"}) {
        CAPTURE(name);
        const System sys = builtin_system(name);
        const auto& truth = *std::get<OdeSystem>(sys).true_coefficients;
        const int n = truth.basis.degree();
        const BasisSpec basis(BasisKind::monomial, n, {{-2, 2}, {-2, 2}});
        const auto mm = assemble(exact_pairings(sys, Domain({{-2, 2}, {-2, 2}}), 60, 3), basis);
        const auto cs = fit_l2(mm);
        CHECK((mm.A * cs.coeffs - mm.Xdot).norm() < 1e-10);
        for (std::size_t j = 0; j < basis.size(); ++j) {
            const std::size_t k = truth.basis.find(basis.indices()[j]);
            for (int l = 0; l < 2; ++l) {
                const double expect = k < truth.basis.size() ? truth.coeffs(static_cast<Eigen::Index>(k), l) : 0.0;
                CHECK(std::abs(cs.coeffs(static_cast<Eigen::Index>(j), l) - expect) < 1e-8);
            }
        }
    }
}

TEST_CASE("l2 residual is orthogonal to the column space") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd A = random_matrix(40, 7, rng);
        const Eigen::VectorXd b = random_matrix(40, 1, rng);
        const Eigen::VectorXd c = solve_l2(A, b, {});
        const Eigen::VectorXd r = A * c - b;
        CHECK((A.transpose() * r).cwiseAbs().maxCoeff() < 1e-8 * A.norm() * b.norm());
    }
}

TEST_CASE("lad basics") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Ones(3, 1);
    Eigen::VectorXd b(3);
    b << 1, 2, 100;
    const auto res = solve_lad(A, b, {});
    CHECK(res.c[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(res.diagnostics.objective_gap < 1e-9);
}

TEST_CASE("lad matches the exact vertex oracle on random instances") {
    std::mt19937_64 rng(2718);
    for (int trial = 0; trial < 50; ++trial) {
        CAPTURE(trial);
        const Eigen::MatrixXd A = random_matrix(20, 4, rng);
        Eigen::VectorXd b = random_matrix(20, 1, rng);
        for (int i = 0; i < 3; ++i) b[static_cast<Eigen::Index>(rng() % 20)] += 10.0;
        const double exact = oracle::lad_vertex_enumeration(A, b);
        const auto res = solve_lad(A, b, {});
        const double got = (A * res.c - b).lpNorm<1>();
        CHECK((got - exact) / exact < 1e-6);
        CHECK(got >= exact * (1 - 1e-12));
    }
}

TEST_CASE("irls never increases the smoothed objective") {
    std::mt19937_64 rng(31);
    L1Options o;
    o.polish = false;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd A = random_matrix(30, 5, rng);
        Eigen::VectorXd b = random_matrix(30, 1, rng);
        b[3] += 8.0;
        const auto res = solve_lad(A, b, o);
        for (std::size_t k = 1; k < res.smoothed_objective.size(); ++k)
            CHECK(res.smoothed_objective[k] <= res.smoothed_objective[k - 1] * (1 + 1e-12));
    }
}

TEST_CASE("irls weighted normal equations hold at the iterate") {
    std::mt19937_64 rng(32);
    L1Options o;
    o.polish = false;
    const Eigen::MatrixXd A = random_matrix(25, 3, rng);
    const Eigen::VectorXd b = random_matrix(25, 1, rng);
    const auto res = solve_lad(A, b, o);
    const Eigen::VectorXd r = A * res.c - b;
    // Gradient of the Huber-smoothed objective vanishes up to the stagnation tolerance.
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
    for (int i = 0; i < 25; ++i) g += A.row(i).transpose() * (r[i] / std::max(std::abs(r[i]), o.smoothing));
    CHECK(g.cwiseAbs().maxCoeff() < 1e-3 * A.cwiseAbs().sum());
}

TEST_CASE("lad duality gap certifies the optimum") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd A = random_matrix(20, 4, rng);
    const Eigen::VectorXd b = random_matrix(20, 1, rng);
    const double exact = oracle::lad_vertex_enumeration(A, b);
    const Eigen::VectorXd c0 = Eigen::VectorXd::Zero(4);
    const double gap0 = lad_duality_gap(A, b, c0);
    CHECK(gap0 >= b.lpNorm<1>() - exact - 1e-9);
    const auto res = solve_lad(A, b, {});
    CHECK(lad_duality_gap(A, b, res.c) < 1e-8 * exact);
}

TEST_CASE("smoothed l1 is the huber function") {
    Eigen::VectorXd r(3);
    r << 2.0, -1e-9, 0.0;
    CHECK(smoothed_l1(r, 1e-8) == doctest::Approx(2.0 + 0.5 * (1e-18 / 1e-8 + 1e-8) + 0.5e-8).epsilon(1e-15));
}

TEST_CASE("lasso reduces to l2 at zero penalty") {
    std::mt19937_64 rng(8);
    const Eigen::MatrixXd A = random_matrix(30, 6, rng);
    const Eigen::VectorXd b = random_matrix(30, 1, rng);
    const Eigen::VectorXd c0 = solve_lasso(A, b, 0.0, {});
    const Eigen::VectorXd c2 = solve_l2(A, b, {});
    CHECK((c0 - c2).cwiseAbs().maxCoeff() < 1e-8);
    const double lmax = (A.transpose() * b).cwiseAbs().maxCoeff();
    // Slightly above the threshold so rounding in A'b cannot leave a last-bit remainder.
    CHECK(solve_lasso(A, b, lmax * (1 + 1e-12), {}).cwiseAbs().maxCoeff() == 0.0);
    CHECK(solve_lasso(A, b, 2 * lmax, {}).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(solve_lasso(A, b, -1.0, {}), std::invalid_argument);
}

TEST_CASE("lasso on orthonormal designs is soft thresholding") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(25, 6, rng)).householderQ() *
                                  Eigen::MatrixXd::Identity(25, 6);
        const Eigen::VectorXd b = random_matrix(25, 1, rng);
        const Eigen::VectorXd z = Q.transpose() * b;
        for (double lambda : {0.01, 0.1, 0.5}) {
            FitDiagnostics diag;
            const Eigen::VectorXd c = solve_lasso(Q, b, lambda, {}, &diag);
            for (int j = 0; j < 6; ++j) CHECK(std::abs(c[j] - oracle::soft_threshold(z[j], lambda)) < 1e-8);
            CHECK(diag.converged);
        }
    }
}

TEST_CASE("solvers are invariant under row permutation") {
    std::mt19937_64 rng(10);
    const Eigen::MatrixXd A = random_matrix(30, 4, rng);
    const Eigen::VectorXd b = random_matrix(30, 1, rng);
    std::vector<int> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd Ap(30, 4);
    Eigen::VectorXd bp(30);
    for (int i = 0; i < 30; ++i) {
        Ap.row(i) = A.row(perm[static_cast<std::size_t>(i)]);
        bp[i] = b[perm[static_cast<std::size_t>(i)]];
    }
    CHECK((solve_l2(A, b, {}) - solve_l2(Ap, bp, {})).norm() < 1e-10);
    CHECK((solve_lasso(A, b, 0.3, {}) - solve_lasso(Ap, bp, 0.3, {})).norm() < 1e-7);
    const auto l1 = solve_lad(A, b, {}), l1p = solve_lad(Ap, bp, {});
    CHECK(std::abs((A * l1.c - b).lpNorm<1>() - (Ap * l1p.c - bp).lpNorm<1>()) < 1e-9);
}

TEST_CASE("fit dispatch and diagnostics") {
    std::mt19937_64 rng(12);
    const Eigen::MatrixXd A = random_matrix(20, 3, rng);
    const Eigen::VectorXd b = random_matrix(20, 1, rng);
    const auto mm = column_model(A, b);
    SolverChoice s;
    s.kind = SolverChoice::Kind::l1;
    const auto cs = fit(mm, s);
    REQUIRE(cs.diagnostics.size() == 1);
    CHECK(cs.diagnostics[0].residual_norm == doctest::Approx((A * cs.coeffs - b).lpNorm<1>()));
    const auto cl2 = fit_l2(mm);
    CHECK(cl2.diagnostics[0].sigma_max >= cl2.diagnostics[0].sigma_min);
    CHECK(cl2.diagnostics[0].sigma_min > 0.0);
    CHECK(parse_solver_kind("lasso") == SolverChoice::Kind::lasso);
    CHECK(to_string(SolverChoice::Kind::l1) == "l1");
    CHECK_THROWS_AS(parse_solver_kind("ridge"), std::invalid_argument);
}

TEST_CASE("constraint map recovers a polynomial map exactly") {
    const BasisSpec basis(BasisKind::legendre, 3, {{-1, 2}, {0, 1}});
    const auto pts = sample_initial_states(Domain({{-1, 2}, {0, 1}}), 50, SamplingStrategy::halton, 1);
    Eigen::MatrixXd U(50, 2), V(50, 2);
    for (int i = 0; i < 50; ++i) {
        const auto& x = pts[static_cast<std::size_t>(i)];
        U.row(i) = x.transpose();
        V(i, 0) = 1.0 - x[0] * x[0] * x[1];
        V(i, 1) = x[1] * x[1] * x[1] + 2.0 * x[0];
    }
    for (auto kind : {SolverChoice::Kind::l2, SolverChoice::Kind::l1}) {
        SolverChoice s;
        s.kind = kind;
        const auto g = fit_constraint_map(U, V, basis, s);
        for (int i = 0; i < 50; ++i) CHECK((g.evaluate(U.row(i).transpose()) - V.row(i).transpose()).norm() < 1e-8);
    }
    CHECK_THROWS_AS(fit_constraint_map(U, V.topRows(10), basis, {}), DimensionError);
}

TEST_CASE("single trajectory on the eigen-line is ill posed") {
    const System sys = builtin_system("nodal-sink");
    const auto f = state_rhs(sys);
    State u0(2);
    u0 << 0.5, 1.5;  // on u2 = u1 + 1
    const auto tr = integrate_rk4(f, u0, 0.005, 40);
    std::vector<DataPairing> one;
    for (std::size_t j = 1; j + 1 < tr.size(); ++j) {
        DataPairing p;
        p.x = tr[j];
        p.xdot = (tr[j + 1] - tr[j - 1]) / 0.01;
        one.push_back(p);
    }
    const BasisSpec basis(BasisKind::monomial, 1, {{0, 2}, {0, 2}});
    CHECK(relative_sigma_min(assemble(one, basis).A) < 1e-8);
    BurstOptions o;
    o.count = 10;
    const auto many = estimate_derivatives(synthesize_bursts(sys, Domain({{0, 2}, {0, 2}}), o, 4), DerivativeMethod::central());
    CHECK(relative_sigma_min(assemble(many, basis).A) > 1e-3);
    CHECK(relative_sigma_min(Eigen::MatrixXd::Zero(3, 2)) == 0.0);
}
