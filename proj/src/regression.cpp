#include "odefit/regression.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "odefit/error.hpp"

namespace odefit {

SolverChoice::Kind parse_solver_kind(const std::string& name) {
    if (name == "l2") return SolverChoice::Kind::l2;
    if (name == "l1") return SolverChoice::Kind::l1;
    if (name == "lasso") return SolverChoice::Kind::lasso;
    throw std::invalid_argument("unknown regression solver '" + name + "' (l2, l1, lasso)");
}

std::string to_string(SolverChoice::Kind kind) {
    switch (kind) {
        case SolverChoice::Kind::l2: return "l2";
        case SolverChoice::Kind::l1: return "l1";
        case SolverChoice::Kind::lasso: return "lasso";
    }
    return "l2";
}

Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& points, const BasisSpec& basis) {
    if (points.cols() != basis.dim()) {
        throw DimensionError("design_matrix: points have dimension " + std::to_string(points.cols()) +
                             ", basis has " + std::to_string(basis.dim()));
    }
    const auto n = static_cast<Eigen::Index>(basis.size());
    // Row-major scratch so each basis evaluation writes a contiguous row.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> A(points.rows(), n);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        basis.eval_into(points.row(i).transpose(), {A.row(i).data(), static_cast<std::size_t>(n)});
    }
    return A;
}

ModelMatrix assemble(const std::vector<DataPairing>& pairings, const BasisSpec& basis) {
    if (pairings.empty()) throw std::invalid_argument("assemble: no pairings");
    const int d = basis.dim();
    const auto m = static_cast<Eigen::Index>(pairings.size());
    Eigen::MatrixXd X(m, d);
    ModelMatrix mm;
    mm.basis = basis;
    mm.Xdot.resize(m, d);
    const bool has_v = std::all_of(pairings.begin(), pairings.end(), [](const DataPairing& p) { return p.v.has_value(); });
    const auto dv = has_v ? pairings.front().v->size() : 0;
    if (has_v) mm.V = Eigen::MatrixXd(m, dv);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& p = pairings[static_cast<std::size_t>(i)];
        if (p.x.size() != d || p.xdot.size() != d) {
            throw DimensionError("assemble: pairing " + std::to_string(i) + " has dimension " +
                                 std::to_string(p.x.size()) + ", basis has " + std::to_string(d));
        }
        X.row(i) = p.x.transpose();
        mm.Xdot.row(i) = p.xdot.transpose();
        if (has_v) {
            if (p.v->size() != dv) throw DimensionError("assemble: inconsistent algebraic dimension");
            mm.V->row(i) = p.v->transpose();
        }
    }
    mm.A = design_matrix(X, basis);
    return mm;
}

namespace {

void require_finite(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    if (!A.allFinite() || !B.allFinite()) throw std::domain_error("regression input contains non-finite entries");
}

}  // namespace

Eigen::MatrixXd solve_l2(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const L2Options& opts,
                         std::vector<FitDiagnostics>* diagnostics) {
    require_finite(A, B);
    if (A.rows() < 1) throw std::invalid_argument("solve_l2: empty system");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(opts.rank_cutoff);
    Eigen::MatrixXd C = svd.solve(B);
    if (diagnostics) {
        const auto& s = svd.singularValues();
        diagnostics->clear();
        for (Eigen::Index l = 0; l < B.cols(); ++l) {
            FitDiagnostics d;
            d.residual_norm = (A * C.col(l) - B.col(l)).norm();
            d.sigma_max = s.size() ? s[0] : 0.0;
            d.sigma_min = s.size() ? s[s.size() - 1] : 0.0;
            d.rank = static_cast<int>(svd.rank());
            diagnostics->push_back(d);
        }
    }
    return C;
}

double relative_sigma_min(const Eigen::MatrixXd& A) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0.0;
    // Singular values of a wide matrix stop at rows(); the null directions count as zero.
    if (A.rows() < A.cols()) return 0.0;
    return s[s.size() - 1] / s[0];
}

double smoothed_l1(const Eigen::VectorXd& r, double smoothing) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double a = std::abs(r[i]);
        s += a >= smoothing ? a : 0.5 * (a * a / smoothing + smoothing);
    }
    return s;
}

double lad_duality_gap(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                       double smoothing) {
    const Eigen::VectorXd r = b - A * c;
    const Eigen::Index m = r.size();
    // Dual of min |b - Ac|_1 is max b'y subject to A'y = 0, |y|_inf <= 1.
    // Rows with nonzero residual take their sign; the near-zero (active) rows
    // are solved so that A'y = 0, which is exact at a vertex optimum.
    std::vector<Eigen::Index> active;
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(r[i]) <= smoothing) {
            active.push_back(i);
            y[i] = 0.0;
        } else {
            y[i] = r[i] > 0 ? 1.0 : -1.0;
        }
    }
    if (!active.empty()) {
        Eigen::MatrixXd AB(static_cast<Eigen::Index>(active.size()), A.cols());
        for (std::size_t k = 0; k < active.size(); ++k) AB.row(static_cast<Eigen::Index>(k)) = A.row(active[k]);
        const Eigen::VectorXd rhs = -(A.transpose() * y);
        const Eigen::VectorXd yb = AB.transpose().completeOrthogonalDecomposition().solve(rhs);
        for (std::size_t k = 0; k < active.size(); ++k) y[active[k]] = yb[static_cast<Eigen::Index>(k)];
    }
    // Remove what is left of A'y and rescale into the box.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    const Eigen::Index rank = qr.rank();
    Eigen::VectorXd qty = qr.householderQ().transpose() * y;
    qty.head(rank).setZero();
    Eigen::VectorXd yp = qr.householderQ() * qty;
    const double scale = std::max(1.0, yp.lpNorm<Eigen::Infinity>());
    yp /= scale;
    return r.lpNorm<1>() - b.dot(yp);
}

namespace {

Eigen::VectorXd weighted_ls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& sqrt_w) {
    const Eigen::MatrixXd WA = sqrt_w.asDiagonal() * A;
    const Eigen::VectorXd Wb = sqrt_w.cwiseProduct(b);
    return WA.colPivHouseholderQr().solve(Wb);
}

// Picks n linearly independent rows, preferring small residuals.
std::vector<Eigen::Index> initial_basis(const Eigen::MatrixXd& A, const Eigen::VectorXd& r) {
    const Eigen::Index n = A.cols();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(A.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return std::abs(r[i]) < std::abs(r[j]); });
    const double scale = A.cwiseAbs().maxCoeff();
    std::vector<Eigen::Index> basis;
    Eigen::MatrixXd Q(n, 0);
    for (Eigen::Index i : order) {
        Eigen::VectorXd v = A.row(i).transpose();
        const double norm0 = v.norm();
        if (norm0 == 0.0) continue;
        for (int pass = 0; pass < 2; ++pass) v -= Q * (Q.transpose() * v);
        if (v.norm() <= 1e-10 * std::max(norm0, scale)) continue;
        Q.conservativeResize(Eigen::NoChange, Q.cols() + 1);
        Q.col(Q.cols() - 1) = v.normalized();
        basis.push_back(i);
        if (static_cast<Eigen::Index>(basis.size()) == n) break;
    }
    return basis;
}

// Descent over basic solutions of min |b - Ac|_1 (the LP vertices), each
// step leaving one interpolated row and moving to the minimizing breakpoint
// of the piecewise linear objective along that edge. Returns nullopt when A
// is rank deficient; stops at a certified optimum or after the step budget.
std::optional<Eigen::VectorXd> vertex_descent(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                              const Eigen::VectorXd& start) {
    const Eigen::Index m = A.rows(), n = A.cols();
    if (m < n) return std::nullopt;
    std::vector<Eigen::Index> basis = initial_basis(A, b - A * start);
    if (static_cast<Eigen::Index>(basis.size()) < n) return std::nullopt;
    std::vector<char> in_basis(static_cast<std::size_t>(m), 0);
    for (auto i : basis) in_basis[static_cast<std::size_t>(i)] = 1;

    Eigen::MatrixXd AB(n, n);
    Eigen::VectorXd bB(n);
    auto load = [&] {
        for (Eigen::Index k = 0; k < n; ++k) {
            AB.row(k) = A.row(basis[static_cast<std::size_t>(k)]);
            bB[k] = b[basis[static_cast<std::size_t>(k)]];
        }
    };
    load();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(AB);
    Eigen::VectorXd c = lu.solve(bB);
    const double bscale = std::max(1.0, b.cwiseAbs().maxCoeff());
    const int budget = static_cast<int>(std::min<Eigen::Index>(50 * m, 100000));
    for (int it = 0; it < budget; ++it) {
        const Eigen::VectorXd r = b - A * c;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < m; ++i) {
            if (in_basis[static_cast<std::size_t>(i)]) continue;
            if (std::abs(r[i]) > 1e-14 * bscale) g += (r[i] > 0 ? 1.0 : -1.0) * A.row(i).transpose();
        }
        const Eigen::VectorXd y = lu.transpose().solve(g);
        Eigen::Index k = 0;
        const double ymax = y.cwiseAbs().maxCoeff(&k);
        if (ymax <= 1.0 + 1e-11) break;  // subgradient certificate: optimal
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e[k] = y[k] > 0 ? 1.0 : -1.0;
        const Eigen::VectorXd dir = lu.solve(e);
        const Eigen::VectorXd ad = A * dir;
        // F(c + t dir) = sum |r_i - t ad_i|; slope at 0+ is 1 - |y_k| plus zero-residual rows.
        double slope = 1.0 - ymax;
        struct Break {
            double t;
            double w;
            Eigen::Index row;
        };
        std::vector<Break> breaks;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (in_basis[static_cast<std::size_t>(i)] || ad[i] == 0.0) continue;
            if (std::abs(r[i]) <= 1e-14 * bscale) {
                slope += std::abs(ad[i]);
                breaks.push_back({0.0, 0.0, i});
                continue;
            }
            const double t = r[i] / ad[i];
            if (t > 0.0) breaks.push_back({t, 2.0 * std::abs(ad[i]), i});
        }
        if (slope >= 0.0 || breaks.empty()) break;  // degenerate vertex; IRLS point kept
        std::sort(breaks.begin(), breaks.end(), [](const Break& a, const Break& b2) { return a.t < b2.t; });
        std::size_t pick = breaks.size() - 1;
        for (std::size_t q = 0; q < breaks.size(); ++q) {
            slope += breaks[q].w;
            if (breaks[q].t > 0.0 && slope >= 0.0) {
                pick = q;
                break;
            }
        }
        const Break& enter = breaks[pick];
        in_basis[static_cast<std::size_t>(basis[static_cast<std::size_t>(k)])] = 0;
        basis[static_cast<std::size_t>(k)] = enter.row;
        in_basis[static_cast<std::size_t>(enter.row)] = 1;
        load();
        lu.compute(AB);
        c = lu.solve(bB);
    }
    if (!c.allFinite()) return std::nullopt;
    return c;
}

}  // namespace

LadResult solve_lad(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const L1Options& opts) {
    require_finite(A, b);
    if (A.rows() < 1) throw std::invalid_argument("solve_lad: empty system");
    const double eps = opts.smoothing;
    LadResult out;
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    Eigen::VectorXd r = b - A * c;
    double obj = smoothed_l1(r, eps);
    out.smoothed_objective.push_back(obj);
    Eigen::VectorXd sqrt_w(A.rows());
    int it = 0;
    bool stagnated = false;
    for (; it < opts.max_iterations; ++it) {
        for (Eigen::Index i = 0; i < r.size(); ++i) sqrt_w[i] = 1.0 / std::sqrt(std::max(std::abs(r[i]), eps));
        Eigen::VectorXd next = weighted_ls(A, b, sqrt_w);
        Eigen::VectorXd rn = b - A * next;
        const double obj_next = smoothed_l1(rn, eps);
        if (obj_next > obj) {
            // Rounding in a degenerate step; keep the better iterate.
            stagnated = true;
            break;
        }
        const double decrease = obj - obj_next;
        c = std::move(next);
        r = std::move(rn);
        obj = obj_next;
        out.smoothed_objective.push_back(obj);
        if (decrease <= opts.tolerance * std::max(obj, std::numeric_limits<double>::min())) {
            stagnated = true;
            ++it;
            break;
        }
    }
    if (opts.polish) {
        if (auto v = vertex_descent(A, b, c)) {
            if ((b - A * *v).lpNorm<1>() < r.lpNorm<1>()) {
                c = *v;
                r = b - A * c;
            }
        }
    }
    out.c = c;
    out.diagnostics.iterations = it;
    out.diagnostics.residual_norm = r.lpNorm<1>();
    out.diagnostics.objective_gap = std::max(0.0, lad_duality_gap(A, b, c, eps));
    out.diagnostics.converged = stagnated;
    if (!stagnated && opts.strict) {
        throw ConvergenceError("LAD iteration did not stagnate within " + std::to_string(opts.max_iterations) +
                                   " iterations",
                               out.diagnostics.objective_gap);
    }
    return out;
}

Eigen::VectorXd solve_lasso(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda,
                            const LassoOptions& opts, FitDiagnostics* diagnostics) {
    if (lambda < 0.0) throw std::invalid_argument("solve_lasso: lambda must be >= 0");
    require_finite(A, b);
    if (lambda == 0.0) {
        // The penalty vanishes: plain least squares, minimum-norm when rank deficient.
        std::vector<FitDiagnostics> diag;
        Eigen::VectorXd c = solve_l2(A, b, {}, &diag).col(0);
        if (diagnostics) *diagnostics = diag.front();
        return c;
    }
    const Eigen::Index n = A.cols();
    Eigen::VectorXd col_sq = A.colwise().squaredNorm().transpose();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = b;
    const double half_b2 = 0.5 * b.squaredNorm();
    const double scale = std::max(half_b2, std::numeric_limits<double>::min());
    double gap = 0.0;
    int sweep = 0;
    for (; sweep < opts.max_sweeps; ++sweep) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (col_sq[j] == 0.0) continue;
            const double rho = A.col(j).dot(r) + col_sq[j] * c[j];
            const double shrunk = std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) / col_sq[j];
            const double delta = shrunk - c[j];
            if (delta != 0.0) {
                r.noalias() -= delta * A.col(j);
                c[j] = shrunk;
            }
        }
        const double primal = 0.5 * r.squaredNorm() + lambda * c.lpNorm<1>();
        const double g = (A.transpose() * r).lpNorm<Eigen::Infinity>();
        const double s = g > lambda ? lambda / g : 1.0;
        const double dual = half_b2 - 0.5 * (b - s * r).squaredNorm();
        gap = primal - dual;
        if (gap <= opts.tolerance * scale) {
            ++sweep;
            break;
        }
    }
    if (diagnostics) {
        diagnostics->residual_norm = 0.5 * r.squaredNorm() + lambda * c.lpNorm<1>();
        diagnostics->iterations = sweep;
        diagnostics->objective_gap = gap;
        diagnostics->converged = gap <= opts.tolerance * scale;
    }
    return c;
}

CoefficientSet fit_l2(const ModelMatrix& mm, const L2Options& opts) {
    std::vector<FitDiagnostics> diag;
    CoefficientSet cs(mm.basis, solve_l2(mm.A, mm.Xdot, opts, &diag));
    cs.diagnostics = std::move(diag);
    return cs;
}

namespace {

CoefficientSet fit_l1_targets(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const BasisSpec& basis,
                              const L1Options& opts) {
    Eigen::MatrixXd C(A.cols(), B.cols());
    std::vector<FitDiagnostics> diag;
    for (Eigen::Index l = 0; l < B.cols(); ++l) {
        LadResult res = solve_lad(A, B.col(l), opts);
        C.col(l) = res.c;
        diag.push_back(res.diagnostics);
    }
    CoefficientSet cs(basis, std::move(C));
    cs.diagnostics = std::move(diag);
    return cs;
}

CoefficientSet fit_lasso_targets(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const BasisSpec& basis,
                                 double lambda, const LassoOptions& opts) {
    Eigen::MatrixXd C(A.cols(), B.cols());
    std::vector<FitDiagnostics> diag;
    for (Eigen::Index l = 0; l < B.cols(); ++l) {
        FitDiagnostics d;
        C.col(l) = solve_lasso(A, B.col(l), lambda, opts, &d);
        diag.push_back(d);
    }
    CoefficientSet cs(basis, std::move(C));
    cs.diagnostics = std::move(diag);
    return cs;
}

CoefficientSet fit_targets(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const BasisSpec& basis,
                           const SolverChoice& solver) {
    switch (solver.kind) {
        case SolverChoice::Kind::l2: {
            std::vector<FitDiagnostics> diag;
            CoefficientSet cs(basis, solve_l2(A, B, solver.l2, &diag));
            cs.diagnostics = std::move(diag);
            return cs;
        }
        case SolverChoice::Kind::l1: return fit_l1_targets(A, B, basis, solver.l1);
        case SolverChoice::Kind::lasso: return fit_lasso_targets(A, B, basis, solver.lambda, solver.lasso);
    }
    throw std::logic_error("unreachable solver kind");
}

}  // namespace

CoefficientSet fit_l1(const ModelMatrix& mm, const L1Options& opts) {
    return fit_l1_targets(mm.A, mm.Xdot, mm.basis, opts);
}

CoefficientSet fit_lasso(const ModelMatrix& mm, double lambda, const LassoOptions& opts) {
    return fit_lasso_targets(mm.A, mm.Xdot, mm.basis, lambda, opts);
}

CoefficientSet fit(const ModelMatrix& mm, const SolverChoice& solver) {
    return fit_targets(mm.A, mm.Xdot, mm.basis, solver);
}

CoefficientSet fit_constraint_map(const Eigen::MatrixXd& u_samples, const Eigen::MatrixXd& v_samples,
                                  const BasisSpec& basis, const SolverChoice& solver) {
    if (u_samples.rows() != v_samples.rows()) {
        throw DimensionError("fit_constraint_map: " + std::to_string(u_samples.rows()) + " state samples but " +
                             std::to_string(v_samples.rows()) + " algebraic samples");
    }
    if (v_samples.cols() < 1) throw DimensionError("fit_constraint_map: algebraic dimension must be >= 1");
    return fit_targets(design_matrix(u_samples, basis), v_samples, basis, solver);
}

}  // namespace odefit
