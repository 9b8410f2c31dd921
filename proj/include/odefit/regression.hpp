#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "odefit/coefficients.hpp"
#include "odefit/data.hpp"

namespace odefit {

// Rows are basis evaluations at the pairing states; Xdot stacks the
// derivative targets, V the algebraic observations when every pairing has one.
struct ModelMatrix {
    BasisSpec basis;
    Eigen::MatrixXd A;
    Eigen::MatrixXd Xdot;
    std::optional<Eigen::MatrixXd> V;
};

ModelMatrix assemble(const std::vector<DataPairing>& pairings, const BasisSpec& basis);

// Basis evaluations at the rows of `points` (one point per row).
Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& points, const BasisSpec& basis);

struct L2Options {
    double rank_cutoff = 1e-12;  // relative to the largest singular value
};

struct L1Options {
    double smoothing = 1e-8;
    int max_iterations = 200;
    double tolerance = 1e-12;  // relative stagnation of the smoothed objective
    bool polish = true;        // finish with exact descent over LP vertices from the IRLS point
    bool strict = false;       // throw ConvergenceError instead of flagging in diagnostics
};

struct LassoOptions {
    double tolerance = 1e-8;  // duality gap relative to 0.5 |b|^2
    int max_sweeps = 200000;
};

struct SolverChoice {
    enum class Kind { l2, l1, lasso };
    Kind kind = Kind::l2;
    double lambda = 0.0;
    L2Options l2;
    L1Options l1;
    LassoOptions lasso;
};

SolverChoice::Kind parse_solver_kind(const std::string& name);
std::string to_string(SolverChoice::Kind kind);

// Minimum-norm least squares through a truncated SVD; one diagnostics entry
// per target column carrying the residual and singular-value summary.
Eigen::MatrixXd solve_l2(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const L2Options& opts,
                         std::vector<FitDiagnostics>* diagnostics = nullptr);

struct LadResult {
    Eigen::VectorXd c;
    FitDiagnostics diagnostics;
    std::vector<double> smoothed_objective;  // one entry per IRLS iterate, starting with the l2 start
};

// Least absolute deviations by iteratively reweighted least squares.
LadResult solve_lad(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const L1Options& opts);

// Huber-smoothed l1 objective minimized by the IRLS iteration.
double smoothed_l1(const Eigen::VectorXd& r, double smoothing);

// Certified upper bound on |Ac-b|_1 - min_c |Ac-b|_1 from a dual feasible
// point: residual signs off the active set (|r_i| <= smoothing), solved on it.
double lad_duality_gap(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                       double smoothing = 1e-8);

// 0.5 |Ac-b|^2 + lambda |c|_1 by cyclic coordinate descent.
Eigen::VectorXd solve_lasso(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda,
                            const LassoOptions& opts, FitDiagnostics* diagnostics = nullptr);

CoefficientSet fit_l2(const ModelMatrix& mm, const L2Options& opts = {});
CoefficientSet fit_l1(const ModelMatrix& mm, const L1Options& opts = {});
CoefficientSet fit_lasso(const ModelMatrix& mm, double lambda, const LassoOptions& opts = {});
CoefficientSet fit(const ModelMatrix& mm, const SolverChoice& solver);

// Regresses each algebraic component of v on Phi(u) (rows are samples).
CoefficientSet fit_constraint_map(const Eigen::MatrixXd& u_samples, const Eigen::MatrixXd& v_samples,
                                  const BasisSpec& basis, const SolverChoice& solver);

// sigma_min / sigma_max of A (0 for an all-zero matrix).
double relative_sigma_min(const Eigen::MatrixXd& A);

}  // namespace odefit
