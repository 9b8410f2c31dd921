#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "odefit/basis.hpp"

namespace odefit {

struct FitDiagnostics {
    double residual_norm = 0.0;  // norm matching the solver (l2, l1 or penalized objective)
    int iterations = 0;
    bool converged = true;
    double objective_gap = 0.0;  // certified gap where the solver provides one
    double sigma_min = 0.0;      // singular values of the model matrix, when computed
    double sigma_max = 0.0;
    int rank = 0;
};

// N x d expansion coefficients; column l holds the coefficients of component l
// in the ordering of `basis.indices()`.
struct CoefficientSet {
    BasisSpec basis;
    Eigen::MatrixXd coeffs;
    std::vector<FitDiagnostics> diagnostics;

    CoefficientSet() = default;
    CoefficientSet(BasisSpec b, Eigen::MatrixXd c);

    int components() const { return static_cast<int>(coeffs.cols()); }
    // sum_j c_{j,l} phi_j(x) for every component l.
    Eigen::VectorXd evaluate(const Point& x) const;
    void evaluate_into(const Point& x, std::span<const double> phi, Eigen::VectorXd& out) const;
};

// Builds a monomial-basis coefficient set from sparse terms:
// each term is (exponents, per-component values).
struct PolynomialTerm {
    std::vector<int> exponents;
    std::vector<double> values;
};
CoefficientSet monomial_coefficients(int degree, std::vector<Interval> bounds, int components,
                                     const std::vector<PolynomialTerm>& terms);

}  // namespace odefit
