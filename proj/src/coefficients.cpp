#include "odefit/coefficients.hpp"

#include "odefit/error.hpp"
#include "odefit/simd.hpp"

namespace odefit {

CoefficientSet::CoefficientSet(BasisSpec b, Eigen::MatrixXd c) : basis(std::move(b)), coeffs(std::move(c)) {
    if (static_cast<std::size_t>(coeffs.rows()) != basis.size()) {
        throw DimensionError("coefficient rows (" + std::to_string(coeffs.rows()) + ") differ from basis size (" +
                             std::to_string(basis.size()) + ")");
    }
}

void CoefficientSet::evaluate_into(const Point& x, std::span<const double> phi, Eigen::VectorXd& out) const {
    (void)x;
    out.resize(coeffs.cols());
    const auto n = static_cast<std::size_t>(coeffs.rows());
    for (Eigen::Index l = 0; l < coeffs.cols(); ++l) {
        out[l] = simd::dot({coeffs.col(l).data(), n}, phi);
    }
}

Eigen::VectorXd CoefficientSet::evaluate(const Point& x) const {
    thread_local std::vector<double> phi;
    phi.resize(basis.size());
    basis.eval_into(x, phi);
    Eigen::VectorXd out;
    evaluate_into(x, phi, out);
    return out;
}

CoefficientSet monomial_coefficients(int degree, std::vector<Interval> bounds, int components,
                                     const std::vector<PolynomialTerm>& terms) {
    BasisSpec basis(BasisKind::monomial, degree, std::move(bounds));
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(basis.size()), components);
    for (const auto& t : terms) {
        const std::size_t j = basis.find(MultiIndex(t.exponents));
        if (j == basis.size()) throw DimensionError("term " + MultiIndex(t.exponents).to_string() + " outside basis");
        if (static_cast<int>(t.values.size()) != components) throw DimensionError("term has wrong component count");
        for (int l = 0; l < components; ++l) c(static_cast<Eigen::Index>(j), l) = t.values[static_cast<std::size_t>(l)];
    }
    return CoefficientSet(std::move(basis), std::move(c));
}

}  // namespace odefit
