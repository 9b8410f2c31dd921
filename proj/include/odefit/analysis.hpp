#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "odefit/coefficients.hpp"
#include "odefit/domain.hpp"
#include "odefit/dynamics.hpp"

namespace odefit {

struct TrajectoryComparison {
    std::vector<double> t;
    std::vector<double> e_state;      // |x(t_j) - u(t_j)|_2
    std::vector<double> e_algebraic;  // |y(t_j) - v(t_j)|_2, DAEs with a learned constraint only
    Trajectory truth;
    Trajectory learned;
    // First index at which either trajectory leaves the domain, when one was given.
    std::optional<std::size_t> first_exit;

    double max_state_error() const;
    double max_algebraic_error() const;
    // Max error over the indices before first_exit (all indices when none).
    double max_state_error_in_domain() const;
    // max_j e_state / max_j |u_j|
    double relative_state_error() const;
    // max_j e_algebraic / max_j |v_j|; computed from the stored truth.
    double relative_algebraic_error() const { return rel_algebraic_; }

    double rel_algebraic_ = 0.0;
};

// Integrates truth and learned system from u0 with the same RK4 settings.
// Blow-up of either is reported as BlowUpError with the step reached.
TrajectoryComparison trajectory_error(const System& truth, const LearnedSystem& learned, const State& u0, double dt,
                                      std::size_t steps, int substeps = 10, const Domain* domain = nullptr);

void write_validation_csv(std::ostream& os, const TrajectoryComparison& cmp);

struct CoefficientError {
    std::vector<MultiIndex> indices;  // union of both index sets, graded order
    Eigen::MatrixXd termwise;         // |c - c*| per index and component
    Eigen::VectorXd component_l2;     // l2 norm of each termwise column
    double max_abs = 0.0;
};

// Aligns by multi-index; terms missing from either side count as zero. Both
// sets must share kind, dimension and bounds (legendre) and component count.
CoefficientError coefficient_error(const CoefficientSet& learned, const CoefficientSet& truth);

// |stack(f~ - f)|_2 / |stack(f)|_2; throws std::domain_error when f vanishes
// on every sample.
double rhs_error(const RhsFn& learned, const RhsFn& truth, const std::vector<Point>& samples);

// Gauss-Legendre nodes and weights on [-1,1] (weights sum to 2).
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussRule gauss_legendre(int points);

inline constexpr std::size_t kProjectionMonteCarlo = 1'000'000;

// Component-wise L2 projection onto a legendre basis. Tensor quadrature with
// `level` points per axis for d <= 3 (level must be >= n+1), Monte Carlo
// with kProjectionMonteCarlo hull points otherwise.
CoefficientSet project(const RhsFn& f, const BasisSpec& basis, int level, std::uint64_t seed = 0);

struct BoundInputs {
    double lipschitz = 0.0;
    double proj_sup_err = 0.0;
    double l2_err = 0.0;
    double sup_sqrt_k = 0.0;
    double horizon = 0.0;
};

// L^-1 (e^{L t} - 1) (proj_sup_err + l2_err * sup_sqrt_k), with the t factor at L = 0.
double gronwall_bound(const BoundInputs& in);

// Max spectral norm of the Jacobian over `samples` seeded domain points and the hull corners.
double estimate_lipschitz(const JacobianFn& jac, const Domain& domain, std::size_t samples, std::uint64_t seed);

// Sampled sup over the domain (corners included) of |f(x) - g(x)|_2.
double sup_difference(const RhsFn& f, const RhsFn& g, const Domain& domain, std::size_t samples, std::uint64_t seed);

// |a - b| in the weighted L2 norm for two coefficient sets in the same
// orthonormal basis: the Frobenius norm of the coefficient difference.
double orthonormal_l2_distance(const CoefficientSet& a, const CoefficientSet& b);

// Seeded uniform points inside the domain (mask respected).
std::vector<Point> domain_samples(const Domain& domain, std::size_t count, std::uint64_t seed);

}  // namespace odefit
