#include "odefit/analysis.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "odefit/error.hpp"
#include "odefit/rng.hpp"

namespace odefit {

namespace {

double max_of(const std::vector<double>& v, std::size_t end) {
    double m = 0.0;
    for (std::size_t i = 0; i < std::min(end, v.size()); ++i) m = std::max(m, v[i]);
    return m;
}

}  // namespace

double TrajectoryComparison::max_state_error() const { return max_of(e_state, e_state.size()); }
double TrajectoryComparison::max_algebraic_error() const { return max_of(e_algebraic, e_algebraic.size()); }
double TrajectoryComparison::max_state_error_in_domain() const {
    return max_of(e_state, first_exit.value_or(e_state.size()));
}

double TrajectoryComparison::relative_state_error() const {
    double scale = 0.0;
    for (const auto& u : truth) scale = std::max(scale, u.norm());
    return scale > 0.0 ? max_state_error() / scale : max_state_error();
}

TrajectoryComparison trajectory_error(const System& truth, const LearnedSystem& learned, const State& u0, double dt,
                                      std::size_t steps, int substeps, const Domain* domain) {
    if (u0.size() != state_dim(truth) || learned.dim() != state_dim(truth)) {
        throw DimensionError("trajectory_error: initial state, truth and learned system dimensions differ");
    }
    TrajectoryComparison out;
    try {
        out.truth = integrate_rk4(state_rhs(truth), u0, dt, steps, substeps);
    } catch (const BlowUpError& e) {
        throw BlowUpError("true trajectory blew up", e.step());
    }
    try {
        out.learned = integrate_rk4(learned.rhs_fn(), u0, dt, steps, substeps);
    } catch (const BlowUpError& e) {
        throw BlowUpError("learned trajectory blew up", e.step());
    }
    const bool algebraic = algebraic_dim(truth) > 0 && learned.constraint.has_value();
    double vscale = 0.0, emax = 0.0;
    for (std::size_t j = 0; j <= steps; ++j) {
        out.t.push_back(static_cast<double>(j) * dt);
        out.e_state.push_back((out.learned[j] - out.truth[j]).norm());
        if (algebraic) {
            const State v = algebraic_state(truth, out.truth[j]);
            const State y = learned.constraint->evaluate(out.learned[j]);
            out.e_algebraic.push_back((y - v).norm());
            vscale = std::max(vscale, v.norm());
            emax = std::max(emax, out.e_algebraic.back());
        }
        if (domain && !out.first_exit && (!domain->contains(out.truth[j]) || !domain->contains(out.learned[j]))) {
            out.first_exit = j;
        }
    }
    out.rel_algebraic_ = vscale > 0.0 ? emax / vscale : emax;
    return out;
}

void write_validation_csv(std::ostream& os, const TrajectoryComparison& cmp) {
    auto num = [](double v) {
        char buf[32];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        (void)ec;
        return std::string(buf, ptr);
    };
    const bool alg = !cmp.e_algebraic.empty();
    os << (alg ? "t,e_state,e_algebraic\n" : "t,e_state\n");
    for (std::size_t j = 0; j < cmp.t.size(); ++j) {
        os << num(cmp.t[j]) << ',' << num(cmp.e_state[j]);
        if (alg) os << ',' << num(cmp.e_algebraic[j]);
        os << '\n';
    }
}

CoefficientError coefficient_error(const CoefficientSet& learned, const CoefficientSet& truth) {
    const auto& a = learned.basis;
    const auto& b = truth.basis;
    if (a.kind() != b.kind() || a.dim() != b.dim() ||
        (a.kind() == BasisKind::legendre && a.bounds() != b.bounds())) {
        throw DimensionError("coefficient_error: coefficient sets live in different bases");
    }
    if (learned.components() != truth.components()) {
        throw DimensionError("coefficient_error: component counts differ");
    }
    const BasisSpec& big = a.degree() >= b.degree() ? a : b;
    CoefficientError out;
    out.indices = big.indices();
    const int d = learned.components();
    out.termwise.resize(static_cast<Eigen::Index>(out.indices.size()), d);
    for (std::size_t i = 0; i < out.indices.size(); ++i) {
        const std::size_t ja = a.find(out.indices[i]);
        const std::size_t jb = b.find(out.indices[i]);
        for (int l = 0; l < d; ++l) {
            const double ca = ja < a.size() ? learned.coeffs(static_cast<Eigen::Index>(ja), l) : 0.0;
            const double cb = jb < b.size() ? truth.coeffs(static_cast<Eigen::Index>(jb), l) : 0.0;
            out.termwise(static_cast<Eigen::Index>(i), l) = std::abs(ca - cb);
        }
    }
    out.component_l2 = out.termwise.colwise().norm().transpose();
    out.max_abs = out.termwise.size() ? out.termwise.maxCoeff() : 0.0;
    return out;
}

double rhs_error(const RhsFn& learned, const RhsFn& truth, const std::vector<Point>& samples) {
    if (samples.empty()) throw std::invalid_argument("rhs_error: no sample points");
    double num = 0.0, den = 0.0;
    for (const auto& x : samples) {
        const State f = truth(x);
        const State g = learned(x);
        if (f.size() != g.size()) throw DimensionError("rhs_error: learned and true rhs dimensions differ");
        num += (g - f).squaredNorm();
        den += f.squaredNorm();
    }
    if (den == 0.0) throw std::domain_error("rhs_error: true rhs vanishes on every sample");
    return std::sqrt(num / den);
}

GaussRule gauss_legendre(int points) {
    if (points < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(points));
    rule.weights.resize(static_cast<std::size_t>(points));
    const int m = points;
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute derivative at the converged node for the weight.
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= m; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = m * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -x;
        rule.nodes[static_cast<std::size_t>(m - 1 - i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(m - 1 - i)] = w;
    }
    if (m % 2 == 1) rule.nodes[static_cast<std::size_t>(m / 2)] = 0.0;
    return rule;
}

CoefficientSet project(const RhsFn& f, const BasisSpec& basis, int level, std::uint64_t seed) {
    if (basis.kind() != BasisKind::legendre) throw std::invalid_argument("project: requires the legendre basis");
    const int d = basis.dim();
    const auto n = static_cast<Eigen::Index>(basis.size());
    std::vector<double> phi(basis.size());
    Eigen::MatrixXd acc;
    auto accumulate = [&](const Point& x, double w) {
        const State y = f(x);
        if (acc.size() == 0) acc = Eigen::MatrixXd::Zero(n, y.size());
        basis.eval_into(x, phi);
        const Eigen::Map<const Eigen::VectorXd> p(phi.data(), n);
        acc.noalias() += (w * p) * y.transpose();
    };
    const auto& bounds = basis.bounds();
    if (d <= 3) {
        if (level < basis.degree() + 1) {
            throw std::invalid_argument("project: quadrature level " + std::to_string(level) + " below degree+1 = " +
                                        std::to_string(basis.degree() + 1));
        }
        const GaussRule rule = gauss_legendre(level);
        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        Point x(d);
        while (true) {
            double w = 1.0;
            for (int k = 0; k < d; ++k) {
                const auto& iv = bounds[static_cast<std::size_t>(k)];
                const std::size_t q = static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]);
                x[k] = iv.lo + 0.5 * (rule.nodes[q] + 1.0) * iv.width();
                w *= 0.5 * rule.weights[q];  // probability measure on each axis
            }
            accumulate(x, w);
            int k = 0;
            while (k < d && ++idx[static_cast<std::size_t>(k)] == level) idx[static_cast<std::size_t>(k++)] = 0;
            if (k == d) break;
        }
    } else {
        Rng rng(seed);
        Point u(d);
        const double w = 1.0 / static_cast<double>(kProjectionMonteCarlo);
        Domain hull(bounds);
        for (std::size_t s = 0; s < kProjectionMonteCarlo; ++s) {
            for (int k = 0; k < d; ++k) u[k] = uniform01(rng);
            accumulate(hull.from_unit(u), w);
        }
    }
    return CoefficientSet(basis, std::move(acc));
}

double gronwall_bound(const BoundInputs& in) {
    if (in.lipschitz < 0 || in.proj_sup_err < 0 || in.l2_err < 0 || in.sup_sqrt_k < 0 || in.horizon < 0) {
        throw std::invalid_argument("gronwall_bound: inputs must be non-negative");
    }
    const double lt = in.lipschitz * in.horizon;
    // expm1(lt)/L keeps accuracy as L -> 0 and equals the horizon at L = 0.
    const double factor = in.lipschitz == 0.0 ? in.horizon : std::expm1(lt) / in.lipschitz;
    return factor * (in.proj_sup_err + in.l2_err * in.sup_sqrt_k);
}

std::vector<Point> domain_samples(const Domain& domain, std::size_t count, std::uint64_t seed) {
    return sample_initial_states(domain, count, SamplingStrategy::uniform, seed);
}

double estimate_lipschitz(const JacobianFn& jac, const Domain& domain, std::size_t samples, std::uint64_t seed) {
    double best = 0.0;
    auto visit = [&](const Point& x) {
        const Eigen::MatrixXd J = jac(x);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
        if (svd.singularValues().size()) best = std::max(best, svd.singularValues()[0]);
    };
    for (const auto& c : domain.corners()) {
        if (domain.contains(c)) visit(c);
    }
    for (const auto& x : domain_samples(domain, samples, seed)) visit(x);
    return best;
}

double sup_difference(const RhsFn& f, const RhsFn& g, const Domain& domain, std::size_t samples, std::uint64_t seed) {
    double best = 0.0;
    for (const auto& c : domain.corners()) {
        if (domain.contains(c)) best = std::max(best, (f(c) - g(c)).norm());
    }
    for (const auto& x : domain_samples(domain, samples, seed)) best = std::max(best, (f(x) - g(x)).norm());
    return best;
}

double orthonormal_l2_distance(const CoefficientSet& a, const CoefficientSet& b) {
    if (a.basis.kind() != BasisKind::legendre || !a.basis.same_space(b.basis) || a.components() != b.components()) {
        throw DimensionError("orthonormal_l2_distance: sets must share one legendre basis");
    }
    return (a.coeffs - b.coeffs).norm();
}

}  // namespace odefit
