#include "odefit/sequential.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "odefit/error.hpp"
#include "odefit/rng.hpp"
#include "odefit/simd.hpp"

namespace odefit {

GammaSchedule GammaSchedule::constant(double gamma) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be finite and >= 0");
    return {Kind::constant, gamma};
}

GammaSchedule GammaSchedule::parse(const std::string& tag) {
    if (tag == "zero") return zero();
    const std::string prefix = "constant(";
    if (tag.rfind(prefix, 0) == 0 && tag.size() > prefix.size() + 1 && tag.back() == ')') {
        const char* first = tag.data() + prefix.size();
        const char* last = tag.data() + tag.size() - 1;
        double g = 0.0;
        auto [ptr, ec] = std::from_chars(first, last, g);
        if (ec == std::errc{} && ptr == last) return constant(g);
    }
    throw std::invalid_argument("bad gamma schedule '" + tag + "' (zero | constant(<gamma>))");
}

std::string GammaSchedule::tag() const {
    if (kind == Kind::zero) return "zero";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    (void)ec;
    return "constant(" + std::string(buf, ptr) + ")";
}

SaState SaState::zeros(std::size_t basis_size, int dim, int algebraic_dim, GammaSchedule gamma) {
    SaState s;
    const auto n = static_cast<Eigen::Index>(basis_size);
    s.coeffs = Eigen::MatrixXd::Zero(n, dim);
    s.constraint = Eigen::MatrixXd::Zero(n, algebraic_dim);
    s.gamma = gamma;
    return s;
}

void sa_update(SaState& state, std::span<const double> phi, const Point& xdot, const std::optional<Point>& v) {
    const auto n = static_cast<std::size_t>(state.coeffs.rows());
    if (phi.size() != n) throw DimensionError("sa_update: basis vector length differs from coefficient rows");
    if (xdot.size() != state.coeffs.cols()) {
        throw DimensionError("sa_update: pairing has " + std::to_string(xdot.size()) + " components, state has " +
                             std::to_string(state.coeffs.cols()));
    }
    const double gamma = state.gamma(state.k + 1);
    const double denom = simd::squared_norm(phi) + gamma;
    if (!(denom > 0.0)) throw std::domain_error("sa_update: zero basis vector with gamma = 0");
    auto update = [&](Eigen::MatrixXd& c, const Point& target) {
        for (Eigen::Index l = 0; l < c.cols(); ++l) {
            std::span<double> col{c.col(l).data(), n};
            const double r = target[l] - simd::dot(col, phi);
            simd::axpy(r / denom, phi, col);
        }
    };
    update(state.coeffs, xdot);
    if (state.constraint.cols() > 0) {
        if (!v) throw DimensionError("sa_update: constraint is streamed but the pairing carries no algebraic value");
        if (v->size() != state.constraint.cols()) throw DimensionError("sa_update: algebraic dimension mismatch");
        update(state.constraint, *v);
    }
    ++state.k;
}

SaState sa_step(const SaState& state, const DataPairing& pairing, const BasisSpec& basis) {
    if (pairing.x.size() != basis.dim()) throw DimensionError("sa_step: pairing dimension differs from basis");
    std::vector<double> phi(basis.size());
    basis.eval_into(pairing.x, phi);
    SaState next = state;
    sa_update(next, phi, pairing.xdot, pairing.v);
    return next;
}

std::vector<std::size_t> stream_order(std::size_t count, std::size_t steps, std::uint64_t seed, bool cycle) {
    if (count == 0) throw std::invalid_argument("stream_order: no pairings");
    if (steps == 0) steps = count;
    if (!cycle) steps = std::min(steps, count);
    std::vector<std::size_t> order;
    order.reserve(steps);
    std::vector<std::size_t> perm(count);
    for (std::uint64_t epoch = 0; order.size() < steps; ++epoch) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        Rng rng(derive_seed(seed, epoch));
        for (std::size_t i = count - 1; i > 0; --i) {
            std::swap(perm[i], perm[rng() % (i + 1)]);
        }
        const std::size_t take = std::min(count, steps - order.size());
        order.insert(order.end(), perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(take));
    }
    return order;
}

SaMonitor make_monitor(const std::vector<Point>& points, const RhsFn& f, const std::function<State(const State&)>& g,
                       std::size_t cadence) {
    SaMonitor m;
    m.cadence = cadence;
    if (points.empty()) return m;
    const auto s = static_cast<Eigen::Index>(points.size());
    m.points.resize(s, points.front().size());
    for (Eigen::Index i = 0; i < s; ++i) m.points.row(i) = points[static_cast<std::size_t>(i)].transpose();
    if (f) {
        for (Eigen::Index i = 0; i < s; ++i) {
            const State y = f(points[static_cast<std::size_t>(i)]);
            if (i == 0) m.truth_f.resize(s, y.size());
            m.truth_f.row(i) = y.transpose();
        }
    }
    if (g) {
        for (Eigen::Index i = 0; i < s; ++i) {
            const State y = g(points[static_cast<std::size_t>(i)]);
            if (i == 0) m.truth_g.resize(s, y.size());
            m.truth_g.row(i) = y.transpose();
        }
    }
    return m;
}

namespace {

// Relative errors per column of `c` against `truth`, plus the stacked total.
void relative_errors(const Eigen::MatrixXd& c, const Eigen::MatrixXd& truth, const Eigen::MatrixXd& points,
                     const BasisSpec& basis, std::vector<double>& per, double& total) {
    const auto n = static_cast<std::size_t>(c.rows());
    const Eigen::Index d = c.cols();
    std::vector<double> phi(n);
    std::vector<double> num(static_cast<std::size_t>(d), 0.0), den(static_cast<std::size_t>(d), 0.0);
    Point x(points.cols());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        x = points.row(i).transpose();
        basis.eval_into(x, phi);
        for (Eigen::Index l = 0; l < d; ++l) {
            const double e = simd::dot({c.col(l).data(), n}, phi) - truth(i, l);
            num[static_cast<std::size_t>(l)] += e * e;
            den[static_cast<std::size_t>(l)] += truth(i, l) * truth(i, l);
        }
    }
    per.assign(static_cast<std::size_t>(d), 0.0);
    double tn = 0.0, td = 0.0;
    for (std::size_t l = 0; l < per.size(); ++l) {
        per[l] = den[l] > 0.0 ? std::sqrt(num[l] / den[l]) : std::sqrt(num[l]);
        tn += num[l];
        td += den[l];
    }
    total = td > 0.0 ? std::sqrt(tn / td) : std::sqrt(tn);
}

}  // namespace

SaRecord sa_evaluate(const SaState& state, const BasisSpec& basis, const SaMonitor& monitor) {
    SaRecord rec;
    rec.step = state.k;
    if (!monitor.has_truth()) return rec;
    if (monitor.truth_f.cols() != state.coeffs.cols()) throw DimensionError("monitor truth dimension mismatch");
    relative_errors(state.coeffs, monitor.truth_f, monitor.points, basis, rec.f_component, rec.f_total);
    if (state.constraint.cols() > 0 && monitor.truth_g.size() > 0) {
        relative_errors(state.constraint, monitor.truth_g, monitor.points, basis, rec.g_component, rec.g_total);
    }
    return rec;
}

SaResult sa_run(const std::vector<DataPairing>& pairings, std::span<const std::size_t> order, const BasisSpec& basis,
                SaState initial, const SaMonitor* monitor) {
    if (static_cast<std::size_t>(initial.coeffs.rows()) != basis.size()) {
        throw DimensionError("sa_run: state rows differ from basis size");
    }
    SaResult out;
    out.state = std::move(initial);
    SaState& st = out.state;
    std::vector<double> phi(basis.size());
    const std::size_t cadence = monitor && monitor->cadence > 0 ? monitor->cadence : 0;
    Eigen::MatrixXd last = st.coeffs;
    for (std::size_t s = 0; s < order.size(); ++s) {
        const DataPairing& p = pairings.at(order[s]);
        if (p.x.size() != basis.dim()) throw DimensionError("sa_run: pairing dimension differs from basis");
        basis.eval_into(p.x, phi);
        sa_update(st, phi, p.xdot, p.v);
        const bool record = cadence && (s + 1) % cadence == 0;
        if (!st.coeffs.allFinite() || !st.constraint.allFinite()) {
            throw BlowUpError("sequential approximation produced non-finite coefficients", s + 1);
        }
        if (record) {
            SaRecord rec = sa_evaluate(st, basis, *monitor);
            const double base = std::max(last.norm(), 1e-300);
            rec.update_norm = (st.coeffs - last).norm() / base;
            last = st.coeffs;
            out.history.push_back(std::move(rec));
        }
    }
    return out;
}

void write_history_csv(std::ostream& os, const std::vector<SaRecord>& history) {
    auto num = [](double v) {
        char buf[32];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        (void)ec;
        return std::string(buf, ptr);
    };
    os << "step,component,relative_l2_error\n";
    for (const auto& r : history) {
        if (r.f_component.empty()) {
            os << r.step << ",update," << num(r.update_norm) << '\n';
            continue;
        }
        for (std::size_t l = 0; l < r.f_component.size(); ++l) {
            os << r.step << ",f_" << l + 1 << ',' << num(r.f_component[l]) << '\n';
        }
        os << r.step << ",f," << num(r.f_total) << '\n';
        for (std::size_t l = 0; l < r.g_component.size(); ++l) {
            os << r.step << ",g_" << l + 1 << ',' << num(r.g_component[l]) << '\n';
        }
        if (!r.g_component.empty()) os << r.step << ",g," << num(r.g_total) << '\n';
    }
}

}  // namespace odefit
