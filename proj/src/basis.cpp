#include "odefit/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "odefit/error.hpp"
#include "odefit/rng.hpp"

namespace odefit {

MultiIndex::MultiIndex(std::vector<int> exponents) : exps_(std::move(exponents)) {
    for (int e : exps_) {
        if (e < 0) throw std::invalid_argument("multi-index exponents must be non-negative");
        order_ += e;
    }
}

std::string MultiIndex::to_string() const {
    std::string s = "(";
    for (std::size_t k = 0; k < exps_.size(); ++k) {
        if (k) s += ',';
        s += std::to_string(exps_[k]);
    }
    return s + ")";
}

std::strong_ordering MultiIndex::operator<=>(const MultiIndex& o) const {
    if (auto c = order_ <=> o.order_; c != 0) return c;
    // Larger leading exponent sorts first.
    for (std::size_t k = 0; k < std::min(exps_.size(), o.exps_.size()); ++k) {
        if (exps_[k] != o.exps_[k]) return o.exps_[k] <=> exps_[k];
    }
    return exps_.size() <=> o.exps_.size();
}

std::size_t basis_size(int d, int n) {
    if (d < 1 || n < 0) throw std::invalid_argument("basis_size: need d >= 1 and n >= 0");
    // C(n+d, d) built incrementally; each partial product is itself a binomial.
    unsigned long long c = 1;
    const int k = std::min(d, n);
    for (int i = 1; i <= k; ++i) {
        const unsigned long long num = static_cast<unsigned long long>(n + d - k + i);
        unsigned long long next;
        if (__builtin_mul_overflow(c, num, &next)) {
            throw SizeError("basis size for d=" + std::to_string(d) + ", n=" + std::to_string(n) +
                            " overflows");
        }
        c = next / static_cast<unsigned long long>(i);
        if (c > kMaxBasisSize) {
            throw SizeError("basis size for d=" + std::to_string(d) + ", n=" + std::to_string(n) +
                            " exceeds the supported maximum of " + std::to_string(kMaxBasisSize));
        }
    }
    return static_cast<std::size_t>(c);
}

namespace {

void compositions(int d, int total, int axis, std::vector<int>& cur, std::vector<MultiIndex>& out) {
    if (axis == d - 1) {
        cur[axis] = total;
        out.emplace_back(cur);
        return;
    }
    for (int e = total; e >= 0; --e) {
        cur[axis] = e;
        compositions(d, total - e, axis + 1, cur, out);
    }
}

}  // namespace

std::vector<MultiIndex> index_set(int d, int n) {
    const std::size_t count = basis_size(d, n);
    std::vector<MultiIndex> out;
    out.reserve(count);
    std::vector<int> cur(static_cast<std::size_t>(d), 0);
    for (int total = 0; total <= n; ++total) compositions(d, total, 0, cur, out);
    return out;
}

BasisKind parse_basis_kind(const std::string& name) {
    if (name == "monomial") return BasisKind::monomial;
    if (name == "legendre" || name == "legendre-orthonormal") return BasisKind::legendre;
    throw std::invalid_argument("unknown basis kind '" + name + "' (monomial, legendre)");
}

std::string to_string(BasisKind kind) { return kind == BasisKind::monomial ? "monomial" : "legendre"; }

BasisSpec::BasisSpec(BasisKind kind, int degree, std::vector<Interval> bounds)
    : kind_(kind), degree_(degree), bounds_(std::move(bounds)) {
    if (bounds_.empty()) throw std::invalid_argument("basis needs d >= 1");
    for (const auto& b : bounds_) {
        if (!(b.lo < b.hi)) throw std::invalid_argument("basis interval must satisfy lo < hi");
    }
    indices_ = index_set(dim(), degree_);
}

std::size_t BasisSpec::find(const MultiIndex& idx) const {
    auto it = std::lower_bound(indices_.begin(), indices_.end(), idx);
    if (it != indices_.end() && *it == idx) return static_cast<std::size_t>(it - indices_.begin());
    return indices_.size();
}

void orthonormal_legendre(double xi, int n, std::span<double> out) {
    // Bonnet recurrence on P_k, scaled afterwards.
    double p_prev = 1.0;
    out[0] = 1.0;
    if (n == 0) return;
    double p = xi;
    out[1] = std::sqrt(3.0) * p;
    for (int k = 1; k < n; ++k) {
        const double p_next = ((2.0 * k + 1.0) * xi * p - k * p_prev) / (k + 1.0);
        p_prev = p;
        p = p_next;
        out[static_cast<std::size_t>(k + 1)] = std::sqrt(2.0 * k + 3.0) * p;
    }
}

void BasisSpec::axis_table(const Point& x, std::vector<double>& table) const {
    const int d = dim();
    const auto stride = static_cast<std::size_t>(degree_ + 1);
    table.resize(stride * static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
        std::span<double> row(table.data() + stride * static_cast<std::size_t>(a), stride);
        if (kind_ == BasisKind::monomial) {
            row[0] = 1.0;
            for (int k = 1; k <= degree_; ++k) row[static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k - 1)] * x[a];
        } else {
            const auto& b = bounds_[static_cast<std::size_t>(a)];
            const double xi = (2.0 * x[a] - b.lo - b.hi) / (b.hi - b.lo);
            orthonormal_legendre(xi, degree_, row);
        }
    }
}

void BasisSpec::eval_into(const Point& x, std::span<double> out) const {
    if (x.size() != dim()) {
        throw DimensionError("eval_basis: point has dimension " + std::to_string(x.size()) + ", basis has " +
                             std::to_string(dim()));
    }
    if (out.size() != size()) throw DimensionError("eval_basis: output buffer has wrong length");
    thread_local std::vector<double> table;
    axis_table(x, table);
    const auto stride = static_cast<std::size_t>(degree_ + 1);
    const int d = dim();
    for (std::size_t j = 0; j < indices_.size(); ++j) {
        const auto e = indices_[j].exponents();
        double v = table[static_cast<std::size_t>(e[0])];
        for (int a = 1; a < d; ++a) v *= table[stride * static_cast<std::size_t>(a) + static_cast<std::size_t>(e[static_cast<std::size_t>(a)])];
        out[j] = v;
    }
}

std::vector<double> BasisSpec::eval(const Point& x) const {
    std::vector<double> out(size());
    eval_into(x, out);
    return out;
}

double BasisSpec::kernel_diag(const Point& x) const {
    if (kind_ != BasisKind::legendre) {
        throw std::invalid_argument("kernel_diag requires the orthonormal legendre basis");
    }
    const auto phi = eval(x);
    double k = 0.0;
    for (double v : phi) k += v * v;
    return k;
}

double sup_sqrt_kernel(const BasisSpec& spec, const Domain& domain, std::size_t samples, std::uint64_t seed) {
    if (spec.kind() != BasisKind::legendre) {
        throw std::invalid_argument("sup_sqrt_kernel requires the orthonormal legendre basis");
    }
    double best = 0.0;
    for (const auto& c : domain.corners()) best = std::max(best, spec.kernel_diag(c));
    Rng rng(seed);
    Point u(domain.dim());
    for (std::size_t s = 0; s < samples; ++s) {
        for (int k = 0; k < domain.dim(); ++k) u[k] = uniform01(rng);
        const Point x = domain.from_unit(u);
        if (!domain.mask().accepts(x)) continue;
        best = std::max(best, spec.kernel_diag(x));
    }
    return std::sqrt(best);
}

}  // namespace odefit
