#include "odefit/domain.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "odefit/error.hpp"
#include "odefit/rng.hpp"

namespace odefit {

namespace {

std::string join(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        os << v[i];
    }
    return os.str();
}

void check_dim(const Point& x, int d) {
    if (x.size() != d) {
        throw DimensionError("point has dimension " + std::to_string(x.size()) + ", expected " +
                             std::to_string(d));
    }
}

}  // namespace

Mask Mask::annulus(std::vector<double> center, double radius) {
    if (center.empty() || !(radius >= 0.0)) throw std::invalid_argument("annulus: bad parameters");
    Mask m;
    m.kind_ = Kind::annulus;
    m.params_ = std::move(center);
    m.params_.push_back(radius);
    return m;
}

Mask Mask::disk(std::vector<double> center, double radius) {
    if (center.empty() || !(radius > 0.0)) throw std::invalid_argument("disk: bad parameters");
    Mask m;
    m.kind_ = Kind::disk;
    m.params_ = std::move(center);
    m.params_.push_back(radius);
    return m;
}

Mask Mask::halfplane(std::vector<double> coeffs) {
    if (coeffs.size() < 2) throw std::invalid_argument("halfplane: need a_0 and at least one a_i");
    Mask m;
    m.kind_ = Kind::halfplane;
    m.params_ = std::move(coeffs);
    return m;
}

Mask Mask::parse(const std::string& text) {
    if (text.empty() || text == "none") return {};
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        throw ParseError("mask preset '" + text + "' is not of the form name(args)");
    }
    const std::string name = text.substr(0, open);
    std::vector<double> args;
    std::stringstream ss(text.substr(open + 1, close - open - 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            args.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ParseError("mask preset '" + text + "': bad number '" + item + "'");
        }
    }
    if (name == "halfplane") return halfplane(args);
    if (name == "annulus" || name == "disk") {
        if (args.size() < 2) throw ParseError("mask preset '" + text + "': need center and radius");
        const double r = args.back();
        args.pop_back();
        return name == "annulus" ? annulus(args, r) : disk(args, r);
    }
    throw ParseError("unknown mask preset '" + name + "' (known: none, annulus, disk, halfplane)");
}

int Mask::dim() const {
    switch (kind_) {
        case Kind::none: return 0;
        case Kind::annulus:
        case Kind::disk:
        case Kind::halfplane: return static_cast<int>(params_.size()) - 1;
    }
    return 0;
}

bool Mask::accepts(const Point& x) const {
    if (kind_ == Kind::none) return true;
    check_dim(x, dim());
    const int d = dim();
    if (kind_ == Kind::halfplane) {
        double s = params_[0];
        for (int i = 0; i < d; ++i) s += params_[i + 1] * x[i];
        return s > 0.0;
    }
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) {
        const double dx = x[i] - params_[i];
        r2 += dx * dx;
    }
    const double r = params_.back();
    return kind_ == Kind::annulus ? r2 >= r * r : r2 <= r * r;
}

std::string Mask::to_string() const {
    switch (kind_) {
        case Kind::none: return "none";
        case Kind::annulus: return "annulus(" + join(params_) + ")";
        case Kind::disk: return "disk(" + join(params_) + ")";
        case Kind::halfplane: return "halfplane(" + join(params_) + ")";
    }
    return "none";
}

Domain::Domain(std::vector<Interval> bounds, Mask mask) : bounds_(std::move(bounds)), mask_(std::move(mask)) {
    if (bounds_.empty()) throw std::invalid_argument("domain needs at least one interval");
    for (const auto& b : bounds_) {
        if (!(b.lo < b.hi)) throw std::invalid_argument("domain interval must satisfy lo < hi");
    }
    if (mask_.kind() != Mask::Kind::none && mask_.dim() != dim()) {
        throw DimensionError("mask dimension " + std::to_string(mask_.dim()) +
                             " does not match domain dimension " + std::to_string(dim()));
    }
}

bool Domain::in_hull(const Point& x) const {
    check_dim(x, dim());
    for (int i = 0; i < dim(); ++i) {
        if (!(x[i] >= bounds_[i].lo && x[i] <= bounds_[i].hi)) return false;
    }
    return true;
}

bool Domain::contains(const Point& x) const { return in_hull(x) && mask_.accepts(x); }

Point Domain::from_unit(const Point& u) const {
    check_dim(u, dim());
    Point x(dim());
    for (int i = 0; i < dim(); ++i) x[i] = bounds_[i].lo + bounds_[i].width() * u[i];
    return x;
}

std::vector<Point> Domain::corners() const {
    const int d = dim();
    std::vector<Point> out;
    out.reserve(std::size_t{1} << d);
    for (std::size_t k = 0; k < (std::size_t{1} << d); ++k) {
        Point x(d);
        for (int i = 0; i < d; ++i) x[i] = (k >> i) & 1u ? bounds_[i].hi : bounds_[i].lo;
        out.push_back(std::move(x));
    }
    return out;
}

SamplingStrategy parse_strategy(const std::string& name) {
    if (name == "uniform") return SamplingStrategy::uniform;
    if (name == "halton") return SamplingStrategy::halton;
    if (name == "chebyshev" || name == "chebyshev-tensor") return SamplingStrategy::chebyshev;
    throw ParseError("unknown sampling strategy '" + name + "' (uniform, halton, chebyshev-tensor)");
}

std::string to_string(SamplingStrategy s) {
    switch (s) {
        case SamplingStrategy::uniform: return "uniform";
        case SamplingStrategy::halton: return "halton";
        case SamplingStrategy::chebyshev: return "chebyshev-tensor";
    }
    return "uniform";
}

double scrambled_radical_inverse(std::uint64_t index, unsigned base, const std::vector<unsigned>& perm) {
    const double inv_base = 1.0 / base;
    double inv_base_n = 1.0;
    std::uint64_t reversed = 0;
    // Stop before the reversed digits overflow 64 bits.
    const std::uint64_t limit = ~std::uint64_t{0} / base - base;
    while (index != 0 && reversed < limit) {
        const std::uint64_t next = index / base;
        const unsigned digit = static_cast<unsigned>(index - next * base);
        reversed = reversed * base + perm[digit];
        inv_base_n *= inv_base;
        index = next;
    }
    // Trailing zero digits map to perm[0]; their geometric tail sums in closed form.
    const double v = inv_base_n * (static_cast<double>(reversed) + inv_base * perm[0] / (1.0 - inv_base));
    return std::min(v, 0x1.fffffffffffffp-1);
}

namespace {

constexpr std::array<unsigned, 32> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23,  29,  31,
                                              37, 41, 43, 47, 53, 59, 61, 67, 71,  73,  79,
                                              83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

class UnitSampler {
public:
    UnitSampler(int d, SamplingStrategy strategy, std::uint64_t seed)
        : d_(d), strategy_(strategy), rng_(seed) {
        if (strategy_ == SamplingStrategy::halton) {
            if (d_ > static_cast<int>(kPrimes.size())) {
                throw DimensionError("halton sampler supports at most 32 dimensions");
            }
            perms_.resize(d_);
            for (int k = 0; k < d_; ++k) {
                auto& p = perms_[k];
                p.resize(kPrimes[k]);
                for (unsigned i = 0; i < kPrimes[k]; ++i) p[i] = i;
                // Fisher-Yates with our own uniform draw, keeps output stdlib-independent.
                for (unsigned i = kPrimes[k] - 1; i > 0; --i) {
                    const auto j = static_cast<unsigned>(rng_() % (i + 1));
                    std::swap(p[i], p[j]);
                }
            }
        }
    }

    Point next() {
        Point u(d_);
        switch (strategy_) {
            case SamplingStrategy::uniform:
                for (int k = 0; k < d_; ++k) u[k] = uniform01(rng_);
                break;
            case SamplingStrategy::halton:
                ++index_;
                for (int k = 0; k < d_; ++k) u[k] = scrambled_radical_inverse(index_, kPrimes[k], perms_[k]);
                break;
            case SamplingStrategy::chebyshev:
                // Inverse CDF of the arcsine law on [0,1].
                for (int k = 0; k < d_; ++k) {
                    u[k] = 0.5 * (1.0 - std::cos(std::numbers::pi * uniform01(rng_)));
                }
                break;
        }
        return u;
    }

private:
    int d_;
    SamplingStrategy strategy_;
    Rng rng_;
    std::uint64_t index_ = 0;
    std::vector<std::vector<unsigned>> perms_;
};

}  // namespace

std::vector<Point> sample_initial_states(const Domain& domain, std::size_t count, SamplingStrategy strategy,
                                         std::uint64_t seed) {
    if (count == 0) throw std::invalid_argument("sample_initial_states: count must be >= 1");
    UnitSampler sampler(domain.dim(), strategy, seed);
    std::vector<Point> out;
    out.reserve(count);
    while (out.size() < count) {
        std::size_t attempts = 0;
        for (;;) {
            Point x = domain.from_unit(sampler.next());
            ++attempts;
            if (domain.mask().accepts(x)) {
                out.push_back(std::move(x));
                break;
            }
            if (attempts >= kRejectionCap) {
                throw RejectionError("mask '" + domain.mask().to_string() + "' rejected every candidate",
                                     attempts);
            }
        }
    }
    return out;
}

}  // namespace odefit
