#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace odefit {

using Point = Eigen::VectorXd;

struct Interval {
    double lo;
    double hi;
    double width() const { return hi - lo; }
    bool operator==(const Interval&) const = default;
};

// Membership predicate restricting the hypercube hull. Only named presets are
// supported so that configurations stay serializable:
//   none
//   annulus(c_1,...,c_d,r)    keep |x - c| >= r
//   disk(c_1,...,c_d,r)       keep |x - c| <= r
//   halfplane(a_0,a_1,...,a_d) keep a_0 + sum a_i x_i > 0
class Mask {
public:
    enum class Kind { none, annulus, disk, halfplane };

    Mask() = default;
    static Mask annulus(std::vector<double> center, double radius);
    static Mask disk(std::vector<double> center, double radius);
    static Mask halfplane(std::vector<double> coeffs);
    static Mask parse(const std::string& text);

    Kind kind() const { return kind_; }
    bool accepts(const Point& x) const;
    std::string to_string() const;
    // Dimension the preset was written for, 0 for none.
    int dim() const;

    bool operator==(const Mask&) const = default;

private:
    Kind kind_ = Kind::none;
    std::vector<double> params_;
};

class Domain {
public:
    Domain() = default;
    explicit Domain(std::vector<Interval> bounds, Mask mask = {});

    int dim() const { return static_cast<int>(bounds_.size()); }
    const std::vector<Interval>& bounds() const { return bounds_; }
    const Mask& mask() const { return mask_; }
    bool has_mask() const { return mask_.kind() != Mask::Kind::none; }

    bool contains(const Point& x) const;
    bool in_hull(const Point& x) const;
    // Maps u in [0,1]^d affinely onto the hull.
    Point from_unit(const Point& u) const;
    // All 2^d vertices of the hull.
    std::vector<Point> corners() const;

    bool operator==(const Domain&) const = default;

private:
    std::vector<Interval> bounds_;
    Mask mask_;
};

enum class SamplingStrategy { uniform, halton, chebyshev };

SamplingStrategy parse_strategy(const std::string& name);
std::string to_string(SamplingStrategy s);

inline constexpr std::size_t kRejectionCap = 1'000'000;

std::vector<Point> sample_initial_states(const Domain& domain, std::size_t count,
                                         SamplingStrategy strategy, std::uint64_t seed);

// Scrambled radical inverse of index in the given prime base using a digit
// permutation; exposed for tests.
double scrambled_radical_inverse(std::uint64_t index, unsigned base,
                                 const std::vector<unsigned>& perm);

}  // namespace odefit
