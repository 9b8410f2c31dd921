#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "odefit/domain.hpp"

namespace odefit {

class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> exponents);

    int dim() const { return static_cast<int>(exps_.size()); }
    int order() const { return order_; }
    int operator[](int k) const { return exps_[static_cast<std::size_t>(k)]; }
    std::span<const int> exponents() const { return exps_; }
    std::string to_string() const;

    bool operator==(const MultiIndex& o) const { return exps_ == o.exps_; }
    // Graded order: total degree first, then descending lexicographic, so that
    // (1,0) precedes (0,1).
    std::strong_ordering operator<=>(const MultiIndex& o) const;

private:
    std::vector<int> exps_;
    int order_ = 0;
};

// Number of multi-indices with |i| <= n in d variables, (n+d choose d).
// Throws SizeError past kMaxBasisSize.
std::size_t basis_size(int d, int n);
inline constexpr std::size_t kMaxBasisSize = 20'000'000;

std::vector<MultiIndex> index_set(int d, int n);

enum class BasisKind { monomial, legendre };

BasisKind parse_basis_kind(const std::string& name);
std::string to_string(BasisKind kind);

// Total-degree polynomial space on a hypercube. The Legendre kind uses
// tensor products of per-axis Legendre polynomials, affinely mapped to each
// interval and normalized against the uniform probability measure there.
class BasisSpec {
public:
    BasisSpec() = default;
    BasisSpec(BasisKind kind, int degree, std::vector<Interval> bounds);
    BasisSpec(BasisKind kind, int degree, const Domain& domain) : BasisSpec(kind, degree, domain.bounds()) {}

    BasisKind kind() const { return kind_; }
    int degree() const { return degree_; }
    int dim() const { return static_cast<int>(bounds_.size()); }
    std::size_t size() const { return indices_.size(); }
    const std::vector<Interval>& bounds() const { return bounds_; }
    const std::vector<MultiIndex>& indices() const { return indices_; }
    // Position of an index in this basis, or size() when absent.
    std::size_t find(const MultiIndex& idx) const;

    std::vector<double> eval(const Point& x) const;
    void eval_into(const Point& x, std::span<double> out) const;

    // Reproducing-kernel diagonal sum_j psi_j(x)^2; legendre kind only.
    double kernel_diag(const Point& x) const;

    // Same kind, degree and bounds.
    bool same_space(const BasisSpec& o) const {
        return kind_ == o.kind_ && degree_ == o.degree_ && bounds_ == o.bounds_;
    }

private:
    // Per-axis table of univariate values, (degree+1) entries per axis.
    void axis_table(const Point& x, std::vector<double>& table) const;

    BasisKind kind_ = BasisKind::monomial;
    int degree_ = 0;
    std::vector<Interval> bounds_;
    std::vector<MultiIndex> indices_;
};

// Orthonormal Legendre values psi_0..psi_n at xi in [-1,1] for the uniform
// probability measure on [-1,1]: psi_k = sqrt(2k+1) P_k.
void orthonormal_legendre(double xi, int n, std::span<double> out);

// Estimate of sup_x sqrt(K(x)): maximum over `samples` seeded points on the
// domain (mask respected) together with every hull corner. Sample k of a
// larger count is the same point as sample k of a smaller one.
double sup_sqrt_kernel(const BasisSpec& spec, const Domain& domain, std::size_t samples, std::uint64_t seed);

}  // namespace odefit
