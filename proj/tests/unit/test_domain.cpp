#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "odefit/domain.hpp"
#include "odefit/error.hpp"
#include "oracles.hpp"

using namespace odefit;

namespace {

Point pt(double a, double b) {
    Point p(2);
    p << a, b;
    return p;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double worst = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        worst = std::max(worst, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return worst;
}

Domain annulus_domain() { return Domain({{-2, 2}, {-2, 2}}, Mask::annulus({0, 0}, 1)); }

}  // namespace

TEST_CASE("membership") {
    Domain box({{0, 2}, {0, 2}});
    CHECK(box.contains(pt(1, 1)));
    CHECK_FALSE(box.contains(pt(2.5, 1)));
    const Domain ann = annulus_domain();
    CHECK_FALSE(ann.contains(pt(0, 0)));
    CHECK(ann.contains(pt(1.5, 0)));
    CHECK_FALSE(ann.contains(pt(2.5, 0)));
    CHECK(ann.in_hull(pt(0, 0)));
    Point p3(3);
    p3 << 0, 0, 0;
    CHECK_THROWS_AS(box.contains(p3), DimensionError);
    Domain half({{-1, 1}, {-1, 1}}, Mask::halfplane({0.0, 1.0, -1.0}));
    CHECK(half.contains(pt(0.5, 0.0)));
    CHECK_FALSE(half.contains(pt(-0.5, 0.0)));
    Domain disk({{-1, 1}, {-1, 1}}, Mask::disk({0, 0}, 0.5));
    CHECK(disk.contains(pt(0.1, 0.1)));
    CHECK_FALSE(disk.contains(pt(0.9, 0.9)));
}

TEST_CASE("invalid domains are rejected") {
    CHECK_THROWS_AS(Domain({{1, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(Domain({{0, 1}}, Mask::annulus({0, 0}, 1)), DimensionError);
    CHECK_THROWS_AS(Mask::parse("ellipse(1,2)"), ParseError);
}

TEST_CASE("mask presets round-trip through text") {
    for (const auto& m : {Mask(), Mask::annulus({0.5, -1}, 1.25), Mask::disk({0, 0}, 2), Mask::halfplane({1, -2, 3})}) {
        CHECK(Mask::parse(m.to_string()) == m);
    }
}

TEST_CASE("samplers are deterministic and stay inside the domain") {
    const Domain ann = annulus_domain();
    for (auto s : {SamplingStrategy::uniform, SamplingStrategy::halton, SamplingStrategy::chebyshev}) {
        CAPTURE(to_string(s));
        const auto a = sample_initial_states(ann, 500, s, 77);
        const auto b = sample_initial_states(ann, 500, s, 77);
        REQUIRE(a.size() == 500);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i] == b[i]);
            CHECK(ann.contains(a[i]));
        }
    }
    Domain box6({{0.6, 1.6}, {6.5, 8.5}, {0, 0.7}, {0, 0.3}, {0, 0.3}, {0, 0.02}});
    for (const auto& x : sample_initial_states(box6, 1000, SamplingStrategy::chebyshev, 3)) CHECK(box6.contains(x));
}

TEST_CASE("uniform marginal means") {
    Domain unit({{0, 1}, {0, 1}});
    const auto xs = sample_initial_states(unit, 10000, SamplingStrategy::uniform, 2024);
    for (int k = 0; k < 2; ++k) {
        double mean = 0;
        for (const auto& x : xs) mean += x[k];
        mean /= static_cast<double>(xs.size());
        CHECK(std::abs(mean - 0.5) < 0.02);
    }
}

TEST_CASE("chebyshev sampler follows the arcsine law") {
    Domain line({{-1, 1}});
    auto xs = sample_initial_states(line, 10000, SamplingStrategy::chebyshev, 11);
    std::vector<double> v;
    for (const auto& x : xs) v.push_back(x[0]);
    std::sort(v.begin(), v.end());
    double ks = 0;
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double cdf = 0.5 + std::asin(v[i]) / std::numbers::pi;
        ks = std::max({ks, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
    }
    CHECK(ks < 0.02);
}

TEST_CASE("halton points have lower star discrepancy than uniform draws") {
    Domain unit({{0, 1}, {0, 1}});
    auto as_pairs = [](const std::vector<Point>& xs) {
        std::vector<std::pair<double, double>> out;
        for (const auto& x : xs) out.emplace_back(x[0], x[1]);
        return out;
    };
    const double dh = oracle::star_discrepancy_2d(as_pairs(sample_initial_states(unit, 1024, SamplingStrategy::halton, 1)));
    const double du = oracle::star_discrepancy_2d(as_pairs(sample_initial_states(unit, 1024, SamplingStrategy::uniform, 1)));
    CHECK(dh < du);
}

TEST_CASE("scrambled radical inverse with the identity permutation is van der Corput") {
    const std::vector<unsigned> id2{0, 1}, id3{0, 1, 2};
    CHECK(scrambled_radical_inverse(1, 2, id2) == 0.5);
    CHECK(scrambled_radical_inverse(2, 2, id2) == 0.25);
    CHECK(scrambled_radical_inverse(3, 2, id2) == 0.75);
    CHECK(scrambled_radical_inverse(5, 3, id3) == doctest::Approx(2.0 / 3.0 + 1.0 / 9.0));
}

TEST_CASE("rejection sampling keeps the uniform law on the accepted region") {
    const Domain ann = annulus_domain();
    const auto xs = sample_initial_states(ann, 10000, SamplingStrategy::uniform, 4);
    // Brute-force oracle: independent generator, uniform on the square, reject the disk.
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> r_oracle, x_oracle, r_s, x_s;
    while (r_oracle.size() < 10000) {
        const double a = u(rng), b = u(rng);
        if (a * a + b * b >= 1.0) {
            r_oracle.push_back(std::hypot(a, b));
            x_oracle.push_back(a);
        }
    }
    for (const auto& x : xs) {
        r_s.push_back(std::hypot(x[0], x[1]));
        x_s.push_back(x[0]);
    }
    CHECK(ks_two_sample(r_s, r_oracle) < 0.03);
    CHECK(ks_two_sample(x_s, x_oracle) < 0.03);
}

TEST_CASE("rejection budget exhaustion is reported") {
    Domain empty({{-1, 1}, {-1, 1}}, Mask::annulus({0, 0}, 5));
    CHECK_THROWS_AS(sample_initial_states(empty, 1, SamplingStrategy::uniform, 0), RejectionError);
}

TEST_CASE("corners enumerate the hull vertices") {
    Domain box({{0, 1}, {2, 3}, {4, 5}});
    const auto c = box.corners();
    CHECK(c.size() == 8);
    for (const auto& x : c) CHECK(box.contains(x));
}
