#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "odefit/simd.hpp"

using namespace odefit;

namespace {

std::vector<double> random_vector(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
    const auto& k = simd::scalar_kernels();
    const auto a = random_vector(37, 1), b = random_vector(37, 2);
    double dot = 0, sq = 0, dist = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        sq += a[i] * a[i];
        dist += (a[i] - b[i]) * (a[i] - b[i]);
    }
    CHECK(k.dot(a.data(), b.data(), a.size()) == doctest::Approx(dot).epsilon(1e-14));
    CHECK(k.squared_norm(a.data(), a.size()) == doctest::Approx(sq).epsilon(1e-14));
    CHECK(k.squared_distance(a.data(), b.data(), a.size()) == doctest::Approx(dist).epsilon(1e-14));
    auto y = b;
    k.axpy(0.5, a.data(), y.data(), y.size());
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == b[i] + 0.5 * a[i]);
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
    const auto* wide = simd::avx2_kernels();
    if (!wide) {
        MESSAGE("avx2 variant unavailable on this machine");
        return;
    }
    const auto& ref = simd::scalar_kernels();
    // Lengths around the vector width exercise the remainder loops.
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 100u, 924u, 18564u}) {
        CAPTURE(n);
        const auto a = random_vector(n, 10 + static_cast<unsigned>(n)), b = random_vector(n, 20 + static_cast<unsigned>(n));
        // Reassociation error grows like sqrt(n) relative to the magnitude of the sum.
        const double scale = 1e-15 * std::sqrt(static_cast<double>(n) + 1.0);
        const double dref = ref.dot(a.data(), b.data(), n);
        const double nref = ref.squared_norm(a.data(), n);
        const double sref = ref.squared_distance(a.data(), b.data(), n);
        CHECK(std::abs(wide->dot(a.data(), b.data(), n) - dref) <= scale * std::max(1.0, std::sqrt(nref * ref.squared_norm(b.data(), n))));
        CHECK(std::abs(wide->squared_norm(a.data(), n) - nref) <= scale * std::max(1.0, nref));
        CHECK(std::abs(wide->squared_distance(a.data(), b.data(), n) - sref) <= scale * std::max(1.0, sref));
        auto y1 = b, y2 = b;
        wide->axpy(-1.25, a.data(), y1.data(), n);
        ref.axpy(-1.25, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15);
    }
}

TEST_CASE("runtime selection switches the active table") {
    const auto before = simd::active().isa;
    REQUIRE(simd::select(simd::Isa::scalar));
    CHECK(simd::active().isa == simd::Isa::scalar);
    const bool has_avx2 = simd::avx2_kernels() != nullptr;
    CHECK(simd::select(simd::Isa::avx2) == has_avx2);
    if (has_avx2) CHECK(simd::active().isa == simd::Isa::avx2);
    simd::select(before);
    CHECK(simd::isa_name(simd::Isa::scalar) == "scalar");
    CHECK(simd::isa_name(simd::Isa::avx2) == "avx2");
}
