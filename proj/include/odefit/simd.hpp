#pragma once

// Dense vector kernels used on the hot paths (sequential updates, learned
// RHS evaluation, monitor errors). Every kernel has a scalar reference
// implementation; wider variants are picked once at startup from the CPU
// feature bits and can be overridden with ODEFIT_SIMD=scalar|avx2.

#include <cstddef>
#include <span>
#include <string_view>

namespace odefit::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
    Isa isa;
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*squared_norm)(const double* a, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // sum_i (a_i - b_i)^2
    double (*squared_distance)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks the features.
const KernelTable* avx2_kernels();

const KernelTable& active();

// Forces a variant. Returns false (and leaves the selection unchanged) when
// the requested variant is unavailable on this machine.
bool select(Isa isa);

std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline double squared_norm(std::span<const double> a) {
    return active().squared_norm(a.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    return active().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace odefit::simd
