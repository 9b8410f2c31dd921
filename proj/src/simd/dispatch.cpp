#include <atomic>
#include <cstdlib>
#include <string>

#include "odefit/simd.hpp"

namespace odefit::simd {

#if defined(ODEFIT_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(ODEFIT_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

namespace {

const KernelTable* initial_selection() {
    if (const char* env = std::getenv("ODEFIT_SIMD")) {
        const std::string want(env);
        if (want == "scalar") return &scalar_kernels();
    }
    if (const KernelTable* t = avx2_kernels()) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_selection()};
    return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(Isa isa) {
    const KernelTable* t = isa == Isa::scalar ? &scalar_kernels() : avx2_kernels();
    if (t == nullptr) return false;
    current().store(t, std::memory_order_relaxed);
    return true;
}

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

}  // namespace odefit::simd
