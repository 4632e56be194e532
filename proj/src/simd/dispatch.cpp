#include <atomic>
#include <cstdlib>
#include <cstring>

#include "kinetik/common.hpp"
#include "kinetik/simd.hpp"

namespace kinetik::simd {

namespace {

Isa detect() {
    const char* env = std::getenv("KINETIK_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return Isa::scalar;
    return avx2_available() ? Isa::avx2 : Isa::scalar;
}

std::atomic<int>& current() {
    static std::atomic<int> isa{static_cast<int>(detect())};
    return isa;
}

}  // namespace

bool avx2_available() {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

Isa active_isa() { return static_cast<Isa>(current().load(std::memory_order_relaxed)); }

void force_isa(Isa isa) {
    require(isa == Isa::scalar || avx2_available(), "AVX2 kernels requested on a CPU without AVX2/FMA");
    current() = static_cast<int>(isa);
}

std::string isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

double dot(const double* a, const double* b, std::size_t n) {
    return active_isa() == Isa::avx2 ? avx2::dot(a, b, n) : scalar::dot(a, b, n);
}

void spline2_eval(const Spline2View& s, const double* xs, const double* ys, double* out, std::size_t n) {
    if (active_isa() == Isa::avx2)
        avx2::spline2_eval(s, xs, ys, out, n);
    else
        scalar::spline2_eval(s, xs, ys, out, n);
}

}  // namespace kinetik::simd
