#include <cstdlib>
#include <string>

#include "tables.hpp"
#include "xpf/errors.hpp"

namespace xpf::simd {

std::string_view isa_name(Isa isa) {
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

bool isa_supported(Isa isa) {
    switch (isa) {
    case Isa::scalar:
        return true;
    case Isa::avx2:
#if defined(XPF_HAVE_AVX2_TU)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
               __builtin_cpu_supports("popcnt");
#else
        return false;
#endif
    }
    return false;
}

const KernelTable& kernels(Isa isa) {
    if (!isa_supported(isa)) {
        throw InvalidArgument("SIMD level not supported on this CPU: " + std::string(isa_name(isa)));
    }
#if defined(XPF_HAVE_AVX2_TU)
    if (isa == Isa::avx2) {
        return detail::avx2_table;
    }
#endif
    return detail::scalar_table;
}

namespace {

const KernelTable& select() {
    if (const char* forced = std::getenv("XPF_SIMD")) {
        const std::string f(forced);
        if (f == "scalar") {
            return detail::scalar_table;
        }
        if (f == "avx2" && isa_supported(Isa::avx2)) {
            return kernels(Isa::avx2);
        }
    }
    return isa_supported(Isa::avx2) ? kernels(Isa::avx2) : detail::scalar_table;
}

} // namespace

const KernelTable& active() {
    static const KernelTable& table = select();
    return table;
}

} // namespace xpf::simd
