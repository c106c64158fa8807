#include "xpf/parallel.hpp"

#include <cstdlib>
#include <string>

namespace xpf {

unsigned default_workers() {
    if (const char* env = std::getenv("XPF_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) {
            return static_cast<unsigned>(n);
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace xpf
