#pragma once

#include <cstdint>
#include <limits>

namespace xpf {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Derive an independent child seed from a parent and a stream tag.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
    return splitmix64(parent ^ splitmix64(tag + 0x632BE59BD9B4E019ull));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag_a, std::uint64_t tag_b) {
    return derive_seed(derive_seed(parent, tag_a), tag_b);
}

/// Counter-based generator: output n is a pure function of (key, n), so a
/// per-pixel stream keyed by (seed, pixel index) is order independent.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
  public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() {
        return splitmix64(key_ + 0xD1B54A32D192ED03ull * ++counter_);
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace xpf
