#pragma once

#include <cstdint>

namespace choquard {

// xorshift64* (Vigna 2014): 64-bit xorshift state with a multiplicative
// output scramble. Seeds pass through splitmix64 so that 0 and nearby
// integers give well-separated, nonzero states.
class Xorshift64Star {
public:
    explicit Xorshift64Star(std::uint64_t seed) : state_(splitmix64(seed)) {
        if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
    }

    std::uint64_t next() noexcept {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1DULL;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi) noexcept {
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    static std::uint64_t splitmix64(std::uint64_t x) noexcept {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    // Independent stream for item `index` of a run seeded with `seed`.
    static Xorshift64Star derived(std::uint64_t seed, std::uint64_t index) {
        return Xorshift64Star(seed ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
    }

private:
    std::uint64_t state_;
};

}  // namespace choquard
