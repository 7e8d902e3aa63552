#ifndef AVLEDGER_RNG_HPP
#define AVLEDGER_RNG_HPP

#include <array>
#include <cstdint>
#include <random>

namespace avl {

// Seeded generator used everywhere randomness is needed. uniform() is built
// from raw mt19937_64 output rather than std distributions so the stream is
// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // [lo, hi] inclusive; modulo bias is irrelevant at simulation scale.
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(engine_() % span);
    }

    std::array<std::uint8_t, 32> bytes32() {
        std::array<std::uint8_t, 32> out{};
        for (std::size_t i = 0; i < out.size(); i += 8) {
            std::uint64_t v = engine_();
            for (std::size_t j = 0; j < 8; ++j) out[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
        }
        return out;
    }

    Rng fork() { return Rng(engine_()); }

private:
    std::mt19937_64 engine_;
};

}  // namespace avl

#endif
