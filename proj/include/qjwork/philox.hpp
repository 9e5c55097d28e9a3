// Philox4x32-10 counter-based generator
//
// Salmon et al., "Parallel random numbers: as easy as 1, 2, 3" (SC 2011).
// Output is a pure function of (key, counter), so every random draw can be
// addressed by (seed, trajectory index, event counter, stream tag) and the
// ensemble is independent of thread count and scheduling.

#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace qjwork {

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit constexpr Philox4x32(Key key) : key_(key) {}
    explicit constexpr Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    constexpr Counter operator()(Counter ctr) const {
        Key key = key_;
        ctr = round(ctr, key);
        for (int r = 1; r < 10; ++r) {
            key[0] += kW0;
            key[1] += kW1;
            ctr = round(ctr, key);
        }
        return ctr;
    }

    constexpr const Key& key() const { return key_; }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static constexpr Counter round(const Counter& c, const Key& k) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }

    Key key_;
};

/// Uniform doubles in [0, 1) addressed by (trajectory, counter, stream).
class KeyedUniforms {
public:
    explicit constexpr KeyedUniforms(std::uint64_t seed) : gen_(seed) {}

    constexpr std::pair<double, double> pair(std::uint64_t trajectory, std::uint32_t counter,
                                             std::uint32_t stream) const {
        const auto out = gen_({static_cast<std::uint32_t>(trajectory),
                               static_cast<std::uint32_t>(trajectory >> 32), counter, stream});
        return {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
    }

    static constexpr double to_unit(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

private:
    Philox4x32 gen_;
};

} // namespace qjwork
