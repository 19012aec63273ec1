#pragma once

#include <cmath>
#include <cstdint>
#include <array>

namespace ddpc {

/**
 * Counter-based random number generator (Philox4x32-10).
 *
 * A generator instance is identified by (seed, stream): the 64-bit seed is
 * the Philox key and the 64-bit stream id occupies the upper counter words,
 * so any two distinct (seed, stream) pairs produce statistically independent
 * sequences by construction. Jumping to an arbitrary position is O(1).
 *
 * Stream-splitting convention used across this project:
 *   - Monte Carlo run i owns streams [i*kStreamsPerRun, (i+1)*kStreamsPerRun).
 *   - Within a run, fixed offsets select the purpose (offline input, offline
 *     disturbance, offline noise, online disturbance, online noise), so all
 *     controller variants replay identical online realizations.
 */
class CounterRng {
public:
    explicit CounterRng(uint64_t seed, uint64_t stream = 0)
        : key_(seed), stream_(stream) {}

    uint64_t seed() const { return key_; }
    uint64_t stream() const { return stream_; }

    /// Independent generator derived from this one; pure function of (seed, stream, id).
    CounterRng substream(uint64_t id) const {
        return CounterRng(key_, splitmix64(stream_ ^ (0x9E3779B97F4A7C15ull * (id + 1))));
    }

    /// Raw Philox4x32-10 block for the given counter (stateless KAT entry point).
    static std::array<uint32_t, 4> block(uint64_t key, uint64_t counter_lo, uint64_t counter_hi) {
        uint32_t c0 = static_cast<uint32_t>(counter_lo);
        uint32_t c1 = static_cast<uint32_t>(counter_lo >> 32);
        uint32_t c2 = static_cast<uint32_t>(counter_hi);
        uint32_t c3 = static_cast<uint32_t>(counter_hi >> 32);
        uint32_t k0 = static_cast<uint32_t>(key);
        uint32_t k1 = static_cast<uint32_t>(key >> 32);
        for (int r = 0; r < 10; ++r) {
            uint64_t p0 = kM0 * static_cast<uint64_t>(c0);
            uint64_t p1 = kM1 * static_cast<uint64_t>(c2);
            uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
            uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
            uint32_t n0 = hi1 ^ c1 ^ k0;
            uint32_t n1 = lo1;
            uint32_t n2 = hi0 ^ c3 ^ k1;
            uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += kW0; k1 += kW1;
        }
        return {c0, c1, c2, c3};
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        if (pending_) {
            pending_ = false;
            return to_unit(cached_hi_, cached_lo_);
        }
        auto b = block(key_, counter_++, stream_);
        cached_hi_ = b[2];
        cached_lo_ = b[3];
        pending_ = true;
        return to_unit(b[0], b[1]);
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_normal_) {
            have_normal_ = false;
            return cached_normal_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_normal_ = r * std::sin(a);
        have_normal_ = true;
        return r * std::cos(a);
    }

    /// Zero-mean unit-variance uniform (uniform on [-sqrt(3), sqrt(3))).
    double uniform_unit_variance() {
        return (2.0 * uniform01() - 1.0) * 1.7320508075688772935;
    }

private:
    static constexpr uint64_t kM0 = 0xD2511F53ull;
    static constexpr uint64_t kM1 = 0xCD9E8D57ull;
    static constexpr uint32_t kW0 = 0x9E3779B9u;
    static constexpr uint32_t kW1 = 0xBB67AE85u;

    static double to_unit(uint32_t hi, uint32_t lo) {
        uint64_t bits = (static_cast<uint64_t>(hi) << 32) | lo;
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

    static uint64_t splitmix64(uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    uint64_t key_;
    uint64_t stream_;
    uint64_t counter_ = 0;
    uint32_t cached_hi_ = 0, cached_lo_ = 0;
    bool pending_ = false;
    double cached_normal_ = 0.0;
    bool have_normal_ = false;
};

}  // namespace ddpc
