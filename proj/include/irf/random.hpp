#ifndef IRF_RANDOM_HPP
#define IRF_RANDOM_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "irf/errors.hpp"

namespace irf {

/// Purpose tags used when deriving child streams. Keeping them in one place
/// makes it obvious that two call sites never share a stream by accident.
enum class StreamTag : std::uint64_t {
    Root = 0,
    Repetition = 1,
    Dataset = 2,
    Estimator = 3,
    Subsample = 4,
    Tree = 5,
    Outer = 6,
    Inner = 7,
    Redraw = 8,
    Trial = 9,
    Probe = 10,
};

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                                std::uint32_t& lo) noexcept {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

// Philox4x32-10 block function (Salmon et al., SC'11).
inline constexpr std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                                         std::array<std::uint32_t, 2> key) noexcept {
    constexpr std::uint32_t kMul0 = 0xD2511F53U;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57U;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9U;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85U;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
        mulhilo32(kMul0, ctr[0], hi0, lo0);
        mulhilo32(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

}  // namespace detail

/// Counter-based splittable random stream.
///
/// A stream is identified by two 64-bit words derived from the master seed and
/// the chain of (tag, index) pairs used to reach it; its output is the
/// Philox4x32-10 keystream over a block counter. Child streams therefore depend
/// only on their derivation path, never on how much the parent has been
/// consumed or on which thread asks for them.
///
/// Satisfies UniformRandomBitGenerator. Not thread-safe; give each worker its
/// own child.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t seed = 0) noexcept
        : key_(detail::splitmix64(seed ^ 0x243F6A8885A308D3ULL)),
          discriminator_(detail::splitmix64(seed + 0x13198A2E03707344ULL)) {}

    /// Independent stream for (tag, index) below this one.
    RandomStream child(StreamTag tag, std::uint64_t index) const noexcept {
        RandomStream out;
        const auto t = static_cast<std::uint64_t>(tag);
        out.key_ = detail::splitmix64(key_ ^ detail::splitmix64(t * 0xA0761D6478BD642FULL + index));
        out.discriminator_ =
            detail::splitmix64(discriminator_ + detail::splitmix64(index ^ (t << 48)) + 0xE7037ED1A0B428DBULL);
        return out;
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (buffered_ == 0) {
            refill();
        }
        --buffered_;
        return buffer_[buffered_];
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, bound) by Lemire's multiply-and-reject method.
    std::uint64_t below(std::uint64_t bound) {
        require(bound > 0, ErrorKind::InvalidArgument, "RandomStream::below needs bound > 0");
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform01() < p; }

    /// Standard normal draw (Box-Muller, one variate per call).
    double normal() noexcept {
        double u1 = uniform01();
        while (u1 <= 0.0) {
            u1 = uniform01();
        }
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    void refill() noexcept {
        const std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
            static_cast<std::uint32_t>(discriminator_), static_cast<std::uint32_t>(discriminator_ >> 32)};
        const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(key_),
                                                  static_cast<std::uint32_t>(key_ >> 32)};
        const auto block = detail::philox4x32(ctr, key);
        ++counter_;
        // Served back to front by operator().
        buffer_[1] = (static_cast<std::uint64_t>(block[1]) << 32) | block[0];
        buffer_[0] = (static_cast<std::uint64_t>(block[3]) << 32) | block[2];
        buffered_ = 2;
    }

    std::uint64_t key_ = 0;
    std::uint64_t discriminator_ = 0;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
};

}  // namespace irf

#endif  // IRF_RANDOM_HPP
