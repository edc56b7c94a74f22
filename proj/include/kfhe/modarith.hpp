#pragma once

// Scalar modular arithmetic over word-size primes (< 2^32).

#include <cstdint>
#include <vector>

namespace kfhe {

using u32 = std::uint32_t;
using u64 = std::uint64_t;
using u128 = unsigned __int128;

// A prime modulus below 2^32 with a precomputed Barrett constant for
// reducing any 64-bit value.
class Modulus {
public:
    Modulus() = default;
    explicit Modulus(u32 q) : q_(q), ratio_(q > 1 ? ~u64{0} / q : 0) {}

    u32 value() const { return q_; }

    // x mod q for any 64-bit x.
    u32 reduce(u64 x) const {
        u64 est = static_cast<u64>((static_cast<u128>(x) * ratio_) >> 64);
        u64 r = x - est * q_;
        while (r >= q_) r -= q_;
        return static_cast<u32>(r);
    }

    u32 mul(u32 a, u32 b) const { return reduce(static_cast<u64>(a) * b); }

    u32 add(u32 a, u32 b) const {
        u64 s = static_cast<u64>(a) + b;
        return static_cast<u32>(s >= q_ ? s - q_ : s);
    }

    u32 sub(u32 a, u32 b) const {
        return a >= b ? a - b : static_cast<u32>(static_cast<u64>(a) + q_ - b);
    }

    u32 neg(u32 a) const { return a == 0 ? 0 : q_ - a; }

    // Largest number of products of two residues that can be added to a
    // reduced accumulator without overflowing 64 bits.
    u64 lazy_terms() const {
        u64 m = static_cast<u64>(q_ - 1);
        if (m == 0) return ~u64{0};
        u64 sq = m * m;
        return (~u64{0} - m) / sq;
    }

    friend bool operator==(const Modulus& a, const Modulus& b) { return a.q_ == b.q_; }

private:
    u32 q_ = 0;
    u64 ratio_ = 0;
};

// Shoup-style multiplication by a fixed operand w: precompute floor(w * 2^32 / q).
inline u32 shoup_precompute(u32 w, u32 q) {
    return static_cast<u32>((static_cast<u64>(w) << 32) / q);
}

// x * w mod q, with x < q and w_shoup = shoup_precompute(w, q).
inline u32 mul_shoup(u32 x, u32 w, u32 w_shoup, u32 q) {
    u64 hi = (static_cast<u64>(x) * w_shoup) >> 32;
    u64 r = static_cast<u64>(x) * w - hi * q;
    return static_cast<u32>(r >= q ? r - q : r);  // r < 2q
}

u64 pow_mod(u64 base, u64 exp, u64 mod);
u64 inv_mod(u64 a, u64 mod);  // mod must be prime, a != 0 mod it

// Deterministic Miller-Rabin for all 64-bit inputs.
bool is_prime(u64 n);

// Distinct prime factors of n (trial division, n < 2^64 but intended for n < 2^32).
std::vector<u64> prime_factors(u64 n);

// Smallest generator of the multiplicative group mod prime q.
u64 smallest_primitive_root(u64 q);

inline bool is_power_of_two(u64 x) { return x != 0 && (x & (x - 1)) == 0; }

inline unsigned log2_exact(u64 x) {
    unsigned r = 0;
    while ((u64{1} << r) < x) ++r;
    return r;
}

inline u32 bit_reverse(u32 x, unsigned bits) {
    u32 r = 0;
    for (unsigned i = 0; i < bits; ++i) {
        r = (r << 1) | (x & 1);
        x >>= 1;
    }
    return r;
}

}  // namespace kfhe
