#include "kfhe/modarith.hpp"

#include "kfhe/errors.hpp"

namespace kfhe {

u64 pow_mod(u64 base, u64 exp, u64 mod) {
    u128 result = 1 % mod;
    u128 b = base % mod;
    while (exp != 0) {
        if (exp & 1) result = (result * b) % mod;
        b = (b * b) % mod;
        exp >>= 1;
    }
    return static_cast<u64>(result);
}

u64 inv_mod(u64 a, u64 mod) {
    if (a % mod == 0) throw ParameterError("inv_mod: zero has no inverse");
    return pow_mod(a, mod - 2, mod);
}

bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    unsigned s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    // This witness set is deterministic for n < 3.3 * 10^24.
    for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        u64 x = pow_mod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (unsigned r = 1; r < s; ++r) {
            x = static_cast<u64>((static_cast<u128>(x) * x) % n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

std::vector<u64> prime_factors(u64 n) {
    std::vector<u64> factors;
    for (u64 p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
        if (n % p == 0) {
            factors.push_back(p);
            while (n % p == 0) n /= p;
        }
    }
    if (n > 1) factors.push_back(n);
    return factors;
}

u64 smallest_primitive_root(u64 q) {
    if (q == 2) return 1;
    const u64 order = q - 1;
    const auto factors = prime_factors(order);
    for (u64 g = 2; g < q; ++g) {
        bool generator = true;
        for (u64 f : factors) {
            if (pow_mod(g, order / f, q) == 1) {
                generator = false;
                break;
            }
        }
        if (generator) return g;
    }
    throw ParameterError("no primitive root found; modulus is not prime");
}

}  // namespace kfhe
