#pragma once

// Scheme parameters: the prime modulus chain, negacyclic roots, NTT split
// plans and the precomputed twiddle-factor matrices (plain and byte-segmented).

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kfhe/matrix.hpp"
#include "kfhe/modarith.hpp"

namespace kfhe {

enum class Direction { forward, inverse };

struct PrimeInfo {
    u32 value = 0;
    u32 generator = 0;  // smallest primitive root
    u32 psi = 0;        // primitive 2n-th root of unity
    u32 psi_inv = 0;
    u32 n_inv = 0;

    friend bool operator==(const PrimeInfo&, const PrimeInfo&) = default;
};

struct ModulusChain {
    std::size_t n = 0;
    std::vector<PrimeInfo> q;  // ciphertext primes q_0 .. q_L
    std::vector<PrimeInfo> p;  // special primes p_0 .. p_{K-1}

    std::vector<u32> q_values() const;
    std::vector<u32> p_values() const;
    friend bool operator==(const ModulusChain&, const ModulusChain&) = default;
};

// Returns l_max + 1 + k distinct primes of exactly bit_size bits, all = 1 mod 2n,
// found by a descending search from 2^bit_size. The k largest become the special
// primes so that P exceeds every decomposition slice of equal width.
ModulusChain generate_prime_chain(std::size_t n, std::size_t l_max, std::size_t k,
                                  unsigned bit_size);

// Chain over caller-supplied primes; validates primality and q = 1 mod 2n.
ModulusChain chain_from_primes(std::size_t n, const std::vector<u32>& q,
                               const std::vector<u32>& p);

PrimeInfo make_prime_info(u32 q, std::size_t n);

// psi = g^((q-1)/2n) for the smallest primitive root g; psi^n = -1 mod q.
u32 find_negacyclic_root(u32 q, std::size_t n);

struct NttPlan {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::size_t n() const { return n1 * n2; }
    friend bool operator==(const NttPlan&, const NttPlan&) = default;
};

// Largest inner split n1 with n1 <= n2 and n1 <= 2^15 (n1 * 255^2 < 2^31).
NttPlan build_ntt_plan(std::size_t n);

inline constexpr std::size_t kMaxSplit = std::size_t{1} << 15;

// Twiddle matrices of the three-GEMM NTT for one prime and direction.
//
// Forward, with psi of order 2n, psi1 = psi^n2 (order 2*n1), psi2 = psi^n1 (order 2*n2):
//   w1[i][j] = psi1^(2ij+j)   (n1 x n1)
//   w2[i][j] = psi^(2ij+j)    (n1 x n2)
//   w3[i][j] = psi2^(2ij)     (n2 x n2)
// Inverse uses psi^-1 and carries the +i term on the row index of w1, which folds
// the psi^-n output correction into the first matrix. The 1/n factor is not
// included; the transform applies it at its output.
struct TwiddleMatrices {
    Direction direction = Direction::forward;
    u32 q = 0;
    NttPlan plan;
    U32Matrix w1;
    U32Matrix w2;
    U32Matrix w3;
};

TwiddleMatrices build_twiddles(const NttPlan& plan, u32 q, u32 psi, Direction direction);

struct SegmentedTwiddles {
    BytePlanes w1;  // row-major: left GEMM operand
    BytePlanes w2;  // row-major
    BytePlanes w3;  // column-major: right GEMM operand
};

SegmentedTwiddles segment_twiddles(const TwiddleMatrices& tw);

// Everything one prime needs to run any NTT backend at degree n.
struct PrimeTwiddles {
    Modulus mod;
    u32 psi = 0;
    u32 psi_inv = 0;
    u32 n_inv = 0;
    u32 n_inv_shoup = 0;
    TwiddleMatrices fwd;
    TwiddleMatrices inv;
    SegmentedTwiddles seg_fwd;
    SegmentedTwiddles seg_inv;
    // Butterfly tables: powers of psi (resp. psi^-1) in bit-reversed order.
    std::vector<u32> psi_rev;
    std::vector<u32> psi_rev_shoup;
    std::vector<u32> psi_inv_rev;
    std::vector<u32> psi_inv_rev_shoup;
};

class TwiddleFactorSet {
public:
    TwiddleFactorSet() = default;
    TwiddleFactorSet(std::size_t n, const std::vector<u32>& primes);

    std::size_t n() const { return n_; }
    const NttPlan& plan() const { return plan_; }
    std::size_t size() const { return entries_.size(); }

    bool contains(u32 q) const;
    // Throws ParameterError when q has no entry.
    const PrimeTwiddles& at(u32 q) const;

    // Test hook: mutable access used for fault injection.
    PrimeTwiddles& mutable_entry(u32 q);

private:
    std::size_t n_ = 0;
    NttPlan plan_;
    std::vector<PrimeTwiddles> entries_;
};

PrimeTwiddles build_prime_twiddles(std::size_t n, u32 q);

struct CkksParams {
    std::size_t n = 0;
    std::size_t l_max = 0;
    std::size_t k = 0;
    std::size_t dnum = 1;
    std::size_t alpha = 1;
    unsigned scale_bits = 40;
    unsigned bit_size = 30;
    ModulusChain chain;

    std::size_t slots() const { return n / 2; }
    double default_scale() const;

    // q_0 .. q_level
    std::vector<u32> q_basis(std::size_t level) const;
    std::vector<u32> p_basis() const;
    // q_0 .. q_level followed by all special primes
    std::vector<u32> extended_basis(std::size_t level) const;

    // Total bit width of all primes (sum of bit lengths).
    unsigned log_pq() const;

    // Throws ParameterError when an invariant is broken.
    void validate() const;

    // FNV-1a over the structural fields and primes; stable across runs and builds.
    u64 hash() const;

    friend bool operator==(const CkksParams&, const CkksParams&) = default;
};

CkksParams make_params(std::size_t n, std::size_t l_max, std::size_t k, std::size_t dnum,
                       unsigned bit_size, unsigned scale_bits = 40);

// Named parameter sets. Throws ParameterError for unknown names.
CkksParams preset(const std::string& name);
std::vector<std::string> preset_names();

nlohmann::json to_json(const CkksParams& params);
CkksParams params_from_json(const nlohmann::json& doc);
CkksParams load_params(const std::string& preset_or_path);

}  // namespace kfhe
