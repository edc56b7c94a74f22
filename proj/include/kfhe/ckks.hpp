#pragma once

// RNS-CKKS: encoding, keys, encryption and the homomorphic operations, all
// built from the kernels in kernels.hpp and ntt.hpp.
//
// Conventions:
//   ct = (b, a) with b = -a*s + m + e, decryption m ~ b + a*s.
//   Ciphertexts and plaintexts live in the NTT domain between operations.
//   Level l means the basis q_0 .. q_l.
//   Scales are exact rationals. Multiplying scales and dividing by q_l on
//   rescale never rounds, so two ciphertexts built along the same path have
//   identical scales.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "kfhe/ntt.hpp"
#include "kfhe/params.hpp"
#include "kfhe/rns.hpp"

namespace kfhe {

using Scale = boost::multiprecision::cpp_rational;
using Complex = std::complex<double>;
using Rng = std::mt19937_64;

long double to_long_double(const Scale& s);
Scale power_of_two_scale(unsigned bits);

struct Plaintext {
    RnsPolynomial poly;
    Scale scale;
    std::size_t level = 0;
};

struct Ciphertext {
    RnsPolynomial b;
    RnsPolynomial a;
    Scale scale;
    std::size_t level = 0;

    Domain domain() const { return b.domain(); }
    std::size_t n() const { return b.n(); }
};

struct SecretKey {
    std::vector<std::int8_t> coeffs;  // ternary, exactly hamming_weight nonzeros
    std::size_t hamming_weight = 0;
    RnsPolynomial s;                  // over q_0..q_L, p_0..p_{K-1}; NTT domain
};

struct PublicKey {
    RnsPolynomial b;  // over q_0..q_L; NTT domain
    RnsPolynomial a;
};

// dnum pairs (b_j, a_j) over q_0..q_L, p_0..p_{K-1} in the NTT domain with
//   b_j = -a_j*s + e_j + g_j*s',  g_j = P mod q_i on the rows of slice j, 0 elsewhere.
struct SwitchingKey {
    std::vector<RnsPolynomial> b;
    std::vector<RnsPolynomial> a;

    std::size_t size() const { return b.size(); }
};

struct KeySet {
    SecretKey secret;
    PublicKey pub;
    SwitchingKey relin;                        // s^2 -> s
    std::map<std::size_t, SwitchingKey> rotation;  // r -> (X -> X^(5^-r))(s) -> s
    SwitchingKey conjugation;                  // s(X^-1) -> s
};

class CkksContext {
public:
    explicit CkksContext(CkksParams params, NttBackend backend = NttBackend::butterfly);

    const CkksParams& params() const { return params_; }
    const TwiddleFactorSet& twiddles() const { return twiddles_; }
    NttBackend backend() const { return backend_; }
    void set_backend(NttBackend b) { backend_ = b; }
    std::size_t n() const { return params_.n; }
    std::size_t slots() const { return params_.slots(); }
    std::size_t max_level() const { return params_.l_max; }

    RnsPolynomial to_ntt(const RnsPolynomial& p) const;
    RnsPolynomial to_coeff(const RnsPolynomial& p) const;

    // Slot vectors: at most n/2 values, missing slots are zero.
    Plaintext encode(const std::vector<Complex>& values, const Scale& scale, std::size_t level) const;
    Plaintext encode(const std::vector<Complex>& values) const;  // default scale, top level
    std::vector<Complex> decode(const Plaintext& pt) const;

    KeySet keygen(u64 seed, const std::vector<std::size_t>& rotations = {}) const;
    SwitchingKey make_switching_key(const SecretKey& sk, const RnsPolynomial& s_from, Rng& rng) const;
    SwitchingKey make_rotation_key(const SecretKey& sk, std::size_t r, Rng& rng) const;

    Ciphertext encrypt(const Plaintext& pt, const PublicKey& pk, Rng& rng) const;
    Plaintext decrypt(const Ciphertext& ct, const SecretKey& sk) const;

    Ciphertext hadd(const Ciphertext& x, const Ciphertext& y) const;
    Ciphertext hsub(const Ciphertext& x, const Ciphertext& y) const;
    Ciphertext cmult(const Ciphertext& ct, const Plaintext& pt) const;
    Ciphertext hmult(const Ciphertext& x, const Ciphertext& y, const SwitchingKey& relin) const;
    Ciphertext hrotate(const Ciphertext& ct, std::size_t r, const KeySet& keys) const;
    Ciphertext hrotate(const Ciphertext& ct, std::size_t r, const SwitchingKey& rot_key) const;
    Ciphertext hconjugate(const Ciphertext& ct, const SwitchingKey& conj_key) const;
    Ciphertext rescale(const Ciphertext& ct) const;
    Ciphertext drop_to_level(const Ciphertext& ct, std::size_t level) const;

    // d over q_0..q_l (NTT domain) -> (u0, u1) over the same basis with
    // u0 + u1*s ~ d*s' where ksk switches s' to s.
    std::pair<RnsPolynomial, RnsPolynomial> key_switch(const RnsPolynomial& d,
                                                       const SwitchingKey& ksk) const;

private:
    // Signed small coefficients to RNS rows of `basis`, NTT domain.
    RnsPolynomial small_to_ntt(const std::vector<std::int64_t>& coeffs,
                               const std::vector<u32>& basis) const;
    RnsPolynomial uniform_ntt(const std::vector<u32>& basis, Rng& rng) const;
    std::vector<std::int64_t> gaussian(Rng& rng) const;
    RnsPolynomial mod_down(const RnsPolynomial& acc, std::size_t level) const;

    CkksParams params_;
    NttBackend backend_;
    TwiddleFactorSet twiddles_;
    std::vector<u32> all_primes_;
    std::vector<std::size_t> rot_group_;  // 5^j mod 2n
    std::vector<Complex> ksi_pows_;       // exp(2 pi i k / 2n), k in [0, 2n]
};

// Noise parameters.
inline constexpr double kErrorSigma = 3.2;
inline constexpr double kErrorBound = 6 * kErrorSigma;

// max_i |x_i - y_i| / max(max_i |y_i|, 1)
double relative_error(const std::vector<Complex>& x, const std::vector<Complex>& y);

// Length-prefixed binary form: "TFHE1", kind byte, params hash (u64), payload
// length (u64), payload. Integers are little-endian; residues are u32.
enum class ObjectKind : std::uint8_t {
    ciphertext = 1,
    plaintext = 2,
    secret_key = 3,
    public_key = 4,
    switching_key = 5,
};

std::vector<std::uint8_t> serialize(const Ciphertext& ct, const CkksParams& params);
std::vector<std::uint8_t> serialize(const Plaintext& pt, const CkksParams& params);
std::vector<std::uint8_t> serialize(const SecretKey& sk, const CkksParams& params);
std::vector<std::uint8_t> serialize(const PublicKey& pk, const CkksParams& params);
std::vector<std::uint8_t> serialize(const SwitchingKey& ksk, const CkksParams& params);

// Throw FormatError on bad magic, wrong kind, truncation or a params-hash mismatch.
Ciphertext deserialize_ciphertext(const std::vector<std::uint8_t>& bytes, const CkksParams& params);
Plaintext deserialize_plaintext(const std::vector<std::uint8_t>& bytes, const CkksParams& params);
SecretKey deserialize_secret_key(const std::vector<std::uint8_t>& bytes, const CkksParams& params);
PublicKey deserialize_public_key(const std::vector<std::uint8_t>& bytes, const CkksParams& params);
SwitchingKey deserialize_switching_key(const std::vector<std::uint8_t>& bytes,
                                       const CkksParams& params);

}  // namespace kfhe
