#pragma once

// Residue-number-system polynomials and the basis-conversion machinery
// (CRT decompose/compose, fast basis conversion, GKS slice decomposition).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "kfhe/modarith.hpp"

namespace kfhe {

using BigInt = boost::multiprecision::cpp_int;

enum class Domain { coefficient, ntt };

const char* to_string(Domain d);

// A degree-n polynomial as one residue row per prime of `basis`.
// Rows are stored contiguously; row i holds the coefficients (or NTT values) mod basis[i].
class RnsPolynomial {
public:
    RnsPolynomial() = default;
    // Zero polynomial.
    RnsPolynomial(std::size_t n, std::vector<u32> basis, Domain domain = Domain::coefficient);
    // Takes ownership of row data (basis.size() * n residues, each < its prime).
    RnsPolynomial(std::size_t n, std::vector<u32> basis, Domain domain, std::vector<u32> data);

    std::size_t n() const { return n_; }
    std::size_t size() const { return basis_.size(); }  // row count
    const std::vector<u32>& basis() const { return basis_; }
    u32 prime(std::size_t i) const { return basis_[i]; }
    Domain domain() const { return domain_; }
    void set_domain(Domain d) { domain_ = d; }

    std::span<const u32> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }
    std::span<u32> row(std::size_t i) { return {data_.data() + i * n_, n_}; }
    const std::vector<u32>& data() const { return data_; }
    std::vector<u32>& data() { return data_; }

    // Rows [first, first + count) as a new polynomial.
    RnsPolynomial rows(std::size_t first, std::size_t count) const;
    // Rows whose primes are listed in `primes` (each must be present), in that order.
    RnsPolynomial select(const std::vector<u32>& primes) const;

    // True when every residue is below its row's prime.
    bool residues_in_range() const;
    bool is_zero() const;

    friend bool operator==(const RnsPolynomial&, const RnsPolynomial&) = default;

private:
    std::size_t n_ = 0;
    std::vector<u32> basis_;
    Domain domain_ = Domain::coefficient;
    std::vector<u32> data_;
};

// Throws MismatchError unless a and b share degree, basis and domain.
void require_compatible(const RnsPolynomial& a, const RnsPolynomial& b);

BigInt basis_product(const std::vector<u32>& basis);

// Row i = coeffs mod basis[i]. Coefficients must lie in [0, prod(basis)).
RnsPolynomial crt_decompose(const std::vector<BigInt>& coeffs, const std::vector<u32>& basis);

// Unique representatives in [0, prod(basis)). Coefficient domain only.
std::vector<BigInt> crt_compose(const RnsPolynomial& poly);

// Approximate fast basis conversion from poly's basis to `target`:
//   b_j = sum_i [a_i * (Q/q_i)^-1]_{q_i} * (Q/q_i) mod p_j
// which equals the exact value plus e*Q with 0 <= e < |source basis|.
// Target primes that also appear in the source are copied unchanged.
RnsPolynomial fast_basis_conv(const RnsPolynomial& poly, const std::vector<u32>& target);

// Splits a full (L+1)-row polynomial into dnum slices of alpha = (L+1)/dnum rows.
std::vector<RnsPolynomial> gks_decompose(const RnsPolynomial& poly, std::size_t dnum);

// Slices of `alpha` consecutive rows; the last slice may be shorter. Used at
// levels below the top where the basis no longer divides evenly.
std::vector<RnsPolynomial> split_rows(const RnsPolynomial& poly, std::size_t alpha);

// One line per prime: "q,c_0,c_1,...,c_{n-1}".
std::string to_csv(const RnsPolynomial& poly);

}  // namespace kfhe
