#pragma once

// Element-wise and permutation kernels on RNS polynomials. Every kernel works
// row by row, so rows may be processed in any order or in parallel.

#include <cstddef>
#include <vector>

#include "kfhe/rns.hpp"

namespace kfhe {

// c_i = a_i * b_i mod q per row. Operands must share degree, basis and domain.
RnsPolynomial hada_mult(const RnsPolynomial& a, const RnsPolynomial& b);
RnsPolynomial ele_add(const RnsPolynomial& a, const RnsPolynomial& b);
RnsPolynomial ele_sub(const RnsPolynomial& a, const RnsPolynomial& b);
RnsPolynomial ele_neg(const RnsPolynomial& a);

// In-place variants used on hot paths (a op= b).
void hada_mult_inplace(RnsPolynomial& a, const RnsPolynomial& b);
void ele_add_inplace(RnsPolynomial& a, const RnsPolynomial& b);
void ele_sub_inplace(RnsPolynomial& a, const RnsPolynomial& b);

// Row i multiplied by scalars[i] (already reduced mod basis[i]).
RnsPolynomial scalar_mult(const RnsPolynomial& a, const std::vector<u32>& scalars);

// pi_r(x) = ((5^r (2x+1) mod 2n) - 1) / 2 for x in [0, n).
std::vector<std::size_t> frobenius_permutation(std::size_t n, std::size_t r);

// NTT-domain automorphism: out[pi_r(x)] = in[x] on every row. This is
// X -> X^(5^-r), which moves slot j to slot j + r. Requires r < n/2.
RnsPolynomial forbenius_map(const RnsPolynomial& a, std::size_t r);

// X -> X^-1. Coefficient domain: a'_0 = a_0, a'_i = -a_{n-i}.
// NTT domain: out[k] = in[n-1-k].
RnsPolynomial conjugate(const RnsPolynomial& a);

// The Conv kernel is fast_basis_conv, declared in rns.hpp and available here.

}  // namespace kfhe
