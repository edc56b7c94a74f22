#pragma once

// Negacyclic NTT/INTT with three interchangeable backends:
//   butterfly  - in-place Cooley-Tukey forward / Gentleman-Sande inverse
//   gemm       - three-matrix formulation with 64-bit accumulation
//   segmented  - the same three-matrix formulation where every matrix product
//                is done on 8-bit operands with 32-bit accumulators (16 partial
//                GEMMs per product, fused modulo q afterwards)
// All backends compute A_k = sum_j a_j psi^(2jk+j) mod q in natural order and
// are bit-identical.

#include <array>
#include <atomic>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kfhe/matrix.hpp"
#include "kfhe/params.hpp"
#include "kfhe/rns.hpp"

namespace kfhe {

enum class NttBackend { butterfly, gemm, segmented };

const char* to_string(NttBackend b);
// Throws ParameterError for unknown names.
NttBackend parse_backend(const std::string& name);
inline constexpr std::array<NttBackend, 3> kAllBackends = {
    NttBackend::butterfly, NttBackend::gemm, NttBackend::segmented};

// Direct O(n^2) evaluation of A_k = sum_j (a_j * psi^(2jk+j) mod q) mod q.
std::vector<u32> ntt_oracle(std::span<const u32> a, u32 q, u32 psi);

RnsPolynomial ntt_forward(const RnsPolynomial& poly, const TwiddleFactorSet& tw,
                          NttBackend backend);
RnsPolynomial ntt_inverse(const RnsPolynomial& poly, const TwiddleFactorSet& tw,
                          NttBackend backend);

// In-place transforms of `data.size() / n` consecutive length-n vectors that
// all live mod the same prime. The matrix backends treat the whole block as one
// wide operand so the twiddle matrices are shared by every vector.
void forward_block(std::span<u32> data, std::size_t n, const PrimeTwiddles& tw,
                   NttBackend backend);
void inverse_block(std::span<u32> data, std::size_t n, const PrimeTwiddles& tw,
                   NttBackend backend);

// ---------------------------------------------------------------------------
// Matrix primitives of the GEMM backends.

// (a x b) mod q with 64-bit accumulators, reduced once per Modulus::lazy_terms()
// products. Entries must already be < q.
U32Matrix gemm_mod(const U32Matrix& a, const U32Matrix& b, const Modulus& q);

inline constexpr std::size_t kMaxTcuInner = std::size_t{1} << 15;

// Exact product of two byte matrices with 32-bit accumulation and no modular
// reduction. Output is row-major. Inner dimension must be <= 2^15 so that
// inner * 255^2 < 2^31.
I32Matrix tcu_gemm(const ByteMatrix& a, const ByteMatrix& b);

// Partials indexed [4*i + j] for left plane i and right plane j:
//   sum_{i,j} (o_ij mod q) * 2^(8(i+j)) mod q, element-wise, row-major output.
U32Matrix fuse_partials(const std::array<I32Matrix, 16>& partials, const Modulus& q);

// (fused .* w2) mod q, re-segmented into four column-major byte planes.
BytePlanes hadamard_stage(const U32Matrix& fused, const U32Matrix& w2, const Modulus& q);

// segment -> 16 x tcu_gemm -> fuse; a and b are byte planes of u32 matrices.
U32Matrix segmented_gemm_mod(const BytePlanes& a, const BytePlanes& b, const Modulus& q);

// Counters over every tcu_gemm call since the last reset. Operand width is
// enforced by the ByteMatrix type itself.
struct TcuCounters {
    u64 gemm_calls = 0;
    u64 multiplies = 0;
    u64 max_accumulator = 0;
    u64 accumulator_violations = 0;  // accumulators that reached 2^31
};

TcuCounters tcu_counters();
void reset_tcu_counters();

}  // namespace kfhe
