#pragma once

// Operation-level batching. B polynomials over the same basis are stored
// level-major as (L, B, N): all residues mod q_l of every item form one
// contiguous region of B*N values, so a kernel for prime q_l streams one block
// and reuses one set of twiddle factors for the whole batch.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kfhe/ntt.hpp"
#include "kfhe/params.hpp"
#include "kfhe/rns.hpp"

namespace kfhe {

class BatchBuffer {
public:
    BatchBuffer() = default;
    BatchBuffer(std::size_t batch, std::size_t n, std::vector<u32> basis, Domain domain);

    std::size_t level_count() const { return basis_.size(); }
    std::size_t batch_size() const { return batch_; }
    std::size_t degree() const { return n_; }
    const std::vector<u32>& basis() const { return basis_; }
    Domain domain() const { return domain_; }
    void set_domain(Domain d) { domain_ = d; }

    // Offset of element (level l, item b, coefficient i).
    std::size_t index(std::size_t l, std::size_t b, std::size_t i) const { return (l * batch_ + b) * n_ + i; }

    // All B*N residues mod basis[l].
    std::span<u32> region(std::size_t l) { return {data_.data() + l * batch_ * n_, batch_ * n_}; }
    std::span<const u32> region(std::size_t l) const { return {data_.data() + l * batch_ * n_, batch_ * n_}; }
    std::span<u32> item_row(std::size_t l, std::size_t b) { return {data_.data() + index(l, b, 0), n_}; }
    std::span<const u32> item_row(std::size_t l, std::size_t b) const { return {data_.data() + index(l, b, 0), n_}; }

    const std::vector<u32>& data() const { return data_; }
    std::vector<u32>& data() { return data_; }

    friend bool operator==(const BatchBuffer&, const BatchBuffer&) = default;

private:
    std::size_t batch_ = 0;
    std::size_t n_ = 0;
    std::vector<u32> basis_;
    Domain domain_ = Domain::coefficient;
    std::vector<u32> data_;
};

// Throws BatchError on an empty list or items that differ in degree, basis or domain.
BatchBuffer pack(const std::vector<RnsPolynomial>& items);
std::vector<RnsPolynomial> unpack(const BatchBuffer& buffer);

// Item-major (B, L, N) -> level-major (L, B, N), and back.
std::vector<u32> reorder_layout(std::span<const u32> src, std::size_t batch, std::size_t levels,
                                std::size_t n);
std::vector<u32> reverse_reorder_layout(std::span<const u32> src, std::size_t batch,
                                        std::size_t levels, std::size_t n);

enum class BatchKernel { ntt, intt, hada_mult, ele_add, ele_sub, forbenius_map };

const char* to_string(BatchKernel k);

struct BatchAux {
    const TwiddleFactorSet* twiddles = nullptr;  // ntt, intt
    NttBackend backend = NttBackend::butterfly;
    const BatchBuffer* operand = nullptr;        // hada_mult, ele_add, ele_sub
    std::size_t rotation = 0;                    // forbenius_map
};

// Result item b equals the unbatched kernel applied to item b. Throws
// DomainError for a wrong input domain and BatchError for missing or
// mismatched auxiliary operands.
BatchBuffer batched_apply(const BatchBuffer& buffer, BatchKernel kernel, const BatchAux& aux);

// Operations the planner knows working sets for.
enum class OpKind { ntt, intt, hada_mult, ele_add, ele_sub, forbenius_map, hadd, cmult, hmult, hrotate, rescale };

const char* to_string(OpKind op);
// Throws ParameterError for unknown names.
OpKind parse_op(const std::string& name);

// Bytes one operation instance touches at the top level. With S = (L+1)*N*4
// (one polynomial over q_0..q_L) and E = (L+1+K)*N*4 (one over q_0..q_L, P):
//   ntt, intt:              3S  (input, output, one block of GEMM intermediates)
//   forbenius_map:          2S
//   hada_mult, ele_*:       3S
//   hadd, cmult:            6S  (two input, one output ciphertext)
//   rescale:                5S  (ciphertext in and out, one lifted row set)
//   hmult, hrotate:         9S + 3E  (inputs, tensor terms, output; two
//                           key-switch accumulators plus one lifted slice)
std::size_t working_set_bytes(const CkksParams& params, OpKind op);

inline constexpr std::size_t kDefaultMaxBatch = 1024;

// Largest power of two B <= max_batch with B * working_set_bytes <= budget.
// Throws CapacityError if even B = 1 does not fit.
std::size_t plan_batch_size(std::size_t available_bytes, const CkksParams& params, OpKind op,
                            std::size_t max_batch = kDefaultMaxBatch);

}  // namespace kfhe
