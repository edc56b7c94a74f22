#include "kfhe/batch.hpp"

#include <algorithm>

#include "kfhe/errors.hpp"
#include "kfhe/kernels.hpp"
#include "kfhe/parallel.hpp"

namespace kfhe {

BatchBuffer::BatchBuffer(std::size_t batch, std::size_t n, std::vector<u32> basis, Domain domain)
    : batch_(batch), n_(n), basis_(std::move(basis)), domain_(domain), data_(batch_ * n_ * basis_.size(), 0) {}

BatchBuffer pack(const std::vector<RnsPolynomial>& items) {
    if (items.empty()) throw BatchError("cannot pack an empty batch");
    const auto& first = items.front();
    for (const auto& it : items) {
        if (it.n() != first.n() || it.basis() != first.basis() || it.domain() != first.domain()) {
            throw BatchError("batch members must share degree, basis (level) and domain");
        }
    }
    BatchBuffer buf(items.size(), first.n(), first.basis(), first.domain());
    for (std::size_t b = 0; b < items.size(); ++b) {
        for (std::size_t l = 0; l < buf.level_count(); ++l) {
            auto src = items[b].row(l);
            std::copy(src.begin(), src.end(), buf.item_row(l, b).begin());
        }
    }
    return buf;
}

std::vector<RnsPolynomial> unpack(const BatchBuffer& buffer) {
    std::vector<RnsPolynomial> items;
    items.reserve(buffer.batch_size());
    for (std::size_t b = 0; b < buffer.batch_size(); ++b) {
        RnsPolynomial p(buffer.degree(), buffer.basis(), buffer.domain());
        for (std::size_t l = 0; l < buffer.level_count(); ++l) {
            auto src = buffer.item_row(l, b);
            std::copy(src.begin(), src.end(), p.row(l).begin());
        }
        items.push_back(std::move(p));
    }
    return items;
}

namespace {

// Copies rows of n values from (outer, inner) order to (inner, outer) order.
std::vector<u32> transpose_rows(std::span<const u32> src, std::size_t outer, std::size_t inner,
                                std::size_t n) {
    if (src.size() != outer * inner * n) throw BatchError("buffer size does not match its shape");
    std::vector<u32> out(src.size());
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < inner; ++i)
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((o * inner + i) * n), n,
                        out.begin() + static_cast<std::ptrdiff_t>((i * outer + o) * n));
    return out;
}

}  // namespace

std::vector<u32> reorder_layout(std::span<const u32> src, std::size_t batch, std::size_t levels,
                                std::size_t n) {
    return transpose_rows(src, batch, levels, n);
}

std::vector<u32> reverse_reorder_layout(std::span<const u32> src, std::size_t batch,
                                        std::size_t levels, std::size_t n) {
    return transpose_rows(src, levels, batch, n);
}

const char* to_string(BatchKernel k) {
    switch (k) {
        case BatchKernel::ntt: return "ntt";
        case BatchKernel::intt: return "intt";
        case BatchKernel::hada_mult: return "hada_mult";
        case BatchKernel::ele_add: return "ele_add";
        case BatchKernel::ele_sub: return "ele_sub";
        case BatchKernel::forbenius_map: return "forbenius_map";
    }
    return "?";
}

namespace {

void require_operand(const BatchBuffer& buf, const BatchAux& aux) {
    if (aux.operand == nullptr) throw BatchError("kernel needs a second batch operand");
    const auto& o = *aux.operand;
    if (o.batch_size() != buf.batch_size() || o.degree() != buf.degree() || o.basis() != buf.basis()) {
        throw BatchError("batch operands differ in shape");
    }
    if (o.domain() != buf.domain()) throw DomainError("batch operands differ in domain");
}

// Splits each level region into per-worker chunks of whole items.
template <typename F>
void for_each_chunk(const BatchBuffer& buf, F f) {
    const std::size_t levels = buf.level_count();
    const std::size_t per_level = std::min(buf.batch_size(), std::max<std::size_t>(1, default_threads()));
    const std::size_t chunk = (buf.batch_size() + per_level - 1) / per_level;
    parallel_for(levels * per_level, [&](std::size_t task) {
        const std::size_t l = task / per_level;
        const std::size_t first = (task % per_level) * chunk;
        if (first >= buf.batch_size()) return;
        const std::size_t count = std::min(chunk, buf.batch_size() - first);
        f(l, first, count);
    });
}

}  // namespace

BatchBuffer batched_apply(const BatchBuffer& buffer, BatchKernel kernel, const BatchAux& aux) {
    BatchBuffer out = buffer;
    const std::size_t n = buffer.degree();
    switch (kernel) {
        case BatchKernel::ntt:
        case BatchKernel::intt: {
            const bool forward = kernel == BatchKernel::ntt;
            if (buffer.domain() != (forward ? Domain::coefficient : Domain::ntt)) {
                throw DomainError(std::string(to_string(kernel)) + ": wrong input domain");
            }
            if (aux.twiddles == nullptr || aux.twiddles->n() != n) {
                throw BatchError("NTT kernels need twiddle factors for this degree");
            }
            std::vector<const PrimeTwiddles*> tw;
            for (u32 q : buffer.basis()) tw.push_back(&aux.twiddles->at(q));
            for_each_chunk(out, [&](std::size_t l, std::size_t first, std::size_t count) {
                auto block = out.region(l).subspan(first * n, count * n);
                if (forward)
                    forward_block(block, n, *tw[l], aux.backend);
                else
                    inverse_block(block, n, *tw[l], aux.backend);
            });
            out.set_domain(forward ? Domain::ntt : Domain::coefficient);
            return out;
        }
        case BatchKernel::hada_mult:
        case BatchKernel::ele_add:
        case BatchKernel::ele_sub: {
            require_operand(buffer, aux);
            for_each_chunk(out, [&](std::size_t l, std::size_t first, std::size_t count) {
                const Modulus q(out.basis()[l]);
                auto dst = out.region(l).subspan(first * n, count * n);
                auto src = aux.operand->region(l).subspan(first * n, count * n);
                for (std::size_t i = 0; i < dst.size(); ++i) {
                    dst[i] = kernel == BatchKernel::hada_mult ? q.mul(dst[i], src[i])
                             : kernel == BatchKernel::ele_add ? q.add(dst[i], src[i])
                                                              : q.sub(dst[i], src[i]);
                }
            });
            return out;
        }
        case BatchKernel::forbenius_map: {
            if (buffer.domain() != Domain::ntt) throw DomainError("forbenius_map: wrong input domain");
            if (aux.rotation >= n / 2) throw RangeError("rotation index must be below n/2");
            const auto pi = frobenius_permutation(n, aux.rotation);
            for_each_chunk(out, [&](std::size_t l, std::size_t first, std::size_t count) {
                for (std::size_t b = first; b < first + count; ++b) {
                    auto src = buffer.item_row(l, b);
                    auto dst = out.item_row(l, b);
                    for (std::size_t x = 0; x < n; ++x) dst[pi[x]] = src[x];
                }
            });
            return out;
        }
    }
    throw BatchError("unknown batch kernel");
}

const char* to_string(OpKind op) {
    switch (op) {
        case OpKind::ntt: return "ntt";
        case OpKind::intt: return "intt";
        case OpKind::hada_mult: return "hada_mult";
        case OpKind::ele_add: return "ele_add";
        case OpKind::ele_sub: return "ele_sub";
        case OpKind::forbenius_map: return "forbenius_map";
        case OpKind::hadd: return "hadd";
        case OpKind::cmult: return "cmult";
        case OpKind::hmult: return "hmult";
        case OpKind::hrotate: return "hrotate";
        case OpKind::rescale: return "rescale";
    }
    return "?";
}

OpKind parse_op(const std::string& name) {
    for (auto op : {OpKind::ntt, OpKind::intt, OpKind::hada_mult, OpKind::ele_add, OpKind::ele_sub,
                    OpKind::forbenius_map, OpKind::hadd, OpKind::cmult, OpKind::hmult, OpKind::hrotate,
                    OpKind::rescale}) {
        if (name == to_string(op)) return op;
    }
    throw ParameterError("unknown operation '" + name + "'");
}

std::size_t working_set_bytes(const CkksParams& params, OpKind op) {
    const std::size_t s = (params.l_max + 1) * params.n * sizeof(u32);
    const std::size_t e = (params.l_max + 1 + params.k) * params.n * sizeof(u32);
    switch (op) {
        case OpKind::ntt:
        case OpKind::intt:
        case OpKind::hada_mult:
        case OpKind::ele_add:
        case OpKind::ele_sub: return 3 * s;
        case OpKind::forbenius_map: return 2 * s;
        case OpKind::hadd:
        case OpKind::cmult: return 6 * s;
        case OpKind::rescale: return 5 * s;
        case OpKind::hmult:
        case OpKind::hrotate: return 9 * s + 3 * e;
    }
    return 3 * s;
}

std::size_t plan_batch_size(std::size_t available_bytes, const CkksParams& params, OpKind op,
                            std::size_t max_batch) {
    const std::size_t unit = working_set_bytes(params, op);
    if (available_bytes < unit) {
        throw CapacityError("memory budget of " + std::to_string(available_bytes) +
                            " bytes cannot hold one " + to_string(op) + " working set (" +
                            std::to_string(unit) + " bytes)");
    }
    std::size_t b = 1;
    while (b * 2 <= max_batch && b * 2 <= available_bytes / unit) b *= 2;
    return b;
}

}  // namespace kfhe
