#include "kfhe/ntt.hpp"

#include <algorithm>
#include <limits>

#include "kfhe/errors.hpp"
#include "kfhe/parallel.hpp"

namespace kfhe {

const char* to_string(NttBackend b) {
    switch (b) {
        case NttBackend::butterfly: return "butterfly";
        case NttBackend::gemm: return "gemm";
        case NttBackend::segmented: return "segmented";
    }
    return "?";
}

NttBackend parse_backend(const std::string& name) {
    for (auto b : kAllBackends)
        if (name == to_string(b)) return b;
    throw ParameterError("unknown NTT backend '" + name + "'");
}

std::vector<u32> ntt_oracle(std::span<const u32> a, u32 q, u32 psi) {
    const std::size_t n = a.size();
    const u64 order = 2 * static_cast<u64>(n);
    std::vector<u64> pw(order);
    u64 acc = 1;
    for (u64 e = 0; e < order; ++e) {
        pw[e] = acc;
        acc = acc * psi % q;
    }
    std::vector<u32> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        u64 sum = 0;
        const u64 step = 2 * k + 1;  // exponent of term j is j * (2k + 1)
        u64 e = 0;
        for (std::size_t j = 0; j < n; ++j) {
            sum += static_cast<u64>(a[j]) * pw[e] % q;
            if (sum >= q) sum -= q;
            e += step;
            if (e >= order) e %= order;
        }
        out[k] = static_cast<u32>(sum);
    }
    return out;
}

// ---------------------------------------------------------------------------
// TCU emulation counters

namespace {

std::atomic<u64> g_gemm_calls{0};
std::atomic<u64> g_multiplies{0};
std::atomic<u64> g_max_acc{0};
std::atomic<u64> g_acc_violations{0};

void record_max(u64 value) {
    u64 cur = g_max_acc.load(std::memory_order_relaxed);
    while (value > cur && !g_max_acc.compare_exchange_weak(cur, value)) {
    }
}

}  // namespace

TcuCounters tcu_counters() {
    return TcuCounters{g_gemm_calls.load(), g_multiplies.load(), g_max_acc.load(),
                       g_acc_violations.load()};
}

void reset_tcu_counters() {
    g_gemm_calls = 0;
    g_multiplies = 0;
    g_max_acc = 0;
    g_acc_violations = 0;
}

// ---------------------------------------------------------------------------
// Matrix primitives

U32Matrix gemm_mod(const U32Matrix& a_in, const U32Matrix& b_in, const Modulus& q) {
    if (a_in.cols != b_in.rows) throw MismatchError("gemm_mod: inner dimensions differ");
    const U32Matrix a = a_in.relayout(Layout::row_major);
    const U32Matrix b = b_in.relayout(Layout::row_major);
    const std::size_t m = a.rows, inner = a.cols, p = b.cols;
    const u64 chunk = q.lazy_terms();
    U32Matrix out(m, p);
    std::vector<u64> acc(p);
    for (std::size_t i = 0; i < m; ++i) {
        std::fill(acc.begin(), acc.end(), 0);
        u64 pending = 0;
        for (std::size_t k = 0; k < inner; ++k) {
            const u64 av = a.data[i * inner + k];
            const u32* brow = b.data.data() + k * p;
            for (std::size_t c = 0; c < p; ++c) acc[c] += av * brow[c];
            if (++pending == chunk) {
                for (auto& v : acc) v = q.reduce(v);
                pending = 0;
            }
        }
        u32* orow = out.data.data() + i * p;
        for (std::size_t c = 0; c < p; ++c) orow[c] = q.reduce(acc[c]);
    }
    return out;
}

I32Matrix tcu_gemm(const ByteMatrix& a_in, const ByteMatrix& b_in) {
    if (a_in.cols != b_in.rows) throw MismatchError("tcu_gemm: inner dimensions differ");
    if (a_in.cols > kMaxTcuInner) {
        throw OverflowRiskError("tcu_gemm: inner dimension " + std::to_string(a_in.cols) +
                                " exceeds 2^15; 32-bit accumulators could overflow");
    }
    const ByteMatrix a = a_in.relayout(Layout::row_major);
    const ByteMatrix b = b_in.relayout(Layout::row_major);
    const std::size_t m = a.rows, inner = a.cols, p = b.cols;

    I32Matrix out(m, p);
    std::vector<u32> acc(p);
    u64 local_max = 0;
    u64 violations = 0;
    for (std::size_t i = 0; i < m; ++i) {
        std::fill(acc.begin(), acc.end(), 0);
        for (std::size_t k = 0; k < inner; ++k) {
            const u32 av = a.data[i * inner + k];
            const std::uint8_t* brow = b.data.data() + k * p;
            for (std::size_t c = 0; c < p; ++c) acc[c] += av * brow[c];
        }
        // Partial sums of non-negative products only grow, so the final value is
        // the largest the accumulator ever held.
        std::int32_t* orow = out.data.data() + i * p;
        for (std::size_t c = 0; c < p; ++c) {
            local_max = std::max<u64>(local_max, acc[c]);
            violations += acc[c] > static_cast<u32>(std::numeric_limits<std::int32_t>::max());
            orow[c] = static_cast<std::int32_t>(acc[c]);
        }
    }
    g_gemm_calls.fetch_add(1, std::memory_order_relaxed);
    g_multiplies.fetch_add(static_cast<u64>(m) * inner * p, std::memory_order_relaxed);
    g_acc_violations.fetch_add(violations, std::memory_order_relaxed);
    record_max(local_max);
    return out;
}

namespace {

std::array<u32, 7> shift_weights(const Modulus& q) {
    std::array<u32, 7> w{};
    for (unsigned s = 0; s < 7; ++s) w[s] = q.reduce(pow_mod(2, 8 * s, q.value()));
    return w;
}

}  // namespace

U32Matrix fuse_partials(const std::array<I32Matrix, 16>& partials, const Modulus& q) {
    const std::size_t rows = partials[0].rows, cols = partials[0].cols;
    for (const auto& o : partials) {
        if (o.rows != rows || o.cols != cols) throw MismatchError("fuse_partials: shape mismatch");
    }
    const auto weights = shift_weights(q);
    const u64 chunk = q.lazy_terms();
    U32Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            u64 acc = 0;
            u64 pending = 0;
            for (unsigned i = 0; i < 4; ++i) {
                for (unsigned j = 0; j < 4; ++j) {
                    const auto raw = partials[4 * i + j](r, c);
                    const u32 reduced = q.reduce(static_cast<u64>(static_cast<u32>(raw)));
                    acc += static_cast<u64>(reduced) * weights[i + j];
                    if (++pending == chunk) {
                        acc = q.reduce(acc);
                        pending = 0;
                    }
                }
            }
            out(r, c) = q.reduce(acc);
        }
    }
    return out;
}

BytePlanes hadamard_stage(const U32Matrix& fused, const U32Matrix& w2, const Modulus& q) {
    if (fused.rows != w2.rows || fused.cols != w2.cols) {
        throw MismatchError("hadamard_stage: shape mismatch");
    }
    U32Matrix prod(fused.rows, fused.cols);
    for (std::size_t i = 0; i < fused.rows; ++i)
        for (std::size_t j = 0; j < fused.cols; ++j) prod(i, j) = q.mul(fused(i, j), w2(i, j));
    return segment_matrix(prod, Layout::column_major);
}

namespace {

// The 16 partial products are independent; any execution order yields the same
// fused result.
std::array<I32Matrix, 16> partial_products(const BytePlanes& a, const BytePlanes& b) {
    std::array<I32Matrix, 16> partials;
    parallel_for(16, [&](std::size_t t) { partials[t] = tcu_gemm(a[t / 4], b[t % 4]); });
    return partials;
}

}  // namespace

U32Matrix segmented_gemm_mod(const BytePlanes& a, const BytePlanes& b, const Modulus& q) {
    return fuse_partials(partial_products(a, b), q);
}

// ---------------------------------------------------------------------------
// Butterfly backend

namespace {

void bit_reverse_permute(std::span<u32> a) {
    const std::size_t n = a.size();
    const unsigned bits = log2_exact(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = bit_reverse(static_cast<u32>(i), bits);
        if (i < r) std::swap(a[i], a[r]);
    }
}

void butterfly_forward(std::span<u32> a, const PrimeTwiddles& tw) {
    const std::size_t n = a.size();
    const u32 q = tw.mod.value();
    for (std::size_t m = 1, t = n / 2; m < n; m *= 2, t /= 2) {
        for (std::size_t i = 0; i < m; ++i) {
            const u32 s = tw.psi_rev[m + i];
            const u32 s_shoup = tw.psi_rev_shoup[m + i];
            const std::size_t j1 = 2 * i * t;
            for (std::size_t j = j1; j < j1 + t; ++j) {
                const u32 u = a[j];
                const u32 v = mul_shoup(a[j + t], s, s_shoup, q);
                a[j] = tw.mod.add(u, v);
                a[j + t] = tw.mod.sub(u, v);
            }
        }
    }
    bit_reverse_permute(a);
}

void butterfly_inverse(std::span<u32> a, const PrimeTwiddles& tw) {
    const std::size_t n = a.size();
    const u32 q = tw.mod.value();
    bit_reverse_permute(a);
    for (std::size_t m = n, t = 1; m > 1; m /= 2, t *= 2) {
        const std::size_t h = m / 2;
        for (std::size_t i = 0; i < h; ++i) {
            const u32 s = tw.psi_inv_rev[h + i];
            const u32 s_shoup = tw.psi_inv_rev_shoup[h + i];
            const std::size_t j1 = 2 * i * t;
            for (std::size_t j = j1; j < j1 + t; ++j) {
                const u32 u = a[j];
                const u32 v = a[j + t];
                a[j] = tw.mod.add(u, v);
                a[j + t] = mul_shoup(tw.mod.sub(u, v), s, s_shoup, q);
            }
        }
    }
    for (auto& v : a) v = mul_shoup(v, tw.n_inv, tw.n_inv_shoup, q);
}

// ---------------------------------------------------------------------------
// Matrix backends
//
// Index mapping for a block of B vectors with n = n1 * n2:
//   input  a_b[n2*i + j]         -> X[i][b*n2 + j]      (n1 x B*n2)
//   Y = W1 x X, then Y[u][b*n2 + j] *= W2[u][j]
//   Z[b*n1 + u][j] = Y[u][b*n2 + j]                      (B*n1 x n2)
//   D = Z x W3
//   output A_b[u + n1*v] = D[b*n1 + u][v]
// which expands to A_k = sum_j a_j psi^((2k+1) j). The inverse runs the same
// steps transposed and backwards: Z from A, D = Z x W3inv, Hadamard with
// W2inv, X relayout, Y = W1inv x X, then multiply by n^-1.

struct BlockShape {
    std::size_t n1, n2, batch;
};

U32Matrix gather_x(std::span<const u32> data, const BlockShape& s) {
    U32Matrix x(s.n1, s.batch * s.n2);
    for (std::size_t b = 0; b < s.batch; ++b)
        for (std::size_t i = 0; i < s.n1; ++i)
            for (std::size_t j = 0; j < s.n2; ++j)
                x(i, b * s.n2 + j) = data[b * s.n1 * s.n2 + s.n2 * i + j];
    return x;
}

U32Matrix gather_z_from_ntt(std::span<const u32> data, const BlockShape& s) {
    U32Matrix z(s.batch * s.n1, s.n2);
    for (std::size_t b = 0; b < s.batch; ++b)
        for (std::size_t u = 0; u < s.n1; ++u)
            for (std::size_t v = 0; v < s.n2; ++v)
                z(b * s.n1 + u, v) = data[b * s.n1 * s.n2 + u + s.n1 * v];
    return z;
}

// Y[u][b*n2+j] * W2[u][j] written as Z[b*n1+u][j].
U32Matrix twist_x_to_z(const U32Matrix& y, const U32Matrix& w2, const Modulus& q,
                       const BlockShape& s) {
    U32Matrix z(s.batch * s.n1, s.n2);
    for (std::size_t b = 0; b < s.batch; ++b)
        for (std::size_t u = 0; u < s.n1; ++u)
            for (std::size_t j = 0; j < s.n2; ++j)
                z(b * s.n1 + u, j) = q.mul(y(u, b * s.n2 + j), w2(u, j));
    return z;
}

// Z[b*n1+u][j] * W2[u][j] written as X[u][b*n2+j].
U32Matrix twist_z_to_x(const U32Matrix& z, const U32Matrix& w2, const Modulus& q,
                       const BlockShape& s) {
    U32Matrix x(s.n1, s.batch * s.n2);
    for (std::size_t b = 0; b < s.batch; ++b)
        for (std::size_t u = 0; u < s.n1; ++u)
            for (std::size_t j = 0; j < s.n2; ++j)
                x(u, b * s.n2 + j) = q.mul(z(b * s.n1 + u, j), w2(u, j));
    return x;
}

void scatter_ntt(const U32Matrix& d, std::span<u32> data, const BlockShape& s) {
    for (std::size_t b = 0; b < s.batch; ++b)
        for (std::size_t u = 0; u < s.n1; ++u)
            for (std::size_t v = 0; v < s.n2; ++v)
                data[b * s.n1 * s.n2 + u + s.n1 * v] = d(b * s.n1 + u, v);
}

void scatter_coeff(const U32Matrix& y, std::span<u32> data, const PrimeTwiddles& tw,
                   const BlockShape& s) {
    const u32 q = tw.mod.value();
    for (std::size_t b = 0; b < s.batch; ++b)
        for (std::size_t i = 0; i < s.n1; ++i)
            for (std::size_t j = 0; j < s.n2; ++j)
                data[b * s.n1 * s.n2 + s.n2 * i + j] =
                    mul_shoup(y(i, b * s.n2 + j), tw.n_inv, tw.n_inv_shoup, q);
}

void gemm_forward(std::span<u32> data, const PrimeTwiddles& tw, const BlockShape& s) {
    const auto& w = tw.fwd;
    const U32Matrix y = gemm_mod(w.w1, gather_x(data, s), tw.mod);
    const U32Matrix z = twist_x_to_z(y, w.w2, tw.mod, s);
    scatter_ntt(gemm_mod(z, w.w3, tw.mod), data, s);
}

void gemm_inverse(std::span<u32> data, const PrimeTwiddles& tw, const BlockShape& s) {
    const auto& w = tw.inv;
    const U32Matrix d = gemm_mod(gather_z_from_ntt(data, s), w.w3, tw.mod);
    const U32Matrix x = twist_z_to_x(d, w.w2, tw.mod, s);
    scatter_coeff(gemm_mod(w.w1, x, tw.mod), data, tw, s);
}

// Five stages: segment input (column-major planes), TCU GEMM against the
// pre-segmented first twiddle matrix (row-major partials), fuse + Hadamard +
// re-segment (column-major planes), second TCU GEMM, fuse into the output.
void segmented_forward(std::span<u32> data, const PrimeTwiddles& tw, const BlockShape& s) {
    const BytePlanes t = segment_matrix(gather_x(data, s), Layout::column_major);
    const U32Matrix y = segmented_gemm_mod(tw.seg_fwd.w1, t, tw.mod);
    const BytePlanes z = segment_matrix(twist_x_to_z(y, tw.fwd.w2, tw.mod, s),
                                        Layout::column_major);
    scatter_ntt(segmented_gemm_mod(z, tw.seg_fwd.w3, tw.mod), data, s);
}

void segmented_inverse(std::span<u32> data, const PrimeTwiddles& tw, const BlockShape& s) {
    const BytePlanes t = segment_matrix(gather_z_from_ntt(data, s), Layout::column_major);
    const U32Matrix d = segmented_gemm_mod(t, tw.seg_inv.w3, tw.mod);
    const BytePlanes x = segment_matrix(twist_z_to_x(d, tw.inv.w2, tw.mod, s),
                                        Layout::column_major);
    scatter_coeff(segmented_gemm_mod(tw.seg_inv.w1, x, tw.mod), data, tw, s);
}

BlockShape block_shape(std::span<u32> data, std::size_t n, const PrimeTwiddles& tw) {
    if (n == 0 || data.size() % n != 0) throw MismatchError("block is not a whole number of vectors");
    if (tw.fwd.plan.n() != n) throw ParameterError("twiddle factors built for a different degree");
    return BlockShape{tw.fwd.plan.n1, tw.fwd.plan.n2, data.size() / n};
}

}  // namespace

void forward_block(std::span<u32> data, std::size_t n, const PrimeTwiddles& tw,
                   NttBackend backend) {
    const BlockShape s = block_shape(data, n, tw);
    switch (backend) {
        case NttBackend::butterfly:
            for (std::size_t b = 0; b < s.batch; ++b) butterfly_forward(data.subspan(b * n, n), tw);
            return;
        case NttBackend::gemm: gemm_forward(data, tw, s); return;
        case NttBackend::segmented: segmented_forward(data, tw, s); return;
    }
}

void inverse_block(std::span<u32> data, std::size_t n, const PrimeTwiddles& tw,
                   NttBackend backend) {
    const BlockShape s = block_shape(data, n, tw);
    switch (backend) {
        case NttBackend::butterfly:
            for (std::size_t b = 0; b < s.batch; ++b) butterfly_inverse(data.subspan(b * n, n), tw);
            return;
        case NttBackend::gemm: gemm_inverse(data, tw, s); return;
        case NttBackend::segmented: segmented_inverse(data, tw, s); return;
    }
}

RnsPolynomial ntt_forward(const RnsPolynomial& poly, const TwiddleFactorSet& tw,
                          NttBackend backend) {
    if (poly.domain() != Domain::coefficient) throw DomainError("ntt_forward expects coefficient domain");
    if (tw.n() != poly.n()) throw ParameterError("twiddle factors built for a different degree");
    std::vector<const PrimeTwiddles*> entries;
    for (u32 q : poly.basis()) entries.push_back(&tw.at(q));
    RnsPolynomial out = poly;
    parallel_for(out.size(), [&](std::size_t i) {
        forward_block(out.row(i), out.n(), *entries[i], backend);
    });
    out.set_domain(Domain::ntt);
    return out;
}

RnsPolynomial ntt_inverse(const RnsPolynomial& poly, const TwiddleFactorSet& tw,
                          NttBackend backend) {
    if (poly.domain() != Domain::ntt) throw DomainError("ntt_inverse expects NTT domain");
    if (tw.n() != poly.n()) throw ParameterError("twiddle factors built for a different degree");
    std::vector<const PrimeTwiddles*> entries;
    for (u32 q : poly.basis()) entries.push_back(&tw.at(q));
    RnsPolynomial out = poly;
    parallel_for(out.size(), [&](std::size_t i) {
        inverse_block(out.row(i), out.n(), *entries[i], backend);
    });
    out.set_domain(Domain::coefficient);
    return out;
}

}  // namespace kfhe
