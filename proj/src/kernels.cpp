#include "kfhe/kernels.hpp"

#include "kfhe/errors.hpp"
#include "kfhe/parallel.hpp"

namespace kfhe {

namespace {

template <typename Op>
void rowwise(RnsPolynomial& a, const RnsPolynomial& b, Op op) {
    require_compatible(a, b);
    const std::size_t n = a.n();
    parallel_for(a.size(), [&](std::size_t i) {
        const Modulus q(a.prime(i));
        auto dst = a.row(i);
        auto src = b.row(i);
        for (std::size_t c = 0; c < n; ++c) dst[c] = op(q, dst[c], src[c]);
    });
}

}  // namespace

void hada_mult_inplace(RnsPolynomial& a, const RnsPolynomial& b) {
    rowwise(a, b, [](const Modulus& q, u32 x, u32 y) { return q.mul(x, y); });
}

void ele_add_inplace(RnsPolynomial& a, const RnsPolynomial& b) {
    rowwise(a, b, [](const Modulus& q, u32 x, u32 y) { return q.add(x, y); });
}

void ele_sub_inplace(RnsPolynomial& a, const RnsPolynomial& b) {
    rowwise(a, b, [](const Modulus& q, u32 x, u32 y) { return q.sub(x, y); });
}

RnsPolynomial hada_mult(const RnsPolynomial& a, const RnsPolynomial& b) {
    RnsPolynomial c = a;
    hada_mult_inplace(c, b);
    return c;
}

RnsPolynomial ele_add(const RnsPolynomial& a, const RnsPolynomial& b) {
    RnsPolynomial c = a;
    ele_add_inplace(c, b);
    return c;
}

RnsPolynomial ele_sub(const RnsPolynomial& a, const RnsPolynomial& b) {
    RnsPolynomial c = a;
    ele_sub_inplace(c, b);
    return c;
}

RnsPolynomial ele_neg(const RnsPolynomial& a) {
    RnsPolynomial c = a;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Modulus q(c.prime(i));
        for (auto& v : c.row(i)) v = q.neg(v);
    }
    return c;
}

RnsPolynomial scalar_mult(const RnsPolynomial& a, const std::vector<u32>& scalars) {
    if (scalars.size() != a.size()) throw MismatchError("scalar_mult: one scalar per row required");
    RnsPolynomial c = a;
    parallel_for(c.size(), [&](std::size_t i) {
        const u32 q = c.prime(i);
        const u32 w = scalars[i];
        const u32 ws = shoup_precompute(w, q);
        for (auto& v : c.row(i)) v = mul_shoup(v, w, ws, q);
    });
    return c;
}

std::vector<std::size_t> frobenius_permutation(std::size_t n, std::size_t r) {
    const u64 two_n = 2 * static_cast<u64>(n);
    u64 g = 1;
    for (std::size_t i = 0; i < r; ++i) g = g * 5 % two_n;
    std::vector<std::size_t> pi(n);
    for (std::size_t x = 0; x < n; ++x) pi[x] = static_cast<std::size_t>((g * (2 * x + 1) % two_n - 1) / 2);
    return pi;
}

RnsPolynomial forbenius_map(const RnsPolynomial& a, std::size_t r) {
    if (a.domain() != Domain::ntt) throw DomainError("forbenius_map expects an NTT-domain operand");
    if (r >= a.n() / 2) throw RangeError("rotation index must be below n/2");
    const auto pi = frobenius_permutation(a.n(), r);
    RnsPolynomial out(a.n(), a.basis(), Domain::ntt);
    parallel_for(a.size(), [&](std::size_t i) {
        auto src = a.row(i);
        auto dst = out.row(i);
        for (std::size_t x = 0; x < a.n(); ++x) dst[pi[x]] = src[x];
    });
    return out;
}

RnsPolynomial conjugate(const RnsPolynomial& a) {
    const std::size_t n = a.n();
    RnsPolynomial out(n, a.basis(), a.domain());
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto src = a.row(i);
        auto dst = out.row(i);
        if (a.domain() == Domain::ntt) {
            for (std::size_t k = 0; k < n; ++k) dst[k] = src[n - 1 - k];
        } else {
            const Modulus q(a.prime(i));
            dst[0] = src[0];
            for (std::size_t c = 1; c < n; ++c) dst[c] = q.neg(src[n - c]);
        }
    }
    return out;
}

}  // namespace kfhe
