#include "kfhe/rns.hpp"

#include <algorithm>
#include <sstream>

#include "kfhe/errors.hpp"

namespace kfhe {

const char* to_string(Domain d) { return d == Domain::coefficient ? "coefficient" : "ntt"; }

RnsPolynomial::RnsPolynomial(std::size_t n, std::vector<u32> basis, Domain domain)
    : n_(n), basis_(std::move(basis)), domain_(domain), data_(n_ * basis_.size(), 0) {}

RnsPolynomial::RnsPolynomial(std::size_t n, std::vector<u32> basis, Domain domain,
                             std::vector<u32> data)
    : n_(n), basis_(std::move(basis)), domain_(domain), data_(std::move(data)) {
    if (data_.size() != n_ * basis_.size()) {
        throw MismatchError("row data does not match basis size times degree");
    }
}

RnsPolynomial RnsPolynomial::rows(std::size_t first, std::size_t count) const {
    if (first + count > basis_.size()) throw ParameterError("row range outside the basis");
    std::vector<u32> basis(basis_.begin() + static_cast<std::ptrdiff_t>(first),
                           basis_.begin() + static_cast<std::ptrdiff_t>(first + count));
    std::vector<u32> data(data_.begin() + static_cast<std::ptrdiff_t>(first * n_),
                          data_.begin() + static_cast<std::ptrdiff_t>((first + count) * n_));
    return RnsPolynomial(n_, std::move(basis), domain_, std::move(data));
}

RnsPolynomial RnsPolynomial::select(const std::vector<u32>& primes) const {
    RnsPolynomial out(n_, primes, domain_);
    for (std::size_t t = 0; t < primes.size(); ++t) {
        auto it = std::find(basis_.begin(), basis_.end(), primes[t]);
        if (it == basis_.end()) {
            throw ParameterError("prime " + std::to_string(primes[t]) + " not in basis");
        }
        auto src = row(static_cast<std::size_t>(it - basis_.begin()));
        std::copy(src.begin(), src.end(), out.row(t).begin());
    }
    return out;
}

bool RnsPolynomial::residues_in_range() const {
    for (std::size_t i = 0; i < basis_.size(); ++i) {
        for (u32 v : row(i))
            if (v >= basis_[i]) return false;
    }
    return true;
}

bool RnsPolynomial::is_zero() const {
    return std::all_of(data_.begin(), data_.end(), [](u32 v) { return v == 0; });
}

void require_compatible(const RnsPolynomial& a, const RnsPolynomial& b) {
    if (a.n() != b.n()) throw MismatchError("polynomial degrees differ");
    if (a.basis() != b.basis()) throw MismatchError("polynomial bases differ");
    if (a.domain() != b.domain()) throw MismatchError("polynomial domains differ");
}

BigInt basis_product(const std::vector<u32>& basis) {
    BigInt prod = 1;
    for (u32 q : basis) prod *= q;
    return prod;
}

RnsPolynomial crt_decompose(const std::vector<BigInt>& coeffs, const std::vector<u32>& basis) {
    if (basis.empty()) throw ParameterError("empty RNS basis");
    const std::size_t n = coeffs.size();
    RnsPolynomial out(n, basis, Domain::coefficient);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        auto r = out.row(i);
        for (std::size_t j = 0; j < n; ++j) r[j] = static_cast<u32>(coeffs[j] % basis[i]);
    }
    return out;
}

std::vector<BigInt> crt_compose(const RnsPolynomial& poly) {
    if (poly.domain() != Domain::coefficient) {
        throw DomainError("crt_compose requires coefficient domain");
    }
    const auto& basis = poly.basis();
    const BigInt big_q = basis_product(basis);
    // x = sum_i [r_i * (Q/q_i)^-1]_{q_i} * (Q/q_i) mod Q
    std::vector<BigInt> q_hat(basis.size());
    std::vector<u32> q_hat_inv(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
        q_hat[i] = big_q / basis[i];
        q_hat_inv[i] = static_cast<u32>(inv_mod(static_cast<u64>(q_hat[i] % basis[i]), basis[i]));
    }
    std::vector<BigInt> out(poly.n());
    for (std::size_t j = 0; j < poly.n(); ++j) {
        BigInt acc = 0;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            const u64 y = static_cast<u64>(poly.row(i)[j]) * q_hat_inv[i] % basis[i];
            acc += q_hat[i] * y;
        }
        out[j] = acc % big_q;
    }
    return out;
}

RnsPolynomial fast_basis_conv(const RnsPolynomial& poly, const std::vector<u32>& target) {
    if (target.empty()) throw ParameterError("empty target basis");
    if (poly.domain() != Domain::coefficient) {
        throw DomainError("fast_basis_conv requires coefficient domain");
    }
    const auto& src = poly.basis();
    const std::size_t n = poly.n();
    const std::size_t ns = src.size();

    std::vector<u32> q_hat_inv(ns);
    std::vector<u32> q_hat_inv_shoup(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        u64 prod = 1;
        for (std::size_t k = 0; k < ns; ++k)
            if (k != i) prod = prod * src[k] % src[i];
        q_hat_inv[i] = static_cast<u32>(inv_mod(prod, src[i]));
        q_hat_inv_shoup[i] = shoup_precompute(q_hat_inv[i], src[i]);
    }

    // y_i = [a_i * (Q/q_i)^-1]_{q_i}, shared across all target primes.
    std::vector<u32> y(ns * n);
    for (std::size_t i = 0; i < ns; ++i) {
        auto a = poly.row(i);
        for (std::size_t c = 0; c < n; ++c)
            y[i * n + c] = mul_shoup(a[c], q_hat_inv[i], q_hat_inv_shoup[i], src[i]);
    }

    RnsPolynomial out(n, target, Domain::coefficient);
    for (std::size_t t = 0; t < target.size(); ++t) {
        const u32 p = target[t];
        auto dst = out.row(t);
        auto shared = std::find(src.begin(), src.end(), p);
        if (shared != src.end()) {
            auto r = poly.row(static_cast<std::size_t>(shared - src.begin()));
            std::copy(r.begin(), r.end(), dst.begin());
            continue;
        }
        const Modulus mod(p);
        std::vector<u32> q_hat_mod_p(ns);
        for (std::size_t i = 0; i < ns; ++i) {
            u64 prod = 1;
            for (std::size_t k = 0; k < ns; ++k)
                if (k != i) prod = prod * (src[k] % p) % p;
            q_hat_mod_p[i] = static_cast<u32>(prod);
        }
        for (std::size_t c = 0; c < n; ++c) {
            u128 acc = 0;
            for (std::size_t i = 0; i < ns; ++i)
                acc += static_cast<u64>(y[i * n + c]) * q_hat_mod_p[i];
            dst[c] = static_cast<u32>(acc % p);
        }
    }
    return out;
}

std::vector<RnsPolynomial> split_rows(const RnsPolynomial& poly, std::size_t alpha) {
    if (alpha == 0) throw ParameterError("slice width must be positive");
    std::vector<RnsPolynomial> slices;
    for (std::size_t first = 0; first < poly.size(); first += alpha) {
        slices.push_back(poly.rows(first, std::min(alpha, poly.size() - first)));
    }
    return slices;
}

std::vector<RnsPolynomial> gks_decompose(const RnsPolynomial& poly, std::size_t dnum) {
    if (dnum == 0 || poly.size() % dnum != 0) {
        throw ParameterError("basis of " + std::to_string(poly.size()) +
                             " primes is not divisible into " + std::to_string(dnum) + " slices");
    }
    if (poly.domain() != Domain::coefficient) {
        throw DomainError("gks_decompose requires coefficient domain");
    }
    return split_rows(poly, poly.size() / dnum);
}

std::string to_csv(const RnsPolynomial& poly) {
    std::ostringstream out;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        out << poly.prime(i);
        for (u32 v : poly.row(i)) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

}  // namespace kfhe
