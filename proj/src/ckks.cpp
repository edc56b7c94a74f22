#include "kfhe/ckks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kfhe/errors.hpp"
#include "kfhe/kernels.hpp"
#include "kfhe/parallel.hpp"

namespace kfhe {

long double to_long_double(const Scale& s) {
    return numerator(s).convert_to<long double>() / denominator(s).convert_to<long double>();
}

Scale power_of_two_scale(unsigned bits) { return Scale(BigInt(1) << bits); }

double relative_error(const std::vector<Complex>& x, const std::vector<Complex>& y) {
    if (x.size() != y.size()) throw MismatchError("relative_error: length mismatch");
    double diff = 0, ref = 1;
    for (std::size_t i = 0; i < x.size(); ++i) {
        diff = std::max(diff, std::abs(x[i] - y[i]));
        ref = std::max(ref, std::abs(y[i]));
    }
    return diff / ref;
}

namespace {

std::vector<u32> prefix(const std::vector<u32>& v, std::size_t count) {
    return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(count)};
}

u32 signed_mod(std::int64_t v, u32 q) {
    std::int64_t r = v % static_cast<std::int64_t>(q);
    return static_cast<u32>(r < 0 ? r + q : r);
}

// acc += x .* y, all over the same basis.
void mul_acc(RnsPolynomial& acc, const RnsPolynomial& x, const RnsPolynomial& y) {
    require_compatible(acc, x);
    require_compatible(acc, y);
    const std::size_t n = acc.n();
    parallel_for(acc.size(), [&](std::size_t i) {
        const Modulus q(acc.prime(i));
        auto dst = acc.row(i);
        auto xs = x.row(i);
        auto ys = y.row(i);
        for (std::size_t c = 0; c < n; ++c) dst[c] = q.add(dst[c], q.mul(xs[c], ys[c]));
    });
}

std::vector<u32> inverse_of_product_mod(const std::vector<u32>& factors, const std::vector<u32>& basis) {
    std::vector<u32> out(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
        u64 prod = 1;
        for (u32 f : factors) prod = prod * (f % basis[i]) % basis[i];
        out[i] = static_cast<u32>(inv_mod(prod, basis[i]));
    }
    return out;
}

void require_same_shape(const Ciphertext& x, const Ciphertext& y) {
    if (x.level != y.level) throw MismatchError("ciphertext levels differ");
    if (x.scale != y.scale) throw MismatchError("ciphertext scales differ");
    if (x.domain() != y.domain()) throw MismatchError("ciphertext domains differ");
}

void require_ntt(const Ciphertext& ct) {
    if (ct.domain() != Domain::ntt) throw DomainError("operation expects NTT-domain ciphertexts");
}

}  // namespace

CkksContext::CkksContext(CkksParams params, NttBackend backend)
    : params_(std::move(params)), backend_(backend) {
    params_.validate();
    all_primes_ = params_.extended_basis(params_.l_max);
    twiddles_ = TwiddleFactorSet(params_.n, all_primes_);

    const std::size_t m = 2 * params_.n;
    rot_group_.resize(slots());
    std::size_t g = 1;
    for (auto& r : rot_group_) {
        r = g;
        g = g * 5 % m;
    }
    ksi_pows_.resize(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
        const long double angle = 2.0L * std::numbers::pi_v<long double> * k / m;
        ksi_pows_[k] = Complex(static_cast<double>(std::cos(angle)), static_cast<double>(std::sin(angle)));
    }
}

RnsPolynomial CkksContext::to_ntt(const RnsPolynomial& p) const {
    return p.domain() == Domain::ntt ? p : ntt_forward(p, twiddles_, backend_);
}

RnsPolynomial CkksContext::to_coeff(const RnsPolynomial& p) const {
    return p.domain() == Domain::coefficient ? p : ntt_inverse(p, twiddles_, backend_);
}

// ---------------------------------------------------------------------------
// Encoding: slot j holds m(zeta^(5^j)) with zeta = exp(i pi / n).

namespace {

void bit_reverse_complex(std::vector<Complex>& v) {
    const std::size_t size = v.size();
    for (std::size_t i = 1, j = 0; i < size; ++i) {
        std::size_t bit = size >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[i], v[j]);
    }
}

void special_fft(std::vector<Complex>& vals, const std::vector<std::size_t>& rot_group,
                 const std::vector<Complex>& ksi, std::size_t m) {
    const std::size_t size = vals.size();
    bit_reverse_complex(vals);
    for (std::size_t len = 2; len <= size; len <<= 1) {
        const std::size_t half = len >> 1, quad = len << 2;
        for (std::size_t i = 0; i < size; i += len) {
            for (std::size_t j = 0; j < half; ++j) {
                const std::size_t idx = (rot_group[j] % quad) * m / quad;
                const Complex u = vals[i + j];
                const Complex v = vals[i + j + half] * ksi[idx];
                vals[i + j] = u + v;
                vals[i + j + half] = u - v;
            }
        }
    }
}

void special_fft_inv(std::vector<Complex>& vals, const std::vector<std::size_t>& rot_group,
                     const std::vector<Complex>& ksi, std::size_t m) {
    const std::size_t size = vals.size();
    for (std::size_t len = size; len >= 2; len >>= 1) {
        const std::size_t half = len >> 1, quad = len << 2;
        for (std::size_t i = 0; i < size; i += len) {
            for (std::size_t j = 0; j < half; ++j) {
                const std::size_t idx = (quad - rot_group[j] % quad) * m / quad;
                const Complex u = vals[i + j] + vals[i + j + half];
                const Complex v = (vals[i + j] - vals[i + j + half]) * ksi[idx];
                vals[i + j] = u;
                vals[i + j + half] = v;
            }
        }
    }
    bit_reverse_complex(vals);
    const double inv = 1.0 / static_cast<double>(size);
    for (auto& v : vals) v *= inv;
}

}  // namespace

Plaintext CkksContext::encode(const std::vector<Complex>& values, const Scale& scale,
                              std::size_t level) const {
    if (values.size() > slots()) {
        throw ParameterError("encode: " + std::to_string(values.size()) + " values exceed " +
                             std::to_string(slots()) + " slots");
    }
    const auto basis = params_.q_basis(level);
    if (scale <= 0) throw ParameterError("encode: scale must be positive");
    const BigInt q = basis_product(basis);
    if (scale >= Scale(q)) throw RangeError("encode: scale exceeds the modulus at this level");

    std::vector<Complex> vals(slots(), Complex(0, 0));
    std::copy(values.begin(), values.end(), vals.begin());
    special_fft_inv(vals, rot_group_, ksi_pows_, 2 * n());

    const long double delta = to_long_double(scale);
    const long double half_q = q.convert_to<long double>() / 2;
    const std::size_t half = n() / 2;
    RnsPolynomial poly(n(), basis, Domain::coefficient);
    auto put = [&](std::size_t idx, long double x) {
        if (std::fabs(x) >= half_q) throw RangeError("encode: scaled value exceeds q/2");
        if (std::fabs(x) < 0x1p62L) {
            const std::int64_t v = std::llround(x);
            for (std::size_t i = 0; i < basis.size(); ++i) poly.row(i)[idx] = signed_mod(v, basis[i]);
            return;
        }
        int e = 0;
        const long double frac = std::frexp(x, &e);
        BigInt v = BigInt(std::llround(std::ldexp(frac, 62)));
        v <<= (e - 62);
        for (std::size_t i = 0; i < basis.size(); ++i) {
            BigInt r = v % basis[i];
            if (r < 0) r += basis[i];
            poly.row(i)[idx] = static_cast<u32>(r);
        }
    };
    for (std::size_t j = 0; j < half; ++j) {
        put(j, static_cast<long double>(vals[j].real()) * delta);
        put(j + half, static_cast<long double>(vals[j].imag()) * delta);
    }
    return Plaintext{to_ntt(poly), scale, level};
}

Plaintext CkksContext::encode(const std::vector<Complex>& values) const {
    return encode(values, power_of_two_scale(params_.scale_bits), max_level());
}

std::vector<Complex> CkksContext::decode(const Plaintext& pt) const {
    const auto coeffs = crt_compose(to_coeff(pt.poly));
    const BigInt q = basis_product(pt.poly.basis());
    const BigInt half_q = q / 2;
    const long double delta = to_long_double(pt.scale);
    const std::size_t half = n() / 2;
    auto value = [&](std::size_t idx) {
        BigInt c = coeffs[idx];
        if (c > half_q) c -= q;
        return static_cast<double>(c.convert_to<long double>() / delta);
    };
    std::vector<Complex> vals(slots());
    for (std::size_t j = 0; j < half; ++j) vals[j] = Complex(value(j), value(j + half));
    special_fft(vals, rot_group_, ksi_pows_, 2 * n());
    return vals;
}

// ---------------------------------------------------------------------------
// Sampling

RnsPolynomial CkksContext::small_to_ntt(const std::vector<std::int64_t>& coeffs,
                                        const std::vector<u32>& basis) const {
    RnsPolynomial p(n(), basis, Domain::coefficient);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        auto row = p.row(i);
        for (std::size_t c = 0; c < n(); ++c) row[c] = signed_mod(coeffs[c], basis[i]);
    }
    return to_ntt(p);
}

RnsPolynomial CkksContext::uniform_ntt(const std::vector<u32>& basis, Rng& rng) const {
    // Independent uniform residues per row are uniform mod the basis product, and
    // the NTT of a uniform polynomial is uniform, so sample directly in that domain.
    RnsPolynomial p(n(), basis, Domain::ntt);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        std::uniform_int_distribution<u32> dist(0, basis[i] - 1);
        for (auto& v : p.row(i)) v = dist(rng);
    }
    return p;
}

std::vector<std::int64_t> CkksContext::gaussian(Rng& rng) const {
    std::normal_distribution<double> dist(0.0, kErrorSigma);
    std::vector<std::int64_t> e(n());
    for (auto& v : e) {
        double x;
        do {
            x = dist(rng);
        } while (std::fabs(x) > kErrorBound);
        v = std::llround(x);
    }
    return e;
}

namespace {

std::vector<std::int64_t> ternary_fixed_weight(std::size_t n, std::size_t h, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::vector<std::int64_t> s(n, 0);
    for (std::size_t i = 0; i < h; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
        s[idx[i]] = (rng() & 1) ? 1 : -1;
    }
    return s;
}

// Each coefficient is -1 or 1 with probability 1/4, 0 otherwise.
std::vector<std::int64_t> ternary_zo(std::size_t n, Rng& rng) {
    std::vector<std::int64_t> v(n);
    for (auto& x : v) {
        const auto bits = rng() & 3;
        x = bits == 0 ? -1 : bits == 1 ? 1 : 0;
    }
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Keys

SwitchingKey CkksContext::make_switching_key(const SecretKey& sk, const RnsPolynomial& s_from,
                                             Rng& rng) const {
    if (s_from.basis() != all_primes_ || s_from.domain() != Domain::ntt) {
        throw MismatchError("switching-key source must be an NTT polynomial over Q and P");
    }
    const std::size_t rows_q = params_.l_max + 1;
    std::vector<u32> p_mod_q(rows_q);
    for (std::size_t i = 0; i < rows_q; ++i) {
        u64 prod = 1;
        for (u32 p : params_.p_basis()) prod = prod * (p % all_primes_[i]) % all_primes_[i];
        p_mod_q[i] = static_cast<u32>(prod);
    }

    SwitchingKey key;
    for (std::size_t j = 0; j < params_.dnum; ++j) {
        RnsPolynomial a = uniform_ntt(all_primes_, rng);
        RnsPolynomial b = small_to_ntt(gaussian(rng), all_primes_);
        ele_sub_inplace(b, hada_mult(a, sk.s));
        const std::size_t first = j * params_.alpha;
        const std::size_t last = std::min(first + params_.alpha, rows_q);
        for (std::size_t i = first; i < last; ++i) {
            const Modulus q(all_primes_[i]);
            auto dst = b.row(i);
            auto src = s_from.row(i);
            for (std::size_t c = 0; c < n(); ++c) dst[c] = q.add(dst[c], q.mul(p_mod_q[i], src[c]));
        }
        key.b.push_back(std::move(b));
        key.a.push_back(std::move(a));
    }
    return key;
}

SwitchingKey CkksContext::make_rotation_key(const SecretKey& sk, std::size_t r, Rng& rng) const {
    if (r >= slots()) throw RangeError("rotation index " + std::to_string(r) + " out of range");
    return make_switching_key(sk, forbenius_map(sk.s, r), rng);
}

KeySet CkksContext::keygen(u64 seed, const std::vector<std::size_t>& rotations) const {
    for (auto r : rotations)
        if (r >= slots()) throw RangeError("rotation index " + std::to_string(r) + " out of range");
    Rng rng(seed);
    KeySet keys;
    keys.secret.hamming_weight = n() / 2;
    const auto s = ternary_fixed_weight(n(), keys.secret.hamming_weight, rng);
    keys.secret.coeffs.assign(s.begin(), s.end());
    keys.secret.s = small_to_ntt(s, all_primes_);

    const auto q_basis = params_.q_basis(max_level());
    keys.pub.a = uniform_ntt(q_basis, rng);
    keys.pub.b = small_to_ntt(gaussian(rng), q_basis);
    ele_sub_inplace(keys.pub.b, hada_mult(keys.pub.a, keys.secret.s.rows(0, q_basis.size())));

    keys.relin = make_switching_key(keys.secret, hada_mult(keys.secret.s, keys.secret.s), rng);
    for (auto r : rotations) keys.rotation.emplace(r, make_rotation_key(keys.secret, r, rng));
    keys.conjugation = make_switching_key(keys.secret, conjugate(keys.secret.s), rng);
    return keys;
}

// ---------------------------------------------------------------------------
// Encryption

Ciphertext CkksContext::encrypt(const Plaintext& pt, const PublicKey& pk, Rng& rng) const {
    const std::size_t rows = pt.level + 1;
    if (pt.level > max_level() || pt.poly.basis() != params_.q_basis(pt.level)) {
        throw LevelError("plaintext basis does not match its level");
    }
    if (pk.b.size() < rows) throw LevelError("public key has fewer primes than the plaintext");
    const auto basis = pt.poly.basis();
    const auto v = small_to_ntt(ternary_zo(n(), rng), basis);
    Ciphertext ct;
    ct.b = hada_mult(v, pk.b.rows(0, rows));
    ele_add_inplace(ct.b, small_to_ntt(gaussian(rng), basis));
    ele_add_inplace(ct.b, to_ntt(pt.poly));
    ct.a = hada_mult(v, pk.a.rows(0, rows));
    ele_add_inplace(ct.a, small_to_ntt(gaussian(rng), basis));
    ct.scale = pt.scale;
    ct.level = pt.level;
    return ct;
}

Plaintext CkksContext::decrypt(const Ciphertext& ct, const SecretKey& sk) const {
    const std::size_t rows = ct.level + 1;
    RnsPolynomial s = sk.s.rows(0, rows);
    RnsPolynomial a = to_ntt(ct.a);
    RnsPolynomial m = to_ntt(ct.b);
    mul_acc(m, a, s);
    return Plaintext{std::move(m), ct.scale, ct.level};
}

// ---------------------------------------------------------------------------
// Operations

Ciphertext CkksContext::hadd(const Ciphertext& x, const Ciphertext& y) const {
    require_same_shape(x, y);
    return Ciphertext{ele_add(x.b, y.b), ele_add(x.a, y.a), x.scale, x.level};
}

Ciphertext CkksContext::hsub(const Ciphertext& x, const Ciphertext& y) const {
    require_same_shape(x, y);
    return Ciphertext{ele_sub(x.b, y.b), ele_sub(x.a, y.a), x.scale, x.level};
}

Ciphertext CkksContext::cmult(const Ciphertext& ct, const Plaintext& pt) const {
    require_ntt(ct);
    if (pt.poly.domain() != Domain::ntt) throw DomainError("cmult expects an NTT-domain plaintext");
    if (ct.level != pt.level) throw MismatchError("cmult: plaintext and ciphertext levels differ");
    return Ciphertext{hada_mult(ct.b, pt.poly), hada_mult(ct.a, pt.poly), ct.scale * pt.scale,
                      ct.level};
}

std::pair<RnsPolynomial, RnsPolynomial> CkksContext::key_switch(const RnsPolynomial& d,
                                                                const SwitchingKey& ksk) const {
    if (d.domain() != Domain::ntt) throw DomainError("key_switch expects an NTT-domain input");
    if (d.size() == 0 || d.size() > max_level() + 1 ||
        d.basis() != params_.q_basis(d.size() - 1)) {
        throw MismatchError("key_switch input must be over q_0..q_l");
    }
    if (ksk.size() != params_.dnum) throw MismatchError("switching key has the wrong pair count");
    for (std::size_t j = 0; j < ksk.size(); ++j) {
        if (ksk.b[j].basis() != all_primes_ || ksk.a[j].basis() != all_primes_) {
            throw MismatchError("switching key basis does not match the context");
        }
    }
    const std::size_t level = d.size() - 1;
    const auto ext = params_.extended_basis(level);

    // Dcomp + ModUp: each alpha-row slice is lifted to q_0..q_l, P.
    const auto slices = split_rows(to_coeff(d), params_.alpha);
    RnsPolynomial acc0(n(), ext, Domain::ntt);
    RnsPolynomial acc1(n(), ext, Domain::ntt);
    for (std::size_t j = 0; j < slices.size(); ++j) {
        const RnsPolynomial up = to_ntt(fast_basis_conv(slices[j], ext));
        // Inner product with the key pair of this slice.
        mul_acc(acc0, up, ksk.b[j].select(ext));
        mul_acc(acc1, up, ksk.a[j].select(ext));
    }
    return {mod_down(acc0, level), mod_down(acc1, level)};
}

RnsPolynomial CkksContext::mod_down(const RnsPolynomial& acc, std::size_t level) const {
    const std::size_t rows = level + 1;
    const auto q_basis = params_.q_basis(level);
    RnsPolynomial conv = to_ntt(fast_basis_conv(to_coeff(acc.rows(rows, params_.k)), q_basis));
    RnsPolynomial out = acc.rows(0, rows);
    ele_sub_inplace(out, conv);
    return scalar_mult(out, inverse_of_product_mod(params_.p_basis(), q_basis));
}

Ciphertext CkksContext::hmult(const Ciphertext& x, const Ciphertext& y,
                              const SwitchingKey& relin) const {
    require_same_shape(x, y);
    require_ntt(x);
    RnsPolynomial d0 = hada_mult(x.b, y.b);
    RnsPolynomial d1 = hada_mult(x.a, y.b);
    mul_acc(d1, y.a, x.b);
    const RnsPolynomial d2 = hada_mult(x.a, y.a);
    auto [u0, u1] = key_switch(d2, relin);
    ele_add_inplace(d0, u0);
    ele_add_inplace(d1, u1);
    return Ciphertext{std::move(d0), std::move(d1), x.scale * y.scale, x.level};
}

Ciphertext CkksContext::hrotate(const Ciphertext& ct, std::size_t r, const SwitchingKey& rot_key) const {
    require_ntt(ct);
    if (r >= slots()) throw RangeError("rotation index " + std::to_string(r) + " out of range");
    auto [u0, u1] = key_switch(forbenius_map(ct.a, r), rot_key);
    ele_add_inplace(u0, forbenius_map(ct.b, r));
    return Ciphertext{std::move(u0), std::move(u1), ct.scale, ct.level};
}

Ciphertext CkksContext::hrotate(const Ciphertext& ct, std::size_t r, const KeySet& keys) const {
    if (r >= slots()) throw RangeError("rotation index " + std::to_string(r) + " out of range");
    auto it = keys.rotation.find(r);
    if (it == keys.rotation.end()) {
        throw ParameterError("no rotation key for index " + std::to_string(r));
    }
    return hrotate(ct, r, it->second);
}

Ciphertext CkksContext::hconjugate(const Ciphertext& ct, const SwitchingKey& conj_key) const {
    require_ntt(ct);
    auto [u0, u1] = key_switch(conjugate(ct.a), conj_key);
    ele_add_inplace(u0, conjugate(ct.b));
    return Ciphertext{std::move(u0), std::move(u1), ct.scale, ct.level};
}

namespace {

// (c - [c]_{q_l}) * q_l^-1 over q_0..q_{l-1}, with [c]_{q_l} centered.
RnsPolynomial divide_by_last(const CkksContext& ctx, const RnsPolynomial& poly) {
    const std::size_t rows = poly.size() - 1;
    const u32 ql = poly.prime(rows);
    const Domain domain = poly.domain();
    const RnsPolynomial last = ctx.to_coeff(poly.rows(rows, 1));
    const auto basis = prefix(poly.basis(), rows);

    RnsPolynomial lifted(poly.n(), basis, Domain::coefficient);
    for (std::size_t i = 0; i < rows; ++i) {
        const u32 q = basis[i];
        const u32 ql_mod = ql % q;
        auto dst = lifted.row(i);
        auto src = last.row(0);
        for (std::size_t c = 0; c < poly.n(); ++c) {
            const u32 v = src[c];
            dst[c] = v > ql / 2 ? static_cast<u32>((static_cast<u64>(v % q) + q - ql_mod) % q) : v % q;
        }
    }
    if (domain == Domain::ntt) lifted = ctx.to_ntt(lifted);
    RnsPolynomial out = poly.rows(0, rows);
    ele_sub_inplace(out, lifted);
    std::vector<u32> inv(rows);
    for (std::size_t i = 0; i < rows; ++i) inv[i] = static_cast<u32>(inv_mod(ql % basis[i], basis[i]));
    return scalar_mult(out, inv);
}

}  // namespace

Ciphertext CkksContext::rescale(const Ciphertext& ct) const {
    if (ct.level == 0) throw LevelError("rescale at level 0: modulus budget exhausted");
    const u32 ql = ct.b.prime(ct.level);
    return Ciphertext{divide_by_last(*this, ct.b), divide_by_last(*this, ct.a), ct.scale / ql,
                      ct.level - 1};
}

Ciphertext CkksContext::drop_to_level(const Ciphertext& ct, std::size_t level) const {
    if (level > ct.level) throw LevelError("cannot raise a ciphertext's level");
    return Ciphertext{ct.b.rows(0, level + 1), ct.a.rows(0, level + 1), ct.scale, level};
}

}  // namespace kfhe
