// Acceptance run: one PASS/FAIL line per headline property. Tolerances are
// fixed here. A property whose precondition does not hold on this machine is
// reported as N/A with the measured value and does not count as a failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kfhe/batch.hpp"
#include "kfhe/bench.hpp"
#include "kfhe/ckks.hpp"
#include "kfhe/kernels.hpp"
#include "kfhe/ntt.hpp"
#include "kfhe/parallel.hpp"

using namespace kfhe;

namespace {

constexpr double kRoundTrip = 0x1p-20;
constexpr double kAdd = 0x1p-19;
constexpr double kMult = 0x1p-18;
constexpr double kCircuit = 0x1p-15;
constexpr double kMinBatchSpeedup = 1.5;
constexpr unsigned kThroughputThreads = 8;

enum class Status { pass, fail, not_applicable };

struct Outcome {
    Status status;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string pow2(double e) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "2^%.1f", e > 0 ? std::log2(e) : -INFINITY);
    return buf;
}

using Rng64 = std::mt19937_64;

// Straightforward u128 arithmetic, independent of the library's reductions.
u64 mulmod(u64 a, u64 b, u64 q) { return static_cast<u64>(static_cast<u128>(a) * b % q); }

u64 powmod(u64 b, u64 e, u64 q) {
    u64 r = 1;
    for (b %= q; e; e >>= 1, b = mulmod(b, b, q))
        if (e & 1) r = mulmod(r, b, q);
    return r;
}

// A_k = sum_j a_j psi^((2k+1) j) mod q.
std::vector<u32> oracle_ntt(std::span<const u32> a, u64 q, u64 psi) {
    const std::size_t n = a.size();
    std::vector<u64> pw(2 * n);
    pw[0] = 1;
    for (std::size_t i = 1; i < 2 * n; ++i) pw[i] = mulmod(pw[i - 1], psi, q);
    std::vector<u32> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        u128 acc = 0;
        const std::size_t step = 2 * k + 1;
        std::size_t e = 0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += static_cast<u128>(a[j]) * pw[e];
            e += step;
            e &= 2 * n - 1;
        }
        out[k] = static_cast<u32>(acc % q);
    }
    return out;
}

std::vector<u32> schoolbook(std::span<const u32> a, std::span<const u32> b, u64 q) {
    const std::size_t n = a.size();
    std::vector<u128> pos(n, 0), neg(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const u128 p = static_cast<u128>(a[i]) * b[j];
            if (i + j < n) pos[i + j] += p;
            else neg[i + j - n] += p;
        }
    std::vector<u32> c(n);
    for (std::size_t k = 0; k < n; ++k) c[k] = static_cast<u32>((pos[k] % q + q - neg[k] % q) % q);
    return c;
}

RnsPolynomial random_poly(std::size_t n, const std::vector<u32>& basis, Domain d, Rng64& rng) {
    RnsPolynomial p(n, basis, d);
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (auto& v : p.row(i)) v = static_cast<u32>(rng() % basis[i]);
    return p;
}

std::vector<Complex> unit_disk(std::size_t count, Rng64& rng) {
    std::uniform_real_distribution<double> radius(0.0, 1.0), angle(0.0, 2 * M_PI);
    std::vector<Complex> v(count);
    for (auto& x : v) x = std::polar(std::sqrt(radius(rng)), angle(rng));
    return v;
}

// max |x - y| / max(max |y|, 1)
double slot_error(const std::vector<Complex>& got, const std::vector<Complex>& want) {
    double diff = 0, ref = 1;
    for (std::size_t i = 0; i < want.size(); ++i) {
        diff = std::max(diff, std::abs(got[i] - want[i]));
        ref = std::max(ref, std::abs(want[i]));
    }
    return diff / ref;
}

struct Scheme {
    CkksContext ctx{preset("default")};
    std::vector<std::size_t> rotations;
    KeySet keys;
    double worst_hmult = 0;

    Scheme() {
        const std::size_t s = ctx.slots();
        rotations = {1, 2, 3, 5, 8, 64, s - 1};
        keys = ctx.keygen(2024, rotations);
    }
    Ciphertext enc(const std::vector<Complex>& v, Rng64& rng) const {
        return ctx.encrypt(ctx.encode(v), keys.pub, rng);
    }
    Ciphertext enc_at(const std::vector<Complex>& v, const Scale& scale, std::size_t level, Rng64& rng) const {
        return ctx.encrypt(ctx.encode(v, scale, level), keys.pub, rng);
    }
    std::vector<Complex> dec(const Ciphertext& ct) const { return ctx.decode(ctx.decrypt(ct, keys.secret)); }
};

Scheme& scheme() {
    static Scheme s;
    return s;
}

// ---------------------------------------------------------------------------

Outcome ntt_oracle_equivalence() {
    const auto params = preset("default");
    std::vector<u32> primes = params.q_basis(params.l_max);
    for (u32 p : params.p_basis()) primes.push_back(p);
    Rng64 rng(1);
    std::size_t compared = 0;
    for (std::size_t n : {16, 64, 256, 1024, 4096}) {
        TwiddleFactorSet tw(n, primes);
        for (u32 q : primes) {
            const u64 psi = tw.at(q).psi;
            if (powmod(psi, n, q) != q - 1) return verdict(false, "psi is not a negacyclic root for q=" + std::to_string(q));
        }
        for (int t = 0; t < 100; ++t) {
            const auto a = random_poly(n, primes, Domain::coefficient, rng);
            std::vector<std::vector<u32>> expect;
            for (std::size_t i = 0; i < primes.size(); ++i) expect.push_back(oracle_ntt(a.row(i), primes[i], tw.at(primes[i]).psi));
            for (auto backend : kAllBackends) {
                const auto out = ntt_forward(a, tw, backend);
                for (std::size_t i = 0; i < primes.size(); ++i) {
                    if (!std::equal(expect[i].begin(), expect[i].end(), out.row(i).begin())) {
                        return verdict(false, std::string(to_string(backend)) + " differs at n=" + std::to_string(n) +
                                                  " q=" + std::to_string(primes[i]));
                    }
                    ++compared;
                }
            }
        }
    }
    return verdict(true, std::to_string(compared) + " transforms bit-exact (5 sizes x " + std::to_string(primes.size()) +
                             " primes x 100 inputs x 3 backends)");
}

Outcome tcu_constraints() {
    const auto c = tcu_counters();
    std::ostringstream d;
    d << c.gemm_calls << " byte GEMMs, " << c.multiplies << " 8-bit multiplies, max accumulator " << c.max_accumulator
      << " (" << pow2(static_cast<double>(c.max_accumulator)) << "), " << c.accumulator_violations
      << " accumulator violations; operands are 8-bit by type";
    return verdict(c.gemm_calls > 0 && c.accumulator_violations == 0 && c.max_accumulator < (u64{1} << 31), d.str());
}

Outcome convolution_theorem() {
    const std::size_t n = 1024;
    const u32 q = preset("default").q_basis(0)[0];
    TwiddleFactorSet tw(n, {q});
    Rng64 rng(3);
    for (int t = 0; t < 100; ++t) {
        const auto a = random_poly(n, {q}, Domain::coefficient, rng);
        const auto b = random_poly(n, {q}, Domain::coefficient, rng);
        const auto expect = schoolbook(a.row(0), b.row(0), q);
        for (auto backend : kAllBackends) {
            const auto c = ntt_inverse(hada_mult(ntt_forward(a, tw, backend), ntt_forward(b, tw, backend)), tw, backend);
            if (!std::equal(expect.begin(), expect.end(), c.row(0).begin()))
                return verdict(false, std::string(to_string(backend)) + " product differs, pair " + std::to_string(t));
        }
    }
    return verdict(true, "100 pairs at n=1024, q=" + std::to_string(q) + ", all backends bit-exact");
}

Outcome ckks_roundtrip() {
    auto& s = scheme();
    Rng64 rng(4);
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
        const auto v = unit_disk(s.ctx.slots(), rng);
        worst = std::max(worst, slot_error(s.dec(s.enc(v, rng)), v));
    }
    return verdict(worst < kRoundTrip, "max error " + pow2(worst) + " over 100 vectors (bound 2^-20)");
}

Outcome homomorphic_ops() {
    auto& s = scheme();
    const auto& ctx = s.ctx;
    const std::size_t slots = ctx.slots();
    Rng64 rng(5);
    double e_add = 0, e_mul = 0, e_cmul = 0, e_rot = 0, e_circ = 0;
    for (int t = 0; t < 100; ++t) {
        const auto x = unit_disk(slots, rng), y = unit_disk(slots, rng);
        std::vector<Complex> sum(slots), prod(slots);
        for (std::size_t i = 0; i < slots; ++i) {
            sum[i] = x[i] + y[i];
            prod[i] = x[i] * y[i];
        }
        const auto cx = s.enc(x, rng), cy = s.enc(y, rng);
        e_add = std::max(e_add, slot_error(s.dec(ctx.hadd(cx, cy)), sum));
        e_mul = std::max(e_mul, slot_error(s.dec(ctx.rescale(ctx.hmult(cx, cy, s.keys.relin))), prod));
        e_cmul = std::max(e_cmul, slot_error(s.dec(ctx.rescale(ctx.cmult(cx, ctx.encode(y)))), prod));

        const std::size_t r = s.rotations[static_cast<std::size_t>(t) % s.rotations.size()];
        std::vector<Complex> shifted(slots);
        for (std::size_t j = 0; j < slots; ++j) shifted[(j + r) % slots] = x[j];
        e_rot = std::max(e_rot, slot_error(s.dec(ctx.hrotate(cx, r, s.keys)), shifted));

        auto acc = cx;
        auto expect = x;
        for (int depth = 0; depth < 3; ++depth) {
            const auto m = unit_disk(slots, rng), c = unit_disk(slots, rng);
            acc = ctx.rescale(ctx.hmult(acc, s.enc_at(m, acc.scale, acc.level, rng), s.keys.relin));
            acc = ctx.hadd(acc, s.enc_at(c, acc.scale, acc.level, rng));
            for (std::size_t i = 0; i < slots; ++i) expect[i] = expect[i] * m[i] + c[i];
        }
        e_circ = std::max(e_circ, slot_error(s.dec(acc), expect));
    }
    s.worst_hmult = e_mul;
    std::ostringstream d;
    d << "hadd " << pow2(e_add) << " (<2^-19), hmult " << pow2(e_mul) << ", cmult " << pow2(e_cmul) << ", hrotate "
      << pow2(e_rot) << " (<2^-18), 3-level circuit " << pow2(e_circ) << " (<2^-15); 100 trials each";
    return verdict(e_add < kAdd && e_mul < kMult && e_cmul < kMult && e_rot < kMult && e_circ < kCircuit, d.str());
}

Outcome keyswitch_validity() {
    auto& s = scheme();
    const auto& ctx = s.ctx;
    Rng64 rng(6), key_rng(7);
    const auto self = ctx.make_switching_key(s.keys.secret, s.keys.secret.s, key_rng);
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t level = 1 + static_cast<std::size_t>(t) % ctx.max_level();
        const auto v = unit_disk(ctx.slots(), rng);
        const auto ct = s.enc_at(v, power_of_two_scale(40), level, rng);
        auto [u0, u1] = ctx.key_switch(ct.a, self);
        const Ciphertext switched{ele_add(ct.b, u0), u1, ct.scale, ct.level};
        worst = std::max(worst, slot_error(s.dec(switched), v));
    }
    std::ostringstream d;
    d << "self-switch max error " << pow2(worst) << " over 100 trials at levels 1.." << ctx.max_level()
      << "; relinearized hmult max error " << pow2(s.worst_hmult) << " (<2^-18)";
    return verdict(worst < kMult && s.worst_hmult > 0 && s.worst_hmult < kMult, d.str());
}

Outcome batching_bit_exact() {
    const auto params = preset("default");
    const auto basis = params.q_basis(params.l_max);
    const TwiddleFactorSet tw(params.n, basis);
    Rng64 rng(8);
    for (std::size_t b : {2, 32, 128}) {
        std::vector<RnsPolynomial> coeff, evals, other;
        for (std::size_t k = 0; k < b; ++k) {
            coeff.push_back(random_poly(params.n, basis, Domain::coefficient, rng));
            evals.push_back(random_poly(params.n, basis, Domain::ntt, rng));
            other.push_back(random_poly(params.n, basis, Domain::ntt, rng));
        }
        const auto buf_c = pack(coeff), buf_e = pack(evals), buf_o = pack(other);
        const std::string at = " at B=" + std::to_string(b);
        for (auto backend : kAllBackends) {
            const BatchAux aux{&tw, backend, nullptr, 0};
            const auto fwd = unpack(batched_apply(buf_c, BatchKernel::ntt, aux));
            const auto inv = unpack(batched_apply(buf_e, BatchKernel::intt, aux));
            for (std::size_t k = 0; k < b; ++k) {
                if (fwd[k] != ntt_forward(coeff[k], tw, backend)) return verdict(false, "ntt differs" + at);
                if (inv[k] != ntt_inverse(evals[k], tw, backend)) return verdict(false, "intt differs" + at);
            }
        }
        const BatchAux aux{nullptr, NttBackend::butterfly, &buf_o, 5};
        const auto mul = unpack(batched_apply(buf_e, BatchKernel::hada_mult, aux));
        const auto add = unpack(batched_apply(buf_e, BatchKernel::ele_add, aux));
        const auto sub = unpack(batched_apply(buf_e, BatchKernel::ele_sub, aux));
        const auto rot = unpack(batched_apply(buf_e, BatchKernel::forbenius_map, aux));
        for (std::size_t k = 0; k < b; ++k) {
            if (mul[k] != hada_mult(evals[k], other[k])) return verdict(false, "hada_mult differs" + at);
            if (add[k] != ele_add(evals[k], other[k])) return verdict(false, "ele_add differs" + at);
            if (sub[k] != ele_sub(evals[k], other[k])) return verdict(false, "ele_sub differs" + at);
            if (rot[k] != forbenius_map(evals[k], 5)) return verdict(false, "forbenius_map differs" + at);
        }
        std::vector<u32> item_major;
        for (const auto& it : coeff) item_major.insert(item_major.end(), it.data().begin(), it.data().end());
        const auto reordered = reorder_layout(item_major, b, basis.size(), params.n);
        if (reordered != buf_c.data()) return verdict(false, "pack is not the layout reorder" + at);
        if (reverse_reorder_layout(reordered, b, basis.size(), params.n) != item_major)
            return verdict(false, "reorder roundtrip is not the identity" + at);
    }
    return verdict(true, "6 kernels x B in {2, 32, 128} bit-identical to sequential, reorder roundtrip is the identity");
}

Outcome batching_throughput() {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    BenchConfig c;
    c.params = preset("default");
    c.batch_sizes = {1, 128};
    c.reps = 5;
    c.threads = hw;
    const auto rows = run_bench(OpKind::ntt, c);
    set_default_threads(1);
    if (rows.size() != 2 || rows[0].skipped || rows[1].skipped) return verdict(false, "a benchmark row was skipped");
    const double ratio = rows[1].ops_per_sec / rows[0].ops_per_sec;
    std::ostringstream d;
    d << "NTT throughput B=128 / B=1 = " << ratio << " (" << rows[1].ops_per_sec << " vs " << rows[0].ops_per_sec
      << " NTT/s) with " << hw << " hardware threads";
    if (hw < kThroughputThreads) {
        d << "; needs >= " << kThroughputThreads << " hardware threads, not applicable here";
        return {Status::not_applicable, d.str()};
    }
    return verdict(ratio >= kMinBatchSpeedup, d.str() + " (needs >= 1.5)");
}

Outcome presets() {
    struct Want {
        const char* name;
        std::size_t n;
        unsigned log_pq;
        std::size_t k;
    };
    std::ostringstream d;
    bool ok = true;
    for (const Want& w : {Want{"set_a", 1u << 12, 108, 2}, Want{"set_b", 1u << 13, 217, 4}, Want{"set_c", 1u << 14, 437, 8}}) {
        const auto p = preset(w.name);
        unsigned bits = 0;
        bool congruent = true;
        std::vector<u32> all = p.q_basis(p.l_max);
        for (u32 q : p.p_basis()) all.push_back(q);
        for (u32 q : all) {
            bits += static_cast<unsigned>(std::bit_width(q));
            congruent = congruent && q % (2 * p.n) == 1 && is_prime(q);
        }
        const bool good = p.n == w.n && bits == w.log_pq && p.k == w.k && p.p_basis().size() == w.k && congruent;
        ok = ok && good;
        d << w.name << ": N=" << p.n << " logPQ=" << bits << " K=" << p.k << (good ? " ok; " : " MISMATCH; ");
    }
    return verdict(ok, d.str() + "all primes = 1 mod 2N");
}

Outcome ntt_time_monotone() {
    BenchConfig c;
    c.params = preset("default");
    c.reps = 7;
    const auto rows = run_sweep_n({1u << 11, 1u << 12, 1u << 13, 1u << 14, 1u << 15, 1u << 16}, OpKind::ntt, c);
    std::ostringstream d;
    bool ok = rows.size() == 6;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ok = ok && !rows[i].skipped && (i == 0 || rows[i].wall_ms_median > rows[i - 1].wall_ms_median);
        d << (i ? ", " : "") << "n=2^" << std::bit_width(rows[i].n) - 1 << ": " << rows[i].wall_ms_median << " ms";
    }
    return verdict(ok, d.str() + " (L=7, butterfly)");
}

}  // namespace

int main() {
    set_default_threads(1);
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"ntt-oracle-equivalence", [] {
             reset_tcu_counters();
             return ntt_oracle_equivalence();
         }},
        {"tcu-constraint-fidelity", tcu_constraints},
        {"negacyclic-convolution", convolution_theorem},
        {"ckks-roundtrip-precision", ckks_roundtrip},
        {"homomorphic-correctness", homomorphic_ops},
        {"keyswitch-validity", keyswitch_validity},
        {"batching-bit-exactness", batching_bit_exact},
        {"batching-throughput", batching_throughput},
        {"parameter-presets", presets},
        {"ntt-time-monotone-in-n", ntt_time_monotone},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {Status::fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "N/A ";
        failures += o.status == Status::fail;
        std::printf("%s  %-26s %7.1fs  %s\n", tag, name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d criteria failed\n", failures);
    return failures ? 1 : 0;
}
