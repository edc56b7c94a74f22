#include <random>
#include <set>

#include <gtest/gtest.h>

#include "kfhe/errors.hpp"
#include "kfhe/params.hpp"

using namespace kfhe;

namespace {

// Trial division: independent of the library's Miller-Rabin.
bool trial_division_prime(u64 n) {
    if (n < 2) return false;
    for (u64 d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

u64 slow_pow(u64 b, u64 e, u64 m) {
    u64 r = 1 % m;
    for (u64 i = 0; i < e; ++i) r = r * b % m;
    return r;
}

}  // namespace

TEST(PrimeChain, SeventeenIsAdmissibleForDegreeFour) {
    auto chain = chain_from_primes(4, {17}, {});
    ASSERT_EQ(chain.q.size(), 1u);
    EXPECT_EQ(chain.q[0].value, 17u);
    EXPECT_EQ(chain.q[0].psi, 9u);
}

TEST(PrimeChain, SixPrimesThirtyBits) {
    const std::size_t n = 1 << 12;
    auto chain = generate_prime_chain(n, 4, 1, 30);
    ASSERT_EQ(chain.q.size(), 5u);
    ASSERT_EQ(chain.p.size(), 1u);
    std::set<u32> seen;
    std::mt19937_64 rng(7);
    for (const auto* list : {&chain.q, &chain.p}) {
        for (const auto& pr : *list) {
            EXPECT_TRUE(trial_division_prime(pr.value)) << pr.value;
            EXPECT_EQ((pr.value - 1) % (2 * n), 0u);
            EXPECT_GE(pr.value, 1u << 29);
            EXPECT_LT(pr.value, 1u << 30);
            EXPECT_TRUE(seen.insert(pr.value).second);
            // Fermat surrogate on random bases
            for (int t = 0; t < 8; ++t) {
                const u64 x = 2 + rng() % (pr.value - 3);
                EXPECT_EQ(pow_mod(x, pr.value - 1, pr.value), 1u);
            }
            EXPECT_EQ(pow_mod(pr.psi, n, pr.value), pr.value - 1u);
            EXPECT_EQ(pow_mod(pr.psi, 2 * n, pr.value), 1u);
            EXPECT_EQ(static_cast<u64>(pr.psi) * pr.psi_inv % pr.value, 1u);
        }
    }
}

TEST(PrimeChain, DescendingAndDeterministic) {
    auto a = generate_prime_chain(1 << 10, 3, 2, 28);
    auto b = generate_prime_chain(1 << 10, 3, 2, 28);
    EXPECT_EQ(a, b);
    // Special primes are the two largest found; the rest continue downward.
    EXPECT_GT(a.p[0].value, a.p[1].value);
    EXPECT_GT(a.p[1].value, a.q[0].value);
    for (std::size_t i = 1; i < a.q.size(); ++i) EXPECT_GT(a.q[i - 1].value, a.q[i].value);
    // Nothing admissible was skipped between 2^28 and the first prime.
    for (u64 c = a.p[0].value + 2 * (1 << 10); c < (1u << 28); c += 2 * (1 << 10))
        EXPECT_FALSE(trial_division_prime(c));
}

TEST(PrimeChain, Errors) {
    EXPECT_THROW(generate_prime_chain(1 << 12, 2, 1, 33), RangeError);
    // 19-bit primes = 1 mod 2^15 do not exist.
    EXPECT_THROW(generate_prime_chain(1 << 14, 0, 1, 19), ParameterError);
    EXPECT_THROW(chain_from_primes(4, {17, 17}, {}), ParameterError);
    EXPECT_THROW(chain_from_primes(4, {15}, {}), ParameterError);
}

TEST(NegacyclicRoot, SmallExample) {
    const u32 psi = find_negacyclic_root(17, 4);
    EXPECT_EQ(psi, 9u);
    EXPECT_EQ(slow_pow(9, 4, 17), 16u);
    EXPECT_EQ(slow_pow(9, 8, 17), 1u);
    EXPECT_EQ(psi * slow_pow(psi, 15, 17) % 17, 1u);
    EXPECT_NO_THROW(find_negacyclic_root(17, 8));  // 17 = 1 mod 16
    EXPECT_THROW(find_negacyclic_root(17, 16), ParameterError);
}

TEST(NegacyclicRoot, OrderIsExactlyTwoN) {
    for (std::size_t n : {16u, 256u, 4096u}) {
        auto chain = generate_prime_chain(n, 2, 1, 30);
        for (const auto& pr : chain.q) {
            // psi^n = -1 implies the order divides 2n but not n, i.e. equals 2n.
            EXPECT_EQ(pow_mod(pr.psi, n, pr.value), pr.value - 1u);
            EXPECT_EQ(pr.psi, pow_mod(pr.generator, (pr.value - 1) / (2 * n), pr.value));
        }
    }
}

TEST(NttPlanTest, Splits) {
    EXPECT_EQ(build_ntt_plan(1 << 16), (NttPlan{256, 256}));
    EXPECT_EQ(build_ntt_plan(1 << 15), (NttPlan{128, 256}));
    EXPECT_EQ(build_ntt_plan(4), (NttPlan{2, 2}));
    EXPECT_EQ(build_ntt_plan(8), (NttPlan{2, 4}));
    for (unsigned log_n = 2; log_n <= 18; ++log_n) {
        auto plan = build_ntt_plan(std::size_t{1} << log_n);
        EXPECT_EQ(plan.n(), std::size_t{1} << log_n);
        EXPECT_LE(plan.n1, plan.n2);
        EXPECT_LT(static_cast<u64>(plan.n1) * 255 * 255, u64{1} << 31);
    }
    EXPECT_THROW(build_ntt_plan(12), ParameterError);
}

TEST(Twiddles, ElementsMatchExponentFormula) {
    // n = 4, plan (2,2), q = 17, psi = 9: recompute every element by exponentiation.
    const u32 q = 17, psi = 9;
    const auto plan = build_ntt_plan(4);
    const auto fwd = build_twiddles(plan, q, psi, Direction::forward);
    const u64 psi1 = slow_pow(psi, plan.n2, q), psi2 = slow_pow(psi, plan.n1, q);
    for (u64 i = 0; i < 2; ++i) {
        for (u64 j = 0; j < 2; ++j) {
            EXPECT_EQ(fwd.w1(i, j), slow_pow(psi1, 2 * i * j + j, q));
            EXPECT_EQ(fwd.w2(i, j), slow_pow(psi, 2 * i * j + j, q));
            EXPECT_EQ(fwd.w3(i, j), slow_pow(psi2, 2 * i * j, q));
        }
    }
    EXPECT_EQ(fwd.w2(0, 0), 1u);
    // psi2 = 9^2 = 81 = 13 mod 17; w3[1][1] = 13^2 mod 17 = 16.
    EXPECT_EQ(fwd.w3(1, 1), 16u);

    const auto inv = build_twiddles(plan, q, psi, Direction::inverse);
    const u64 phi = slow_pow(psi, q - 2, q);
    const u64 phi1 = slow_pow(phi, plan.n2, q), phi2 = slow_pow(phi, plan.n1, q);
    for (u64 i = 0; i < 2; ++i) {
        for (u64 j = 0; j < 2; ++j) {
            EXPECT_EQ(inv.w1(i, j), slow_pow(phi1, 2 * i * j + i, q));
            EXPECT_EQ(inv.w2(i, j), slow_pow(phi, 2 * i * j + j, q));
            EXPECT_EQ(inv.w3(i, j), slow_pow(phi2, 2 * i * j, q));
        }
    }
}

TEST(Twiddles, LargerPlanMatchesFormulaAndIsDeterministic) {
    const std::size_t n = 1 << 9;
    const auto chain = generate_prime_chain(n, 0, 1, 30);
    const auto& pr = chain.q[0];
    const auto plan = build_ntt_plan(n);
    const auto a = build_twiddles(plan, pr.value, pr.psi, Direction::forward);
    const auto b = build_twiddles(plan, pr.value, pr.psi, Direction::forward);
    EXPECT_EQ(a.w1, b.w1);
    EXPECT_EQ(a.w2, b.w2);
    EXPECT_EQ(a.w3, b.w3);
    std::mt19937 rng(3);
    for (int t = 0; t < 50; ++t) {
        const u64 i = rng() % plan.n1, j = rng() % plan.n2;
        EXPECT_EQ(a.w2(i, j), pow_mod(pr.psi, 2 * i * j + j, pr.value));
        const u64 j3 = rng() % plan.n2;
        EXPECT_EQ(a.w3(j, j3), pow_mod(pow_mod(pr.psi, plan.n1, pr.value), 2 * j * j3, pr.value));
    }
}

TEST(SegmentedTwiddlesTest, ByteSlicing) {
    U32Matrix m(1, 2);
    m(0, 0) = 0x12345678u;
    m(0, 1) = 0;
    const auto planes = segment_matrix(m);
    EXPECT_EQ(planes[0](0, 0), 0x78);
    EXPECT_EQ(planes[1](0, 0), 0x56);
    EXPECT_EQ(planes[2](0, 0), 0x34);
    EXPECT_EQ(planes[3](0, 0), 0x12);
    for (const auto& p : planes) EXPECT_EQ(p(0, 1), 0);
}

TEST(SegmentedTwiddlesTest, FuseInvertsSegmentOnBoundaryAndRandomValues) {
    U32Matrix m(100, 100);
    std::mt19937 rng(11);
    for (auto& v : m.data) v = rng();
    const u32 boundary[] = {0u, 1u, 255u, 65536u, 0xffffffffu};
    for (std::size_t i = 0; i < 5; ++i) m.data[i] = boundary[i];
    for (Layout l : {Layout::row_major, Layout::column_major}) {
        EXPECT_EQ(fuse_planes(segment_matrix(m, l)), m);
    }
}

TEST(SegmentedTwiddlesTest, TwiddlePlanesReconstructSource) {
    const std::size_t n = 1 << 8;
    const auto chain = generate_prime_chain(n, 0, 1, 30);
    const auto plan = build_ntt_plan(n);
    const auto tw = build_twiddles(plan, chain.q[0].value, chain.q[0].psi, Direction::forward);
    const auto seg = segment_twiddles(tw);
    EXPECT_EQ(fuse_planes(seg.w1), tw.w1);
    EXPECT_EQ(fuse_planes(seg.w2), tw.w2);
    EXPECT_EQ(fuse_planes(seg.w3), tw.w3);
    EXPECT_EQ(seg.w1[0].layout, Layout::row_major);
    EXPECT_EQ(seg.w3[0].layout, Layout::column_major);
}

TEST(Params, Validation) {
    auto p = make_params(1 << 10, 3, 2, 2, 30);
    EXPECT_NO_THROW(p.validate());
    EXPECT_EQ(p.alpha, 2u);
    EXPECT_THROW(make_params(1 << 10, 3, 2, 3, 30), ParameterError);  // 4 % 3 != 0
    EXPECT_THROW(make_params(1 << 9, 1, 1, 1, 30), ParameterError);   // n < 2^10
    // One special prime cannot exceed a two-prime slice of the same width.
    EXPECT_THROW(make_params(1 << 10, 3, 1, 2, 30), ParameterError);
}

TEST(Params, JsonRoundTripAndHash) {
    const auto p = preset("default");
    const auto doc = to_json(p);
    EXPECT_TRUE(doc["q"][0].is_string());
    const auto back = params_from_json(doc);
    EXPECT_EQ(back, p);
    EXPECT_EQ(back.hash(), p.hash());
    auto other = preset("set_a");
    EXPECT_NE(other.hash(), p.hash());
    auto bad = doc;
    bad["q"][0] = "15";
    EXPECT_THROW(params_from_json(bad), ParameterError);
    EXPECT_THROW(preset("nope"), ParameterError);
}

TEST(Params, PaperSetsStructure) {
    struct Expect {
        const char* name;
        std::size_t n;
        unsigned log_pq;
        std::size_t k;
    };
    for (auto e : {Expect{"set_a", 1 << 12, 108, 2}, Expect{"set_b", 1 << 13, 217, 4},
                   Expect{"set_c", 1 << 14, 437, 8}}) {
        const auto p = preset(e.name);
        EXPECT_EQ(p.n, e.n) << e.name;
        EXPECT_EQ(p.log_pq(), e.log_pq) << e.name;
        EXPECT_EQ(p.k, e.k) << e.name;
        for (u32 q : p.extended_basis(p.l_max)) EXPECT_EQ((q - 1) % (2 * p.n), 0u);
    }
}
