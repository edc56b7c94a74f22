#include "kfhe/bench.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <new>
#include <random>
#include <sstream>

#include "kfhe/errors.hpp"
#include "kfhe/kernels.hpp"
#include "kfhe/parallel.hpp"

namespace kfhe {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

std::size_t available_memory() {
    const long pages = sysconf(_SC_AVPHYS_PAGES);
    const long page = sysconf(_SC_PAGESIZE);
    if (pages <= 0 || page <= 0) return std::size_t{1} << 32;
    return static_cast<std::size_t>(pages) * static_cast<std::size_t>(page);
}

RnsPolynomial random_poly(std::size_t n, const std::vector<u32>& basis, Domain d, Rng& rng) {
    RnsPolynomial p(n, basis, d);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        std::uniform_int_distribution<u32> dist(0, basis[i] - 1);
        for (auto& v : p.row(i)) v = dist(rng);
    }
    return p;
}

std::vector<Complex> random_slots(std::size_t count, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Complex> v(count);
    for (auto& x : v) x = Complex(u(rng), u(rng)) * (1 / std::sqrt(2.0));
    return v;
}

bool is_kernel(OpKind op) {
    switch (op) {
        case OpKind::ntt:
        case OpKind::intt:
        case OpKind::hada_mult:
        case OpKind::ele_add:
        case OpKind::ele_sub:
        case OpKind::forbenius_map: return true;
        default: return false;
    }
}

BatchKernel to_batch_kernel(OpKind op) {
    switch (op) {
        case OpKind::ntt: return BatchKernel::ntt;
        case OpKind::intt: return BatchKernel::intt;
        case OpKind::hada_mult: return BatchKernel::hada_mult;
        case OpKind::ele_add: return BatchKernel::ele_add;
        case OpKind::ele_sub: return BatchKernel::ele_sub;
        default: return BatchKernel::forbenius_map;
    }
}

// Shared state for timing kernel-level operations on one parameter set.
struct KernelBench {
    TwiddleFactorSet twiddles;
    std::vector<u32> basis;

    KernelBench(const CkksParams& params)
        : twiddles(params.n, params.q_basis(params.l_max)), basis(params.q_basis(params.l_max)) {}

    std::function<void()> prepare(OpKind op, std::size_t batch, NttBackend backend, std::size_t n,
                                  Rng& rng) {
        const Domain d = op == OpKind::ntt ? Domain::coefficient : Domain::ntt;
        std::vector<RnsPolynomial> items, others;
        const auto proto = random_poly(n, basis, d, rng);
        const auto other = random_poly(n, basis, d, rng);
        items.assign(batch, proto);
        auto input = std::make_shared<BatchBuffer>(pack(items));
        std::shared_ptr<BatchBuffer> operand;
        if (op == OpKind::hada_mult || op == OpKind::ele_add || op == OpKind::ele_sub) {
            others.assign(batch, other);
            operand = std::make_shared<BatchBuffer>(pack(others));
        }
        BatchAux aux{&twiddles, backend, operand.get(), 1};
        const BatchKernel kernel = to_batch_kernel(op);
        return [input, operand, aux, kernel] { (void)batched_apply(*input, kernel, aux); };
    }
};

struct SchemeBench {
    CkksContext ctx;
    KeySet keys;

    SchemeBench(const CkksParams& params, NttBackend backend, u64 seed)
        : ctx(params, backend), keys(ctx.keygen(seed, {1})) {}

    std::function<void()> prepare(OpKind op, std::size_t batch, Rng& rng) {
        auto pt = ctx.encode(random_slots(ctx.slots(), rng));
        auto ct = ctx.encrypt(pt, keys.pub, rng);
        auto inputs = std::make_shared<std::vector<Ciphertext>>(batch, ct);
        auto outputs = std::make_shared<std::vector<Ciphertext>>(batch);
        auto plain = std::make_shared<Plaintext>(pt);
        const CkksContext* c = &ctx;
        const KeySet* k = &keys;
        return [=] {
            parallel_for(batch, [&](std::size_t i) {
                const Ciphertext& x = (*inputs)[i];
                switch (op) {
                    case OpKind::hadd: (*outputs)[i] = c->hadd(x, x); break;
                    case OpKind::cmult: (*outputs)[i] = c->cmult(x, *plain); break;
                    case OpKind::hmult: (*outputs)[i] = c->hmult(x, x, k->relin); break;
                    case OpKind::hrotate: (*outputs)[i] = c->hrotate(x, 1, *k); break;
                    case OpKind::rescale: (*outputs)[i] = c->rescale(x); break;
                    default: throw ParameterError("not a scheme operation");
                }
            });
        };
    }
};

BenchRow base_row(OpKind op, const BenchConfig& config, std::size_t batch) {
    BenchRow row;
    row.op = to_string(op);
    row.backend = to_string(config.backend);
    row.n = config.params.n;
    row.level = config.params.l_max;
    row.batch = batch;
    row.threads = config.threads;
    row.reps = config.reps;
    return row;
}

void time_job(BenchRow& row, const std::function<void()>& job, std::size_t reps) {
    job();  // warm-up
    std::vector<double> times;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto start = Clock::now();
        job();
        times.push_back(elapsed_ms(start));
    }
    row.wall_ms_median = median(times);
    row.ops_per_sec = row.wall_ms_median > 0 ? row.batch * 1000.0 / row.wall_ms_median : 0;
}

std::string format_double(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

}  // namespace

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    out << kBenchCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.op << ',' << r.backend << ',' << r.n << ',' << r.level << ',' << r.batch << ','
            << r.threads << ',' << r.reps << ',';
        if (!r.skipped) out << format_double(r.wall_ms_median) << ',' << format_double(r.ops_per_sec);
        else out << ',';
        out << '\n';
    }
    return out.str();
}

nlohmann::json bench_json(const std::vector<BenchRow>& rows) {
    auto arr = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j = {{"op", r.op},       {"backend", r.backend}, {"n", r.n},
                            {"level", r.level}, {"batch", r.batch},     {"threads", r.threads},
                            {"reps", r.reps},   {"skipped", r.skipped}};
        if (r.skipped) {
            j["wall_ms_median"] = nullptr;
            j["ops_per_sec"] = nullptr;
            j["note"] = r.note;
        } else {
            j["wall_ms_median"] = r.wall_ms_median;
            j["ops_per_sec"] = r.ops_per_sec;
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<BenchRow> run_bench(OpKind op, const BenchConfig& config) {
    if (config.reps == 0) throw ParameterError("repetitions must be at least 1");
    set_default_threads(std::max<std::size_t>(1, config.threads));
    Rng rng(config.seed);
    const std::size_t budget = config.memory_budget.value_or(available_memory());
    const std::size_t unit = working_set_bytes(config.params, op);

    std::optional<KernelBench> kernels;
    std::optional<SchemeBench> scheme;
    std::vector<BenchRow> rows;
    for (std::size_t batch : config.batch_sizes) {
        if (batch == 0) throw ParameterError("batch sizes must be positive");
        BenchRow row = base_row(op, config, batch);
        if (unit > budget / batch) {
            row.skipped = true;
            row.note = "working set of " + std::to_string(unit) + " bytes x " + std::to_string(batch) +
                       " exceeds the memory budget of " + std::to_string(budget) + " bytes";
            rows.push_back(row);
            continue;
        }
        try {
            std::function<void()> job;
            if (is_kernel(op)) {
                if (!kernels) kernels.emplace(config.params);
                job = kernels->prepare(op, batch, config.backend, config.params.n, rng);
            } else {
                if (!scheme) scheme.emplace(config.params, config.backend, config.seed);
                job = scheme->prepare(op, batch, rng);
            }
            time_job(row, job, config.reps);
        } catch (const std::bad_alloc&) {
            row.skipped = true;
            row.note = "allocation failed";
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<BenchRow> run_sweep_n(const std::vector<std::size_t>& n_values, OpKind op,
                                  const BenchConfig& config) {
    std::vector<BenchRow> rows;
    for (std::size_t n : n_values) {
        if (!is_power_of_two(n)) throw ParameterError("n = " + std::to_string(n) + " is not a power of two");
        BenchConfig c = config;
        const auto& p = config.params;
        c.params = make_params(n, p.l_max, p.k, p.dnum, p.bit_size, p.scale_bits);
        c.batch_sizes = {config.batch_sizes.empty() ? std::size_t{1} : config.batch_sizes.front()};
        auto r = run_bench(op, c);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    return rows;
}

DotProductReport run_dotproduct(const CkksParams& params, std::size_t length, NttBackend backend,
                                u64 seed, bool zero_vectors) {
    if (length == 0 || length > params.slots()) {
        throw ParameterError("vector length must be in [1, " + std::to_string(params.slots()) + "]");
    }
    if (params.l_max < 1) throw LevelError("the chain has no level left for the multiplication");
    std::size_t steps = 0;
    while ((std::size_t{1} << steps) < length) ++steps;
    std::vector<std::size_t> rotations;
    for (std::size_t s = 0; s < steps; ++s) rotations.push_back(std::size_t{1} << s);

    CkksContext ctx(params, backend);
    const KeySet keys = ctx.keygen(seed, rotations);
    Rng rng(seed + 1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Complex> x(length), y(length);
    DotProductReport report;
    report.length = length;
    for (std::size_t i = 0; i < length; ++i) {
        x[i] = zero_vectors ? 0.0 : u(rng);
        y[i] = zero_vectors ? 0.0 : u(rng);
        report.expected += x[i].real() * y[i].real();
    }

    const auto start = Clock::now();
    auto cx = ctx.encrypt(ctx.encode(x), keys.pub, rng);
    auto cy = ctx.encrypt(ctx.encode(y), keys.pub, rng);
    auto acc = ctx.rescale(ctx.hmult(cx, cy, keys.relin));
    report.op_counts = {{"encrypt", 2}, {"hmult", 1}, {"rescale", 1}, {"hrotate", 0}, {"hadd", 0}, {"decrypt", 1}};
    // Rotation moves slot j to j + r, so after the steps slot 2^steps - 1 holds
    // the sum of slots 0 .. 2^steps - 1.
    for (std::size_t r : rotations) {
        acc = ctx.hadd(acc, ctx.hrotate(acc, r, keys));
        ++report.op_counts["hrotate"];
        ++report.op_counts["hadd"];
    }
    const auto slots = ctx.decode(ctx.decrypt(acc, keys.secret));
    report.wall_ms = elapsed_ms(start);
    report.result = slots[(std::size_t{1} << steps) - 1].real();
    report.relative_error = std::abs(report.result - report.expected) / std::max(std::abs(report.expected), 1.0);
    return report;
}

nlohmann::json to_json(const DotProductReport& r) {
    return {{"length", r.length},
            {"expected", r.expected},
            {"result", r.result},
            {"relative_error", r.relative_error},
            {"wall_ms", r.wall_ms},
            {"op_counts", r.op_counts}};
}

// ---------------------------------------------------------------------------
// Self-test

namespace {

std::vector<u32> schoolbook(const std::vector<u32>& a, const std::vector<u32>& b, u32 q) {
    const std::size_t n = a.size();
    const Modulus mod(q);
    std::vector<u32> c(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const u32 p = mod.mul(a[i], b[j]);
            if (i + j < n) c[i + j] = mod.add(c[i + j], p);
            else c[i + j - n] = mod.sub(c[i + j - n], p);
        }
    }
    return c;
}

void corrupt(TwiddleFactorSet& tw, const std::vector<u32>& primes) {
    for (u32 q : primes) {
        auto& e = tw.mutable_entry(q);
        const Modulus mod(q);
        e.psi_rev[1] = mod.add(e.psi_rev[1], 1);
        e.psi_rev_shoup[1] = shoup_precompute(e.psi_rev[1], q);
        e.fwd.w1(1, 1) = mod.add(e.fwd.w1(1, 1), 1);
        e.seg_fwd = segment_twiddles(e.fwd);
    }
}

struct SuiteRunner {
    std::vector<SuiteResult> results;

    void run(const std::string& name, const std::function<std::string()>& body) {
        SuiteResult r;
        r.name = name;
        const auto start = Clock::now();
        try {
            r.detail = body();
            r.passed = true;
        } catch (const std::exception& e) {
            r.detail = e.what();
        }
        r.seconds = elapsed_ms(start) / 1000;
        results.push_back(r);
    }
};

struct SuiteFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(bool ok, const std::string& what) {
    if (!ok) throw SuiteFailure(what);
}

std::string fmt_err(double e) {
    std::ostringstream s;
    s << "2^" << std::fixed << std::setprecision(1) << (e > 0 ? std::log2(e) : -999.0);
    return s.str();
}

}  // namespace

std::vector<SuiteResult> run_selftest(const CkksParams& params, const SelftestOptions& options) {
    SuiteRunner suites;
    Rng rng(options.seed);
    auto primes = params.q_basis(params.l_max);
    for (u32 p : params.p_basis()) primes.push_back(p);
    const auto backends = options.backends;

    reset_tcu_counters();
    suites.run("ntt-oracle", [&] {
        std::size_t checked = 0;
        for (std::size_t n = 16; n <= std::min<std::size_t>(params.n, 4096); n *= 4) {
            TwiddleFactorSet tw(n, primes);
            if (options.corrupt_twiddles) corrupt(tw, primes);
            const int inputs = n <= 1024 ? 3 : 1;
            for (u32 q : primes) {
                for (int t = 0; t < inputs; ++t) {
                    auto a = random_poly(n, {q}, Domain::coefficient, rng);
                    const auto expect = ntt_oracle(a.row(0), q, make_prime_info(q, n).psi);
                    for (auto backend : backends) {
                        auto out = ntt_forward(a, tw, backend);
                        check(std::equal(expect.begin(), expect.end(), out.row(0).begin()),
                              std::string(to_string(backend)) + " differs from the oracle at n=" +
                                  std::to_string(n) + ", q=" + std::to_string(q));
                        ++checked;
                    }
                }
            }
        }
        return std::to_string(checked) + " transforms bit-exact";
    });

    suites.run("ntt-roundtrip", [&] {
        TwiddleFactorSet tw(params.n, primes);
        if (options.corrupt_twiddles) corrupt(tw, primes);
        for (auto backend : backends) {
            for (int t = 0; t < 2; ++t) {
                auto a = random_poly(params.n, primes, Domain::coefficient, rng);
                check(ntt_inverse(ntt_forward(a, tw, backend), tw, backend) == a,
                      std::string(to_string(backend)) + " roundtrip failed");
            }
        }
        return std::string("INTT(NTT(a)) = a at n=") + std::to_string(params.n);
    });

    suites.run("negacyclic-convolution", [&] {
        const std::size_t n = std::min<std::size_t>(params.n, 1024);
        const u32 q = primes.front();
        TwiddleFactorSet tw(n, {q});
        if (options.corrupt_twiddles) corrupt(tw, {q});
        for (auto backend : backends) {
            for (int t = 0; t < 2; ++t) {
                auto a = random_poly(n, {q}, Domain::coefficient, rng);
                auto b = random_poly(n, {q}, Domain::coefficient, rng);
                auto c = ntt_inverse(hada_mult(ntt_forward(a, tw, backend), ntt_forward(b, tw, backend)), tw, backend);
                const std::vector<u32> av(a.row(0).begin(), a.row(0).end()), bv(b.row(0).begin(), b.row(0).end());
                const auto expect = schoolbook(av, bv, q);
                check(std::equal(expect.begin(), expect.end(), c.row(0).begin()),
                      std::string(to_string(backend)) + " product differs from schoolbook");
            }
        }
        return "INTT(NTT(a).NTT(b)) = a*b mod (X^" + std::to_string(n) + "+1)";
    });

    suites.run("tcu-constraints", [&] {
        if (tcu_counters().gemm_calls == 0) {
            TwiddleFactorSet tw(256, {primes.front()});
            (void)ntt_forward(random_poly(256, {primes.front()}, Domain::coefficient, rng), tw,
                              NttBackend::segmented);
        }
        const auto c = tcu_counters();
        check(c.gemm_calls > 0, "no byte GEMM was executed");
        check(c.accumulator_violations == 0, std::to_string(c.accumulator_violations) + " accumulators reached 2^31");
        check(c.max_accumulator < (u64{1} << 31), "accumulator maximum is not below 2^31");
        return std::to_string(c.gemm_calls) + " byte GEMMs, max accumulator " + std::to_string(c.max_accumulator);
    });

    // Tolerances assume a 2^40 scale; smaller scales lose the difference.
    const double slack = std::ldexp(1.0, std::max(0, 40 - static_cast<int>(params.scale_bits)));
    std::optional<CkksContext> ctx;
    KeySet keys;
    suites.run("ckks-keygen", [&] {
        ctx.emplace(params, backends.front());
        keys = ctx->keygen(options.seed, {1});
        std::size_t weight = 0;
        for (auto c : keys.secret.coeffs) weight += c != 0;
        check(weight == params.n / 2, "secret key has the wrong Hamming weight");
        return std::string("h = ") + std::to_string(weight);
    });

    suites.run("ckks-roundtrip", [&] {
        check(ctx.has_value(), "no context");
        double worst = 0;
        for (int t = 0; t < 5; ++t) {
            auto v = random_slots(ctx->slots(), rng);
            auto back = ctx->decode(ctx->decrypt(ctx->encrypt(ctx->encode(v), keys.pub, rng), keys.secret));
            worst = std::max(worst, relative_error(back, v));
        }
        check(worst < 0x1p-20 * slack, "roundtrip error " + fmt_err(worst));
        return "max error " + fmt_err(worst);
    });

    suites.run("ckks-homomorphism", [&] {
        check(ctx.has_value(), "no context");
        if (params.l_max < 1) return std::string("skipped: no level to rescale");
        auto v = random_slots(ctx->slots(), rng), w = random_slots(ctx->slots(), rng);
        auto cv = ctx->encrypt(ctx->encode(v), keys.pub, rng);
        auto cw = ctx->encrypt(ctx->encode(w), keys.pub, rng);
        auto dec = [&](const Ciphertext& c) { return ctx->decode(ctx->decrypt(c, keys.secret)); };
        std::vector<Complex> sum(v.size()), prod(v.size()), shifted(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            sum[i] = v[i] + w[i];
            prod[i] = v[i] * w[i];
            shifted[(i + 1) % v.size()] = v[i];
        }
        const double e_add = relative_error(dec(ctx->hadd(cv, cw)), sum);
        const double e_mul = relative_error(dec(ctx->rescale(ctx->hmult(cv, cw, keys.relin))), prod);
        const double e_cmul = relative_error(dec(ctx->rescale(ctx->cmult(cv, ctx->encode(w)))), prod);
        const double e_rot = relative_error(dec(ctx->hrotate(cv, 1, keys)), shifted);
        check(e_add < 0x1p-19 * slack, "hadd error " + fmt_err(e_add));
        check(e_mul < 0x1p-18 * slack, "hmult error " + fmt_err(e_mul));
        check(e_cmul < 0x1p-18 * slack, "cmult error " + fmt_err(e_cmul));
        check(e_rot < 0x1p-18 * slack, "hrotate error " + fmt_err(e_rot));
        return "hadd " + fmt_err(e_add) + ", hmult " + fmt_err(e_mul) + ", cmult " + fmt_err(e_cmul) +
               ", hrotate " + fmt_err(e_rot);
    });

    suites.run("batching", [&] {
        TwiddleFactorSet tw(params.n, primes);
        const auto basis = params.q_basis(params.l_max);
        std::vector<RnsPolynomial> items;
        for (int b = 0; b < 4; ++b) items.push_back(random_poly(params.n, basis, Domain::coefficient, rng));
        for (auto backend : backends) {
            auto out = unpack(batched_apply(pack(items), BatchKernel::ntt, BatchAux{&tw, backend, nullptr, 0}));
            for (std::size_t b = 0; b < items.size(); ++b)
                check(out[b] == ntt_forward(items[b], tw, backend), "batched NTT differs from sequential");
        }
        return std::string("B=4 batched NTT bit-exact");
    });

    return suites.results;
}

}  // namespace kfhe
