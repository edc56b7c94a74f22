#pragma once

// Benchmark and self-test drivers behind the kfhe-bench command line tool.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kfhe/batch.hpp"
#include "kfhe/ckks.hpp"
#include "kfhe/params.hpp"

namespace kfhe {

// CSV columns, in order.
inline constexpr const char* kBenchCsvHeader =
    "op,backend,n,level,batch,threads,reps,wall_ms_median,ops_per_sec";

struct BenchRow {
    std::string op;
    std::string backend;
    std::size_t n = 0;
    std::size_t level = 0;
    std::size_t batch = 0;
    std::size_t threads = 1;
    std::size_t reps = 0;
    double wall_ms_median = 0;  // one batched call of `batch` operations
    double ops_per_sec = 0;     // batch * 1000 / wall_ms_median
    bool skipped = false;       // skipped rows leave both timing fields empty
    std::string note;
};

std::string bench_csv(const std::vector<BenchRow>& rows);
nlohmann::json bench_json(const std::vector<BenchRow>& rows);

struct BenchConfig {
    CkksParams params;
    NttBackend backend = NttBackend::butterfly;
    std::vector<std::size_t> batch_sizes = {1};
    std::size_t reps = 5;
    std::size_t threads = 1;
    u64 seed = 1;
    // Memory a configuration may use; defaults to the machine's available memory.
    std::optional<std::size_t> memory_budget;
};

// One row per batch size: one warm-up call, then the median of `reps` timed calls.
std::vector<BenchRow> run_bench(OpKind op, const BenchConfig& config);

// One row per n; parameters are regenerated for each n with the base config's
// level count, special primes, dnum and prime width. Uses the first batch size.
std::vector<BenchRow> run_sweep_n(const std::vector<std::size_t>& n_values, OpKind op,
                                  const BenchConfig& config);

struct DotProductReport {
    std::size_t length = 0;
    double expected = 0;
    double result = 0;
    double relative_error = 0;
    double wall_ms = 0;
    std::map<std::string, std::size_t> op_counts;
};

// Encrypts two vectors, multiplies them slot-wise, sums the first `length`
// slots with log2 rotate-and-add steps and decrypts. Throws ParameterError if
// length exceeds the slot count and LevelError if the chain has no level to spend.
DotProductReport run_dotproduct(const CkksParams& params, std::size_t length, NttBackend backend,
                                u64 seed, bool zero_vectors = false);
nlohmann::json to_json(const DotProductReport& report);

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0;
};

struct SelftestOptions {
    std::vector<NttBackend> backends = {kAllBackends.begin(), kAllBackends.end()};
    u64 seed = 1;
    bool corrupt_twiddles = false;  // fault injection for the NTT suites
};

std::vector<SuiteResult> run_selftest(const CkksParams& params, const SelftestOptions& options);

// Full command line entry point. Returns 0 on success, 1 if a self-test suite
// fails and 2 on usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kfhe
