#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kfhe/bench.hpp"
#include "kfhe/errors.hpp"
#include "kfhe/parallel.hpp"

namespace kfhe {

namespace {

struct Options {
    std::string preset = "default";
    std::string backend = "butterfly";
    std::vector<std::size_t> batch_sizes = {1};
    std::vector<std::size_t> n_values;
    std::size_t threads = 1;
    std::size_t reps = 5;
    u64 seed = 1;
    std::size_t memory_budget = 0;
    std::string out;
    std::string op = "ntt";
    std::size_t length = 128;
    bool zeros = false;
    bool fault = false;
};

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// JSON when the target ends in .json, CSV otherwise; stdout when no target is given.
void emit(const std::vector<BenchRow>& rows, const std::string& target, std::ostream& out,
          std::ostream& err) {
    for (const auto& r : rows)
        if (r.skipped) err << "skipped " << r.op << " at batch " << r.batch << ": " << r.note << '\n';
    if (target.empty()) {
        out << bench_csv(rows);
        return;
    }
    std::ofstream file(target);
    if (!file) throw ParameterError("cannot open " + target + " for writing");
    if (ends_with(target, ".json")) file << bench_json(rows).dump(2) << '\n';
    else file << bench_csv(rows);
    out << "wrote " << rows.size() << " rows to " << target << '\n';
}

void emit_json(const nlohmann::json& doc, const std::string& target, std::ostream& out) {
    if (target.empty()) {
        out << doc.dump(2) << '\n';
        return;
    }
    std::ofstream file(target);
    if (!file) throw ParameterError("cannot open " + target + " for writing");
    file << doc.dump(2) << '\n';
    out << "wrote " << target << '\n';
}

BenchConfig make_config(const Options& o) {
    BenchConfig c;
    c.params = load_params(o.preset);
    c.backend = parse_backend(o.backend);
    c.batch_sizes = o.batch_sizes;
    c.reps = o.reps;
    c.threads = o.threads;
    c.seed = o.seed;
    if (o.memory_budget > 0) c.memory_budget = o.memory_budget;
    return c;
}

int selftest(const Options& o, std::ostream& out) {
    const CkksParams params = load_params(o.preset);
    SelftestOptions so;
    so.seed = o.seed;
    so.corrupt_twiddles = o.fault;
    if (o.backend != "all") so.backends = {parse_backend(o.backend)};
    set_default_threads(std::max<std::size_t>(1, o.threads));

    const auto results = run_selftest(params, so);
    std::size_t failed = 0;
    for (const auto& r : results) {
        failed += !r.passed;
        out << (r.passed ? "[PASS] " : "[FAIL] ") << std::left << std::setw(24) << r.name << std::right
            << std::fixed << std::setprecision(2) << std::setw(7) << r.seconds << " s  " << r.detail << '\n';
    }
    out << results.size() - failed << '/' << results.size() << " suites passed\n";
    return failed ? 1 : 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"NTT and CKKS kernel benchmarks and self-tests", "kfhe-bench"};
    app.require_subcommand(1);

    auto common = [&](CLI::App* sub) {
        sub->add_option("--preset", o.preset, "preset name or parameter JSON file")->capture_default_str();
        sub->add_option("--ntt-backend", o.backend, "butterfly, gemm or segmented")->capture_default_str();
        sub->add_option("--threads", o.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
        sub->add_option("--out", o.out, "output file (.json for JSON, CSV otherwise)");
    };
    auto timing = [&](CLI::App* sub) {
        sub->add_option("--batch-sizes", o.batch_sizes, "comma-separated batch sizes")
            ->delimiter(',')
            ->check(CLI::PositiveNumber);
        sub->add_option("--reps", o.reps, "timed repetitions")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--memory-budget", o.memory_budget, "bytes available to one configuration");
    };

    auto* st = app.add_subcommand("selftest", "run the correctness suites");
    common(st);
    st->add_flag("--inject-twiddle-fault", o.fault)->group("");  // hidden

    auto* bench = app.add_subcommand("bench", "time one operation over several batch sizes");
    common(bench);
    timing(bench);
    bench->add_option("--op", o.op, "operation to time")->required();

    auto* sweep = app.add_subcommand("sweep-n", "time one operation over several ring degrees");
    common(sweep);
    timing(sweep);
    sweep->add_option("--op", o.op, "operation to time")->capture_default_str();
    sweep->add_option("--n-values", o.n_values, "comma-separated ring degrees")->delimiter(',');

    auto* dot = app.add_subcommand("workload-dotproduct", "encrypted inner product of two random vectors");
    common(dot);
    dot->add_option("--length", o.length, "vector length")->capture_default_str();
    dot->add_flag("--zeros", o.zeros, "use all-zero vectors");

    auto* show = app.add_subcommand("params", "print the resolved parameter set as JSON");
    common(show);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*st) return selftest(o, out);
        if (*bench) {
            emit(run_bench(parse_op(o.op), make_config(o)), o.out, out, err);
        } else if (*sweep) {
            emit(run_sweep_n(o.n_values, parse_op(o.op), make_config(o)), o.out, out, err);
        } else if (*dot) {
            const auto c = make_config(o);
            set_default_threads(c.threads);
            emit_json(to_json(run_dotproduct(c.params, o.length, c.backend, o.seed, o.zeros)), o.out, out);
        } else if (*show) {
            emit_json(to_json(load_params(o.preset)), o.out, out);
        }
        return 0;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const LevelError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace kfhe
