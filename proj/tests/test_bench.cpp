#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kfhe/bench.hpp"
#include "kfhe/errors.hpp"

using namespace kfhe;

namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    args.insert(args.begin(), "kfhe-bench");
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

BenchConfig small_config() {
    BenchConfig c;
    c.params = make_params(1024, 2, 1, 3, 30);
    c.reps = 3;
    return c;
}

}  // namespace

TEST(BenchCsv, HeaderIsFixed) {
    const auto text = bench_csv({});
    EXPECT_EQ(text, "op,backend,n,level,batch,threads,reps,wall_ms_median,ops_per_sec\n");
}

TEST(BenchCsv, SchemaIsIdenticalAcrossRepetitionCounts) {
    auto c = small_config();
    c.batch_sizes = {1, 4};
    c.reps = 1;
    const auto one = lines(bench_csv(run_bench(OpKind::ntt, c)));
    c.reps = 5;
    const auto five = lines(bench_csv(run_bench(OpKind::ntt, c)));
    ASSERT_EQ(one.size(), 3u);
    ASSERT_EQ(five.size(), 3u);
    EXPECT_EQ(one[0], five[0]);
    for (std::size_t i = 1; i < one.size(); ++i) {
        EXPECT_EQ(fields(one[i]).size(), 9u);
        EXPECT_EQ(fields(five[i]).size(), 9u);
    }
}

TEST(BenchRows, OpsPerSecondMatchesMedian) {
    auto c = small_config();
    c.batch_sizes = {1, 2, 8};
    for (auto op : {OpKind::ntt, OpKind::intt, OpKind::hada_mult, OpKind::ele_add, OpKind::ele_sub,
                    OpKind::forbenius_map, OpKind::hadd, OpKind::cmult, OpKind::hmult, OpKind::hrotate,
                    OpKind::rescale}) {
        const auto rows = run_bench(op, c);
        ASSERT_EQ(rows.size(), 3u);
        for (const auto& r : rows) {
            SCOPED_TRACE(r.op);
            EXPECT_FALSE(r.skipped);
            EXPECT_EQ(r.op, to_string(op));
            EXPECT_EQ(r.n, 1024u);
            EXPECT_EQ(r.level, 2u);
            EXPECT_EQ(r.reps, 3u);
            EXPECT_GT(r.wall_ms_median, 0);
            EXPECT_NEAR(r.ops_per_sec, r.batch * 1000.0 / r.wall_ms_median, 1e-9 * r.ops_per_sec);
        }
    }
}

TEST(BenchRows, CsvValuesRoundTrip) {
    auto c = small_config();
    c.batch_sizes = {2};
    const auto rows = run_bench(OpKind::ntt, c);
    const auto cells = fields(lines(bench_csv(rows))[1]);
    ASSERT_EQ(cells.size(), 9u);
    EXPECT_EQ(cells[0], "ntt");
    EXPECT_EQ(cells[1], "butterfly");
    EXPECT_EQ(cells[2], "1024");
    EXPECT_EQ(cells[4], "2");
    const double ms = std::stod(cells[7]), ops = std::stod(cells[8]);
    EXPECT_NEAR(ops, 2 * 1000.0 / ms, 1e-4 * ops);
}

TEST(BenchRows, OverBudgetBatchIsSkippedNotFatal) {
    auto c = small_config();
    c.batch_sizes = {1, 1u << 20};
    c.memory_budget = working_set_bytes(c.params, OpKind::hmult) * 4;
    const auto rows = run_bench(OpKind::hmult, c);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_FALSE(rows[0].skipped);
    EXPECT_TRUE(rows[1].skipped);
    EXPECT_FALSE(rows[1].note.empty());
    const auto csv = lines(bench_csv(rows));
    EXPECT_EQ(fields(csv[2]).size(), 9u);
    EXPECT_EQ(fields(csv[2])[7], "");
    const auto doc = bench_json(rows);
    EXPECT_TRUE(doc[1]["wall_ms_median"].is_null());
}

TEST(BenchRows, ZeroRepetitionsRejected) {
    auto c = small_config();
    c.reps = 0;
    EXPECT_THROW(run_bench(OpKind::ntt, c), ParameterError);
}

TEST(SweepN, EmptyListGivesHeaderOnly) {
    EXPECT_EQ(lines(bench_csv(run_sweep_n({}, OpKind::ntt, small_config()))).size(), 1u);
}

TEST(SweepN, RegeneratesParametersPerDegree) {
    auto c = small_config();
    c.reps = 1;
    const auto rows = run_sweep_n({1024, 2048, 4096}, OpKind::ntt, c);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].n, 1024u);
    EXPECT_EQ(rows[1].n, 2048u);
    EXPECT_EQ(rows[2].n, 4096u);
}

TEST(SweepN, UnsupportedDegreeRejected) {
    EXPECT_THROW(run_sweep_n({1000}, OpKind::ntt, small_config()), ParameterError);
}

TEST(DotProduct, LengthOneIsASingleProduct) {
    const auto r = run_dotproduct(preset("default"), 1, NttBackend::butterfly, 3);
    EXPECT_LT(std::abs(r.result - r.expected), 0x1p-18);
    EXPECT_EQ(r.op_counts.at("hmult"), 1u);
    EXPECT_EQ(r.op_counts.at("rescale"), 1u);
    EXPECT_EQ(r.op_counts.at("hrotate"), 0u);
}

TEST(DotProduct, ZeroVectorsGiveZero) {
    const auto r = run_dotproduct(preset("default"), 64, NttBackend::butterfly, 4, true);
    EXPECT_EQ(r.expected, 0.0);
    EXPECT_LT(std::abs(r.result), 0x1p-18);
}

TEST(DotProduct, Length128MeetsBound) {
    const auto r = run_dotproduct(preset("default"), 128, NttBackend::butterfly, 5);
    EXPECT_LT(r.relative_error, 0x1p-15);
    EXPECT_EQ(r.op_counts.at("hrotate"), 7u);
    EXPECT_EQ(r.op_counts.at("hadd"), 7u);
}

TEST(DotProduct, NonPowerOfTwoLength) {
    const auto r = run_dotproduct(preset("default"), 100, NttBackend::gemm, 6);
    EXPECT_LT(r.relative_error, 0x1p-15);
}

TEST(DotProduct, Errors) {
    const auto p = preset("default");
    EXPECT_THROW(run_dotproduct(p, p.slots() + 1, NttBackend::butterfly, 1), ParameterError);
    EXPECT_THROW(run_dotproduct(p, 0, NttBackend::butterfly, 1), ParameterError);
    EXPECT_THROW(run_dotproduct(make_params(1024, 0, 1, 1, 30), 4, NttBackend::butterfly, 1), LevelError);
}

TEST(Selftest, AllSuitesPassOnCleanTables) {
    SelftestOptions o;
    o.seed = 9;
    const auto results = run_selftest(make_params(1024, 2, 1, 3, 30), o);
    ASSERT_FALSE(results.empty());
    for (const auto& r : results) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}

TEST(Selftest, CorruptedTwiddlesFailTheNttSuite) {
    SelftestOptions o;
    o.corrupt_twiddles = true;
    const auto results = run_selftest(make_params(1024, 2, 1, 3, 30), o);
    bool oracle_failed = false;
    for (const auto& r : results)
        if (r.name == "ntt-oracle") oracle_failed = !r.passed;
    EXPECT_TRUE(oracle_failed);
}

TEST(Cli, SelftestExitCodes) {
    std::string out;
    EXPECT_EQ(cli({"selftest", "--preset", "default", "--ntt-backend", "all"}, &out), 0);
    EXPECT_NE(out.find("8/8 suites passed"), std::string::npos);
    EXPECT_EQ(cli({"selftest", "--inject-twiddle-fault"}, &out), 1);
    EXPECT_NE(out.find("[FAIL] ntt-oracle"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(cli({}), 2);
    EXPECT_EQ(cli({"bench"}), 2);                              // --op missing
    EXPECT_EQ(cli({"bench", "--op", "fft"}), 2);               // unknown op
    EXPECT_EQ(cli({"bench", "--op", "ntt", "--ntt-backend", "gpu"}), 2);
    EXPECT_EQ(cli({"selftest", "--preset", "nope"}), 2);
    EXPECT_EQ(cli({"sweep-n", "--n-values", "3000"}), 2);
    EXPECT_EQ(cli({"workload-dotproduct", "--length", "999999"}), 2);
    EXPECT_EQ(cli({"frobnicate"}), 2);
}

TEST(Cli, HelpExitsZero) {
    std::string out;
    EXPECT_EQ(cli({"--help"}, &out), 0);
    EXPECT_NE(out.find("selftest"), std::string::npos);
}

TEST(Cli, BenchWritesCsvToStdout) {
    std::string out;
    ASSERT_EQ(cli({"bench", "--op", "ntt", "--batch-sizes", "1,2", "--reps", "1", "--threads", "1"}, &out), 0);
    const auto l = lines(out);
    ASSERT_EQ(l.size(), 3u);
    EXPECT_EQ(l[0], kBenchCsvHeader);
    EXPECT_EQ(fields(l[2])[4], "2");
    EXPECT_EQ(fields(l[2])[5], "1");
}

TEST(Cli, OutputFormatFollowsExtension) {
    const auto dir = std::filesystem::temp_directory_path();
    const auto json_path = (dir / "kfhe_bench_test.json").string();
    const auto csv_path = (dir / "kfhe_bench_test.csv").string();
    ASSERT_EQ(cli({"sweep-n", "--n-values", "1024,2048", "--reps", "1", "--out", json_path}), 0);
    ASSERT_EQ(cli({"sweep-n", "--n-values", "1024,2048", "--reps", "1", "--out", csv_path}), 0);
    std::ifstream jf(json_path), cf(csv_path);
    const auto doc = nlohmann::json::parse(jf);
    ASSERT_EQ(doc.size(), 2u);
    EXPECT_EQ(doc[1]["n"], 2048);
    std::string header;
    std::getline(cf, header);
    EXPECT_EQ(header, kBenchCsvHeader);
    std::filesystem::remove(json_path);
    std::filesystem::remove(csv_path);
}

TEST(Cli, DotProductReportIsJson) {
    std::string out;
    ASSERT_EQ(cli({"workload-dotproduct", "--length", "16"}, &out), 0);
    const auto doc = nlohmann::json::parse(out);
    EXPECT_LT(doc["relative_error"].get<double>(), 0x1p-15);
    EXPECT_EQ(doc["op_counts"]["hrotate"], 4);
}
