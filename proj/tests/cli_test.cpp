#include "kegcn/cli.hpp"
#include "kegcn/io.hpp"
#include "support/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace kegcn {
namespace {

namespace fs = std::filesystem;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli_main(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("kegcn_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path(name)) << text;
        return path(name);
    }

    fs::path dir_;
};

TEST_F(CliTest, NoArgumentsPrintsUsage) {
    const Outcome r = run({});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST_F(CliTest, UnknownSubcommand) {
    const Outcome r = run({"frobnicate"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST_F(CliTest, VerifyReductions) {
    const Outcome r = run({"verify-reductions", "--seed", "7"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    for (const char* mode : {"compgcn-sub", "compgcn-mult", "compgcn-corr", "rgcn", "wgcn"})
        EXPECT_NE(r.out.find(mode), std::string::npos) << mode;
}

TEST_F(CliTest, GradcheckOneScorer) {
    const Outcome r = run({"gradcheck", "--scorer", "rotate"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("worst"), std::string::npos);
    EXPECT_EQ(run({"gradcheck", "--scorer", "transx"}).code, 1);
}

TEST_F(CliTest, ConfigErrorNamesKeyAndExitsOne) {
    const std::string cfg = write("bad.conf", "dim = abc\n");
    const Outcome r = run({"train-align", "--config", cfg});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("'dim'"), std::string::npos) << r.err;
}

TEST_F(CliTest, MissingDatasetExitsOne) {
    const Outcome r = run({"train-align", "--triples", path("none.tsv"), "--triples2", path("none.tsv"), "--train",
                       path("none.tsv")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("cannot open"), std::string::npos) << r.err;
}

TEST_F(CliTest, MalformedDatasetNamesLine) {
    const std::string kg = write("kg.tsv", "0\t0\t1\n1,0,2\n");
    const Outcome r = run({"train-classify", "--triples", kg, "--train", kg});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(CliTest, TrainAlignCheckpointAndEval) {
    const auto task = testing::isomorphic_task(40, 3, 160, 0.3, 0.1, 5);
    const std::string cfg = write("align.conf", testing::write_files(task, path("data")) +
                                                    "dim = 16\nlayers = 2\nepochs = 20\nseed = 3\n");
    const Outcome a = run({"train-align", "-c", cfg, "--checkpoint", path("m.kegc"), "--report", path("a.tsv")});
    ASSERT_EQ(a.code, 0) << a.err;
    const Report ra = parse_report(read_file(path("a.tsv")));
    std::vector<std::string> keys;
    for (const auto& [k, v] : ra) keys.push_back(k);
    for (const char* k : {"mrr", "hits1", "hits10", "relation_mrr", "seed"})
        EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
    EXPECT_EQ(std::find(keys.begin(), keys.end(), "runtime_seconds"), keys.end());

    const Outcome e = run({"eval", "-c", cfg, "--checkpoint", path("m.kegc"), "--report", path("e.tsv")});
    ASSERT_EQ(e.code, 0) << e.err;
    const Report re = parse_report(read_file(path("e.tsv")));
    EXPECT_EQ(re[0], ra[0]); // mrr
    EXPECT_EQ(re[1], ra[1]);

    // Same seed and config: identical report bytes.
    ASSERT_EQ(run({"train-align", "-c", cfg, "--report", path("b.tsv")}).code, 0);
    EXPECT_EQ(read_file(path("a.tsv")), read_file(path("b.tsv")));
}

TEST_F(CliTest, TrainClassifyMultiRunAndMetricsReport) {
    const auto task = testing::block_task(60, 3, 300, 0.8, 0.9, 0.2, 0.1, 2);
    const std::string cfg = write("cls.conf", testing::write_files(task, path("data")) +
                                                  "task = classify\nlayers = 2\nepochs = 15\nruns = 2\n");
    const Outcome r = run({"train-classify", "-c", cfg, "--report", path("r.tsv"), "--timing"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("+/-"), std::string::npos);
    const Report rep = parse_report(read_file(path("r.tsv")));
    std::vector<std::string> keys;
    for (const auto& [k, v] : rep) keys.push_back(k);
    for (const char* k : {"accuracy", "accuracy_std", "p1", "p5", "ndcg5", "runtime_seconds"})
        EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;

    const Outcome m = run({"metrics-report", path("r.tsv"), path("r.tsv"), "-o", path("sum.tsv")});
    ASSERT_EQ(m.code, 0) << m.err;
    const Report sum = parse_report(read_file(path("sum.tsv")));
    EXPECT_EQ(sum[0].first, "accuracy");
    EXPECT_EQ(sum[1].first, "accuracy_std");
    EXPECT_EQ(std::stod(sum[1].second), 0.0);
}

TEST_F(CliTest, TaskMismatchIsConfigError) {
    const std::string cfg = write("c.conf", "task = classify\n");
    const Outcome r = run({"train-align", "-c", cfg});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("'task'"), std::string::npos) << r.err;
}

TEST_F(CliTest, EvalRejectsCorruptCheckpoint) {
    const std::string cp = write("bad.kegc", "NOPE");
    const Outcome r = run({"eval", "--checkpoint", cp});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("magic"), std::string::npos) << r.err;
}

} // namespace
} // namespace kegcn
