#include "kegcn/errors.hpp"
#include "kegcn/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <sstream>

namespace kegcn {
namespace {

namespace fs = std::filesystem;

TripleFile triples(const std::string& text) {
    std::istringstream in(text);
    return parse_triples(in);
}

std::size_t error_line(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ValidationError& e) {
        return e.line();
    }
    return 0;
}

TEST(Triples, IntegerTokens) {
    const TripleFile f = triples("0\t0\t1\n");
    ASSERT_EQ(f.triples.size(), 1u);
    EXPECT_EQ(f.triples[0], (Triple{0, 0, 1}));
    EXPECT_EQ(f.entities.size(), 2u);
    EXPECT_EQ(f.relations.size(), 1u);
}

TEST(Triples, StringTokensInternInOrder) {
    const TripleFile f = triples("a\tr\tb\n# comment\n\nb\ts\tc\r\n");
    ASSERT_EQ(f.triples.size(), 2u);
    EXPECT_EQ(f.triples[0], (Triple{0, 0, 1}));
    EXPECT_EQ(f.triples[1], (Triple{1, 1, 2}));
    EXPECT_EQ(f.entities.find("a"), 0u);
    EXPECT_EQ(f.entities.find("b"), 1u);
    EXPECT_EQ(f.relations.find("r"), 0u);
    EXPECT_EQ(f.entities.name(2), "c");
}

TEST(Triples, MalformedLinesNameTheLine) {
    EXPECT_EQ(error_line([] { triples("0,0,1\n"); }), 1u);
    EXPECT_EQ(error_line([] { triples("0\t0\t1\n\n0\t1\n"); }), 3u);
    EXPECT_EQ(error_line([] { triples("0\t0\t1\n1\t\t2\n"); }), 2u);
    EXPECT_EQ(error_line([] { triples("0\t0\t1\na\tr\tb\n"); }), 2u);
    EXPECT_EQ(error_line([] { triples("0\t0\t1\n0\tr\t1\n"); }), 2u);
    EXPECT_EQ(error_line([] { triples("99999999999\t0\t1\n"); }), 1u);
}

TEST(Alignments, Examples) {
    const TripleFile a = triples("0\t0\t5\n"), b = triples("0\t0\t5\n");
    std::istringstream one("0\t5\n");
    const auto pairs = parse_alignments(one, a.entities, b.entities);
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_EQ(pairs[0], (EntityPair{0, 5}));
    std::istringstream empty("");
    EXPECT_TRUE(parse_alignments(empty, a.entities, b.entities).empty());
    std::istringstream unknown("0\t5\n9\t0\n");
    EXPECT_EQ(error_line([&] { parse_alignments(unknown, a.entities, b.entities); }), 2u);
}

TEST(Labels, MultiLabelAndSharedClassIds) {
    const TripleFile f = triples("e\tr\tf\n");
    Vocabulary classes;
    std::istringstream train("e\tc1,c2\n");
    const LabelFile a = parse_labels(train, f.entities, classes);
    ASSERT_EQ(a.entries.size(), 1u);
    EXPECT_TRUE(a.multi_label);
    EXPECT_EQ(a.entries[0].labels, (std::vector<std::uint32_t>{0, 1}));
    std::istringstream test("f\tc2\n");
    const LabelFile b = parse_labels(test, f.entities, classes);
    EXPECT_FALSE(b.multi_label);
    EXPECT_EQ(b.entries[0].labels, (std::vector<std::uint32_t>{1}));
    std::istringstream bad("g\tc1\n");
    EXPECT_EQ(error_line([&] { parse_labels(bad, f.entities, classes); }), 1u);
    std::istringstream empty_label("e\tc1,\n");
    EXPECT_EQ(error_line([&] { parse_labels(empty_label, f.entities, classes); }), 1u);
}

std::string config_error_key(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

TEST(Config, Defaults) {
    const RunConfig align = resolve_config(parse_config_text("task = align\n"));
    EXPECT_EQ(align.train.model.dim, 200u);
    EXPECT_EQ(align.train.model.layers, 4u);
    EXPECT_DOUBLE_EQ(align.train.model.alpha, 0.3);
    EXPECT_DOUBLE_EQ(align.train.lr, 0.01);
    EXPECT_DOUBLE_EQ(align.train.gamma, 3.0);
    EXPECT_EQ(align.train.negatives, 5u);
    EXPECT_EQ(resolve_config({}).train.model.dim, 200u);
    EXPECT_EQ(resolve_config(parse_config_text("task = classify")).train.model.dim, 32u);
}

TEST(Config, ParsesValues) {
    const RunConfig c = resolve_config(parse_config_text(
        "# comment\ntask = classify\nscorer = quate\nmode=kegcn\ndim = 64\nalpha = 0.25 # trailing\n"
        "lr = 1e-3\nseed = 9\ntriples = data/kg.tsv\n"));
    EXPECT_EQ(c.task, TaskKind::classify);
    EXPECT_EQ(c.train.model.scorer, ScorerKind::quate);
    EXPECT_EQ(c.train.model.dim, 64u);
    EXPECT_DOUBLE_EQ(c.train.model.alpha, 0.25);
    EXPECT_DOUBLE_EQ(c.train.lr, 1e-3);
    EXPECT_EQ(c.train.seed, 9u);
    EXPECT_EQ(c.paths.at("triples"), "data/kg.tsv");
}

TEST(Config, ErrorsNameTheKey) {
    EXPECT_EQ(config_error_key([] { resolve_config(parse_config_text("dim = abc")); }), "dim");
    EXPECT_EQ(config_error_key([] { resolve_config(parse_config_text("alpha = 0.3x")); }), "alpha");
    EXPECT_EQ(config_error_key([] { parse_config_text("depth = 3"); }), "depth");
    EXPECT_EQ(config_error_key([] { parse_config_text("dim = 3\ndim = 4"); }), "dim");
    EXPECT_EQ(config_error_key([] { resolve_config(parse_config_text("scorer = transx")); }), "scorer");
    EXPECT_EQ(config_error_key([] { resolve_config(parse_config_text("task = rank")); }), "task");
    EXPECT_EQ(config_error_key([] { resolve_config(parse_config_text("layers = -1")); }), "layers");
    EXPECT_EQ(config_error_key([] { resolve_config(parse_config_text("scorer = quate\ndim = 30")); }), "dim");
    EXPECT_EQ(config_error_key([] { parse_config_text("just words"); }), "line 1");
}

Checkpoint sample_checkpoint() {
    Checkpoint cp;
    cp.config = {{"task", "align"}, {"dim", "2"}};
    cp.tensors = {{"layer0.weight", Tensor(2, 2, {1.5, -0.0, 1e-300, 3})}, {"input0.entities", Tensor(1, 2, {7, 8})}};
    cp.best_metric = 0.875;
    return cp;
}

TEST(Checkpoint, RoundTripIsBitwiseStable) {
    const Checkpoint cp = sample_checkpoint();
    const std::string bytes = serialize_checkpoint(cp);
    EXPECT_EQ(bytes.substr(0, 4), "KEGC");
    const Checkpoint back = deserialize_checkpoint(bytes);
    EXPECT_EQ(back, cp);
    EXPECT_TRUE(bitwise_equal(back.tensors[0].second, cp.tensors[0].second));
    EXPECT_EQ(serialize_checkpoint(back), bytes);
}

TEST(Checkpoint, FileRoundTrip) {
    const fs::path dir = fs::temp_directory_path() / "kegcn_io_test";
    fs::create_directories(dir);
    const std::string path = (dir / "model.kegc").string();
    save_checkpoint(path, sample_checkpoint());
    const std::string first = read_file(path);
    save_checkpoint(path, load_checkpoint(path));
    EXPECT_EQ(read_file(path), first);
    for (const auto& e : fs::directory_iterator(dir))
        EXPECT_EQ(e.path().filename().string().find(".tmp"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Checkpoint, RejectsCorruption) {
    std::string bytes = serialize_checkpoint(sample_checkpoint());
    std::string bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(deserialize_checkpoint(bad), FormatError);
    bad = bytes;
    bad[4] = 2;
    EXPECT_THROW(deserialize_checkpoint(bad), FormatError);
    for (std::size_t cut : {std::size_t{3}, std::size_t{6}, bytes.size() / 2, bytes.size() - 1})
        EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, cut)), FormatError) << cut;
}

TEST(Checkpoint, ModelRoundTrip) {
    RunConfig cfg = resolve_config(parse_config_text("scorer = rotate\ndim = 8\nlayers = 2\nmode = kegcn"));
    RandomSource source(3);
    ModelParams m;
    m.config = cfg.train.model;
    m.layers = init_params(m.config, 3, source);
    m.inputs = {init_state(m.config, 5, 3, source), init_state(m.config, 6, 3, source)};
    const Checkpoint cp = make_checkpoint(cfg, m, 0.5);
    ModelParams back = restore_model(deserialize_checkpoint(serialize_checkpoint(cp)), m.config);
    const auto a = m.tensors(), b = back.tensors();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(bitwise_equal(*a[i], *b[i]));

    ModelConfig other = m.config;
    other.layers = 3;
    EXPECT_THROW(restore_model(cp, other), FormatError);
}

TEST(Report, FormatAndParse) {
    const Report r = {{"mrr", "0.5"}, {"seed", "3"}};
    EXPECT_EQ(format_report(r), "mrr\t0.5\nseed\t3\n");
    EXPECT_EQ(parse_report(format_report(r)), r);
    EXPECT_THROW(parse_report("mrr 0.5\n"), ValidationError);
}

} // namespace
} // namespace kegcn
