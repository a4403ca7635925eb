#include "kegcn/cli.hpp"

#include "kegcn/errors.hpp"
#include "kegcn/gradcheck.hpp"
#include "kegcn/metrics.hpp"
#include "kegcn/propagation.hpp"
#include "kegcn/tasks.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

namespace kegcn {

namespace {

std::string require_path(const RunConfig& cfg, const std::string& key) {
    auto it = cfg.paths.find(key);
    if (it == cfg.paths.end() || it->second.empty()) throw ConfigError(key, "path is required for this task");
    return it->second;
}

std::optional<std::string> optional_path(const RunConfig& cfg, const std::string& key) {
    auto it = cfg.paths.find(key);
    if (it == cfg.paths.end() || it->second.empty()) return std::nullopt;
    return it->second;
}

// Rethrows a ValidationError with the file name in front.
template <class F>
auto in_file(const std::string& path, F&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

KnowledgeGraph build_graph(const TripleFile& f, const std::string& path) {
    return in_file(path, [&] {
        return KnowledgeGraph::build(f.triples, f.entities.size(), f.relations.size());
    });
}

} // namespace

DatasetBundle load_dataset(const RunConfig& cfg) {
    DatasetBundle d;
    const std::string t1 = require_path(cfg, "triples");
    d.files.push_back(in_file(t1, [&] { return load_triples(t1); }));
    if (cfg.task == TaskKind::align) {
        const std::string t2 = require_path(cfg, "triples2");
        d.files.push_back(in_file(t2, [&] { return load_triples(t2); }));
        const std::string train = require_path(cfg, "train");
        const Vocabulary& l = d.files[0].entities;
        const Vocabulary& r = d.files[1].entities;
        d.seeds.train = in_file(train, [&] { return load_alignments(train, l, r); });
        if (auto p = optional_path(cfg, "valid")) d.seeds.valid = in_file(*p, [&] { return load_alignments(*p, l, r); });
        if (auto p = optional_path(cfg, "test")) d.seeds.test = in_file(*p, [&] { return load_alignments(*p, l, r); });
        if (auto p = optional_path(cfg, "relation_pairs"))
            d.relation_pairs = in_file(*p, [&] {
                return load_relation_pairs(*p, d.files[0].relations, d.files[1].relations);
            });
        d.graphs.push_back(build_graph(d.files[0], t1));
        d.graphs.push_back(build_graph(d.files[1], t2));
    } else {
        const Vocabulary& ents = d.files[0].entities;
        const std::string train = require_path(cfg, "train");
        LabelFile tr = in_file(train, [&] { return load_labels(train, ents, d.classes); });
        LabelFile va, te;
        if (auto p = optional_path(cfg, "valid")) va = in_file(*p, [&] { return load_labels(*p, ents, d.classes); });
        if (auto p = optional_path(cfg, "test")) te = in_file(*p, [&] { return load_labels(*p, ents, d.classes); });
        d.labels.train = std::move(tr.entries);
        d.labels.valid = std::move(va.entries);
        d.labels.test = std::move(te.entries);
        d.labels.multi_label = tr.multi_label || va.multi_label || te.multi_label;
        d.labels.num_classes = d.classes.size();
        d.graphs.push_back(build_graph(d.files[0], t1));
    }
    return d;
}

namespace {

using Metrics = std::vector<std::pair<std::string, double>>;

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

std::string fmt_exact(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

struct RunResult {
    Metrics metrics;
    TrainResult train;
};

Metrics ranking_entries(const std::string& prefix, const RankingMetrics& m) {
    return {{prefix + "mrr", m.mrr}, {prefix + "hits1", m.hits1}, {prefix + "hits10", m.hits10}};
}

RunResult run_once(const RunConfig& cfg, const DatasetBundle& d, std::uint64_t seed, bool verbose,
                   std::ostream& log) {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    EpochCallback cb;
    if (verbose)
        cb = [&](std::size_t epoch, double loss, double metric) {
            if (epoch % 10 == 0) log << "epoch " << epoch << "  loss " << fmt(loss) << "  valid " << fmt(metric) << "\n";
        };
    RunResult r;
    if (cfg.task == TaskKind::align) {
        r.train = train_alignment(d.graphs[0], d.graphs[1], d.seeds, tc, cb);
        const ModelParams& p = r.train.params;
        if (!d.seeds.test.empty()) {
            const EmbeddingState s1 = infer(d.graphs[0], p.inputs[0], p.layers, p.config);
            const EmbeddingState s2 = infer(d.graphs[1], p.inputs[1], p.layers, p.config);
            r.metrics = ranking_entries("", evaluate_alignment(s1.entities, s2.entities, d.seeds.test));
        }
        if (!d.relation_pairs.empty() && has_relation_table(p.config.mode)) {
            const Metrics rel = ranking_entries("relation_", zero_shot_relation_alignment(p, d.graphs[0], d.graphs[1],
                                                                                          d.relation_pairs));
            r.metrics.insert(r.metrics.end(), rel.begin(), rel.end());
        }
    } else {
        r.train = train_classification(d.graphs[0], d.labels, tc, cb);
        if (!d.labels.test.empty()) {
            const ModelParams& p = r.train.params;
            const EmbeddingState s = infer(d.graphs[0], p.inputs[0], p.layers, p.config);
            const ClassificationMetrics m = evaluate_classification(s.entities, d.labels.test);
            r.metrics = {{"accuracy", m.accuracy}, {"p1", m.p1}, {"p5", m.p5}, {"ndcg5", m.ndcg5}};
        }
    }
    r.metrics.emplace_back("best_valid", r.train.best_metric);
    r.metrics.emplace_back("best_epoch", static_cast<double>(r.train.best_epoch));
    r.metrics.emplace_back("epochs_run", static_cast<double>(r.train.epochs_run));
    return r;
}

void print_table(std::ostream& out, const std::vector<std::string>& keys,
                 const std::map<std::string, MeanStd>& stats, std::size_t runs) {
    for (const std::string& k : keys) {
        const MeanStd& s = stats.at(k);
        char line[128];
        if (runs > 1) std::snprintf(line, sizeof line, "%-16s %10.4f +/- %.4f\n", k.c_str(), s.mean, s.std);
        else std::snprintf(line, sizeof line, "%-16s %10.4f\n", k.c_str(), s.mean);
        out << line;
    }
}

// Mean and standard deviation per key over runs; keys keep first-run order.
Report summarize(const std::vector<Metrics>& runs, std::vector<std::string>& keys,
                 std::map<std::string, MeanStd>& stats) {
    std::map<std::string, std::vector<double>> values;
    for (const Metrics& m : runs)
        for (const auto& [k, v] : m) {
            if (!values.count(k)) keys.push_back(k);
            values[k].push_back(v);
        }
    Report report;
    for (const std::string& k : keys) {
        stats[k] = mean_std(values[k]);
        report.emplace_back(k, fmt_exact(stats[k].mean));
        if (runs.size() > 1) report.emplace_back(k + "_std", fmt_exact(stats[k].std));
    }
    return report;
}

int train_command(const std::map<std::string, std::string>& values, TaskKind expected, bool verbose,
                  bool timing, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    RunConfig cfg = resolve_config(values);
    if (cfg.task != expected) {
        if (values.count("task")) throw ConfigError("task", "does not match the subcommand");
        cfg.task = expected;
        if (!values.count("dim")) cfg.train.model.dim = expected == TaskKind::align ? 200 : 32;
        cfg.train.model.validate();
    }
    const DatasetBundle d = load_dataset(cfg);
    std::vector<Metrics> runs;
    for (std::size_t i = 0; i < cfg.runs; ++i) {
        const std::uint64_t seed = cfg.train.seed + i;
        if (cfg.runs > 1) out << "run " << (i + 1) << "/" << cfg.runs << " (seed " << seed << ")\n";
        RunResult r = run_once(cfg, d, seed, verbose, err);
        runs.push_back(r.metrics);
        if (auto p = optional_path(cfg, "checkpoint")) {
            const std::string path = cfg.runs > 1 ? *p + ".seed" + std::to_string(seed) : *p;
            RunConfig echo = cfg;
            echo.train.seed = seed;
            echo.runs = 1;
            save_checkpoint(path, make_checkpoint(echo, r.train.params, r.train.best_metric));
        }
    }
    std::vector<std::string> keys;
    std::map<std::string, MeanStd> stats;
    Report report = summarize(runs, keys, stats);
    print_table(out, keys, stats, cfg.runs);
    report.emplace_back("seed", std::to_string(cfg.train.seed));
    report.emplace_back("runs", std::to_string(cfg.runs));
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (timing) {
        report.emplace_back("runtime_seconds", fmt(seconds));
        out << "runtime_seconds  " << fmt(seconds) << "\n";
    }
    if (auto p = optional_path(cfg, "report")) write_file_atomic(*p, format_report(report));
    return 0;
}

int eval_command(const std::string& checkpoint_path, const std::map<std::string, std::string>& overrides,
                 std::ostream& out) {
    const Checkpoint cp = load_checkpoint(checkpoint_path);
    std::map<std::string, std::string> values;
    std::size_t output_width = 0;
    for (const auto& [k, v] : cp.config) {
        if (k == "output_width") output_width = std::stoul(v);
        else if (is_config_key(k)) values[k] = v;
    }
    for (const auto& [k, v] : overrides) values[k] = v;
    const RunConfig cfg = resolve_config(values);
    ModelConfig model = cfg.train.model;
    model.output_width = output_width;
    const ModelParams params = restore_model(cp, model);
    const DatasetBundle d = load_dataset(cfg);
    if (params.inputs.size() != d.graphs.size())
        throw ValidationError("checkpoint was trained on a different number of graphs");
    for (std::size_t g = 0; g < d.graphs.size(); ++g)
        if (params.inputs[g].entities.rows() != d.graphs[g].num_entities())
            throw ValidationError("checkpoint entity count does not match graph " + std::to_string(g + 1));

    Metrics m;
    if (cfg.task == TaskKind::align) {
        if (d.seeds.test.empty()) throw ConfigError("test", "evaluation needs a non-empty test split");
        const EmbeddingState s1 = infer(d.graphs[0], params.inputs[0], params.layers, model);
        const EmbeddingState s2 = infer(d.graphs[1], params.inputs[1], params.layers, model);
        m = ranking_entries("", evaluate_alignment(s1.entities, s2.entities, d.seeds.test));
        if (!d.relation_pairs.empty() && has_relation_table(model.mode)) {
            const Metrics rel = ranking_entries("relation_", zero_shot_relation_alignment(params, d.graphs[0],
                                                                                          d.graphs[1], d.relation_pairs));
            m.insert(m.end(), rel.begin(), rel.end());
        }
    } else {
        if (d.labels.test.empty()) throw ConfigError("test", "evaluation needs a non-empty test split");
        if (model.output_width != d.labels.num_classes)
            throw ValidationError("checkpoint class count does not match the label files");
        const EmbeddingState s = infer(d.graphs[0], params.inputs[0], params.layers, model);
        const ClassificationMetrics c = evaluate_classification(s.entities, d.labels.test);
        m = {{"accuracy", c.accuracy}, {"p1", c.p1}, {"p5", c.p5}, {"ndcg5", c.ndcg5}};
    }
    std::vector<std::string> keys;
    std::map<std::string, MeanStd> stats;
    Report report = summarize({m}, keys, stats);
    print_table(out, keys, stats, 1);
    report.emplace_back("seed", std::to_string(cfg.train.seed));
    if (auto p = optional_path(cfg, "report")) write_file_atomic(*p, format_report(report));
    return 0;
}

int verify_command(std::uint64_t seed, std::size_t seeds, std::size_t entities, std::size_t relations,
                   std::size_t triples, std::size_t layers, std::ostream& out) {
    constexpr double kTolerance = 1e-9;
    bool ok = true;
    for (Mode mode : {Mode::compgcn_sub, Mode::compgcn_mult, Mode::compgcn_corr, Mode::rgcn, Mode::wgcn}) {
        double worst = 0.0;
        for (std::size_t i = 0; i < seeds; ++i) {
            RandomSource source(seed + i);
            const KnowledgeGraph g = random_graph(entities, relations, triples, source);
            worst = std::max(worst, verify_reduction(mode, g, seed + i, layers));
        }
        const bool pass = worst <= kTolerance;
        ok = ok && pass;
        char line[128];
        std::snprintf(line, sizeof line, "%-14s max |diff| %.3e  %s\n", std::string(to_string(mode)).c_str(), worst,
                      pass ? "ok" : "FAIL");
        out << line;
    }
    return ok ? 0 : 1;
}

int gradcheck_command(const std::optional<std::string>& scorer, std::uint64_t seed, std::size_t points,
                      std::ostream& out) {
    constexpr double kTolerance = 1e-4;
    std::vector<ScorerKind> kinds;
    if (scorer) kinds.push_back(parse_scorer(*scorer));
    else kinds = {ScorerKind::transe, ScorerKind::distmult, ScorerKind::transh,
                  ScorerKind::transd, ScorerKind::rotate,   ScorerKind::quate};
    double worst = 0.0;
    for (ScorerKind k : kinds) {
        const ScorerCheck c = check_scorer_gradients(k, points, seed);
        char line[160];
        std::snprintf(line, sizeof line, "%-9s scorer        head %.3e  relation %.3e  tail %.3e\n",
                      std::string(to_string(k)).c_str(), c.head, c.relation, c.tail);
        out << line;
        worst = std::max(worst, c.worst());
        for (Objective o : {Objective::alignment, Objective::multi_class, Objective::multi_label}) {
            const EndToEndCheck e = check_end_to_end(k, o, seed);
            std::snprintf(line, sizeof line, "%-9s %-13s max error %.3e\n", std::string(to_string(k)).c_str(),
                          std::string(to_string(o)).c_str(), e.report.max_error);
            out << line;
            worst = std::max(worst, e.report.max_error);
        }
    }
    out << "worst " << std::scientific << worst << std::defaultfloat << (worst <= kTolerance ? "  ok" : "  FAIL")
        << "\n";
    return worst <= kTolerance ? 0 : 1;
}

int metrics_report_command(const std::vector<std::string>& files, const std::optional<std::string>& out_path,
                           std::ostream& out) {
    std::vector<Metrics> runs;
    for (const std::string& f : files) {
        const Report r = in_file(f, [&] { return parse_report(read_file(f)); });
        Metrics m;
        for (const auto& [k, v] : r) {
            if (k.size() > 4 && k.compare(k.size() - 4, 4, "_std") == 0) continue;
            try {
                std::size_t used = 0;
                const double x = std::stod(v, &used);
                if (used == v.size()) m.emplace_back(k, x);
            } catch (const std::exception&) {
                // non-numeric entries are not aggregated
            }
        }
        runs.push_back(std::move(m));
    }
    std::vector<std::string> keys;
    std::map<std::string, MeanStd> stats;
    Report report = summarize(runs, keys, stats);
    print_table(out, keys, stats, runs.size());
    report.emplace_back("runs", std::to_string(runs.size()));
    if (out_path) write_file_atomic(*out_path, format_report(report));
    return 0;
}

// Adds one --<key> option per config key, collected into `values` when given.
void add_config_options(CLI::App* cmd, std::map<std::string, std::string>& values, std::string& config_path) {
    cmd->add_option("-c,--config", config_path, "configuration file (key = value lines)");
    for (const std::string& key : config_keys())
        cmd->add_option_function<std::string>("--" + key, [&values, key](const std::string& v) { values[key] = v; },
                                              "override '" + key + "'");
}

std::map<std::string, std::string> merged(const std::string& config_path,
                                          const std::map<std::string, std::string>& flags) {
    std::map<std::string, std::string> values;
    if (!config_path.empty()) values = read_config_file(config_path);
    for (const auto& [k, v] : flags) values[k] = v;
    return values;
}

} // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("Knowledge-embedding graph convolution: training and checks", "kegcn");
    app.require_subcommand(1);

    std::map<std::string, std::string> flags;
    std::string config_path;
    bool verbose = false, timing = false;

    CLI::App* align = app.add_subcommand("train-align", "train a two-graph entity alignment model");
    CLI::App* classify = app.add_subcommand("train-classify", "train an entity classification model");
    for (CLI::App* cmd : {align, classify}) {
        add_config_options(cmd, flags, config_path);
        cmd->add_flag("-v,--verbose", verbose, "log progress every 10 epochs to stderr");
        cmd->add_flag("--timing", timing, "add runtime_seconds to the report");
    }

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    add_config_options(eval, flags, config_path);

    CLI::App* verify = app.add_subcommand("verify-reductions", "compare reduction modes with their baselines");
    std::uint64_t verify_seed = 0;
    std::size_t verify_seeds = 1, entities = 20, relations = 4, triples = 60, layers = 3;
    verify->add_option("--seed", verify_seed, "first seed");
    verify->add_option("--seeds", verify_seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
    verify->add_option("--entities", entities)->check(CLI::PositiveNumber);
    verify->add_option("--relations", relations)->check(CLI::PositiveNumber);
    verify->add_option("--triples", triples);
    verify->add_option("--layers", layers)->check(CLI::PositiveNumber);

    CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference checks of scorer and model gradients");
    std::optional<std::string> scorer;
    std::uint64_t grad_seed = 1;
    std::size_t points = 100;
    grad->add_option("--scorer", scorer, "one scorer (default: all)");
    grad->add_option("--seed", grad_seed);
    grad->add_option("--points", points, "random points per scorer")->check(CLI::PositiveNumber);

    CLI::App* report = app.add_subcommand("metrics-report", "mean and standard deviation over report files");
    std::vector<std::string> files;
    std::optional<std::string> report_out;
    report->add_option("reports", files, "report files")->required();
    report->add_option("-o,--out", report_out, "write the summary as a report file");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (align->parsed()) return train_command(merged(config_path, flags), TaskKind::align, verbose, timing, out, err);
        if (classify->parsed())
            return train_command(merged(config_path, flags), TaskKind::classify, verbose, timing, out, err);
        if (eval->parsed()) {
            const auto values = merged(config_path, flags);
            auto it = values.find("checkpoint");
            if (it == values.end()) throw ConfigError("checkpoint", "eval needs a checkpoint path");
            return eval_command(it->second, values, out);
        }
        if (verify->parsed()) return verify_command(verify_seed, verify_seeds, entities, relations, triples, layers, out);
        if (grad->parsed()) return gradcheck_command(scorer, grad_seed, points, out);
        if (report->parsed()) return metrics_report_command(files, report_out, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const UnsupportedModeError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    }
    err << app.help();
    return 1;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_main(args, std::cout, std::cerr);
}

} // namespace kegcn
