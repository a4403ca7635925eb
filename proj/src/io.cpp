#include "kegcn/io.hpp"

#include "kegcn/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace kegcn {

static_assert(std::endian::native == std::endian::little, "checkpoint codec assumes a little-endian host");

std::uint32_t Vocabulary::intern(const std::string& token) {
    if (numeric_) {
        std::uint32_t id = 0;
        const char* end = token.data() + token.size();
        auto [p, ec] = std::from_chars(token.data(), end, id);
        if (ec != std::errc() || p != end || token.empty())
            throw ValidationError("'" + token + "' is not an integer id");
        numeric_size_ = std::max<std::size_t>(numeric_size_, std::size_t{id} + 1);
        return id;
    }
    auto [it, inserted] = ids_.try_emplace(token, static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(token);
    return it->second;
}

std::optional<std::uint32_t> Vocabulary::find(const std::string& token) const {
    if (numeric_) {
        std::uint32_t id = 0;
        const char* end = token.data() + token.size();
        auto [p, ec] = std::from_chars(token.data(), end, id);
        if (ec != std::errc() || p != end || token.empty() || id >= numeric_size_) return std::nullopt;
        return id;
    }
    auto it = ids_.find(token);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

std::string Vocabulary::name(std::uint32_t id) const {
    if (numeric_) return std::to_string(id);
    return names_.at(id);
}

void Vocabulary::reserve_ids(std::size_t n) {
    if (numeric_) numeric_size_ = std::max(numeric_size_, n);
}

namespace {

bool is_integer_token(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return out;
}

// Calls fn(fields, line_number) for every data line, stripping a trailing '\r'.
template <class F>
void for_each_record(std::istream& in, std::size_t expected_fields, F&& fn) {
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line.front() == '#') continue;
        std::vector<std::string> fields = split_tabs(line);
        if (fields.size() != expected_fields)
            throw ValidationError("expected " + std::to_string(expected_fields) +
                                      " tab-separated fields, found " + std::to_string(fields.size()),
                                  number);
        for (const std::string& f : fields)
            if (f.empty()) throw ValidationError("empty field", number);
        fn(fields, number);
    }
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return in;
}

std::uint32_t lookup(const Vocabulary& v, const std::string& token, std::size_t line) {
    if (auto id = v.find(token)) return *id;
    throw ValidationError("unknown entity '" + token + "'", line);
}

} // namespace

TripleFile parse_triples(std::istream& in) {
    std::vector<std::array<std::string, 3>> rows;
    std::vector<std::size_t> lines;
    std::optional<bool> numeric;
    for_each_record(in, 3, [&](const std::vector<std::string>& f, std::size_t line) {
        for (const std::string& token : f) {
            const bool is_int = is_integer_token(token);
            if (!numeric) numeric = is_int;
            if (*numeric != is_int)
                throw ValidationError("integer and string tokens are mixed", line);
        }
        rows.push_back({f[0], f[1], f[2]});
        lines.push_back(line);
    });
    TripleFile out{{}, Vocabulary(numeric.value_or(false)), Vocabulary(numeric.value_or(false))};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        try {
            Triple t;
            t.head = out.entities.intern(rows[i][0]);
            t.relation = out.relations.intern(rows[i][1]);
            t.tail = out.entities.intern(rows[i][2]);
            out.triples.push_back(t);
        } catch (const ValidationError& e) {
            throw ValidationError(e.what(), lines[i]);
        }
    }
    return out;
}

TripleFile load_triples(const std::string& path) {
    std::ifstream in = open_input(path);
    return parse_triples(in);
}

std::vector<EntityPair> parse_alignments(std::istream& in, const Vocabulary& left,
                                         const Vocabulary& right) {
    std::vector<EntityPair> out;
    for_each_record(in, 2, [&](const std::vector<std::string>& f, std::size_t line) {
        out.emplace_back(lookup(left, f[0], line), lookup(right, f[1], line));
    });
    return out;
}

std::vector<EntityPair> load_alignments(const std::string& path, const Vocabulary& left,
                                        const Vocabulary& right) {
    std::ifstream in = open_input(path);
    return parse_alignments(in, left, right);
}

std::vector<std::pair<RelationId, RelationId>> load_relation_pairs(const std::string& path,
                                                                   const Vocabulary& left,
                                                                   const Vocabulary& right) {
    std::ifstream in = open_input(path);
    std::vector<std::pair<RelationId, RelationId>> out;
    for_each_record(in, 2, [&](const std::vector<std::string>& f, std::size_t line) {
        auto a = left.find(f[0]);
        auto b = right.find(f[1]);
        if (!a) throw ValidationError("unknown relation '" + f[0] + "'", line);
        if (!b) throw ValidationError("unknown relation '" + f[1] + "'", line);
        out.emplace_back(*a, *b);
    });
    return out;
}

LabelFile parse_labels(std::istream& in, const Vocabulary& entities, Vocabulary& classes) {
    LabelFile out;
    for_each_record(in, 2, [&](const std::vector<std::string>& f, std::size_t line) {
        LabeledEntity e;
        e.entity = lookup(entities, f[0], line);
        std::size_t start = 0;
        for (;;) {
            const auto comma = f[1].find(',', start);
            const std::string token =
                trim(f[1].substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (token.empty()) throw ValidationError("empty label", line);
            const std::uint32_t c = classes.intern(token);
            if (std::find(e.labels.begin(), e.labels.end(), c) == e.labels.end()) e.labels.push_back(c);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (e.labels.empty()) throw ValidationError("no labels", line);
        if (e.labels.size() > 1) out.multi_label = true;
        out.entries.push_back(std::move(e));
    });
    return out;
}

LabelFile load_labels(const std::string& path, const Vocabulary& entities, Vocabulary& classes) {
    std::ifstream in = open_input(path);
    return parse_labels(in, entities, classes);
}

// Configuration ---------------------------------------------------------------

namespace {

const std::vector<std::string> kPathKeys = {"triples", "triples2", "train",  "valid",
                                            "test",    "relation_pairs", "checkpoint", "report"};

const std::vector<std::string> kKeys = [] {
    std::vector<std::string> k = {"task",   "scorer",   "mode",      "dim",      "layers",
                                  "lr",     "alpha",    "gamma",     "negatives", "epochs",
                                  "patience", "seed",   "runs"};
    k.insert(k.end(), kPathKeys.begin(), kPathKeys.end());
    return k;
}();

template <class T>
T parse_unsigned(const std::string& key, const std::string& value) {
    T out{};
    const char* end = value.data() + value.size();
    auto [p, ec] = std::from_chars(value.data(), end, out);
    if (value.empty() || ec != std::errc() || p != end)
        throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    double out = 0.0;
    const char* end = value.data() + value.size();
    auto [p, ec] = std::from_chars(value.data(), end, out);
    if (value.empty() || ec != std::errc() || p != end || !std::isfinite(out))
        throw ConfigError(key, "expected a number, got '" + value + "'");
    return out;
}

std::string format_real(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

} // namespace

const std::vector<std::string>& config_keys() { return kKeys; }

bool is_config_key(const std::string& key) {
    return std::find(kKeys.begin(), kKeys.end(), key) != kKeys.end();
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::stringstream ss(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(ss, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(number), "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!is_config_key(key)) throw ConfigError(key, "unknown key");
        if (!out.emplace(key, value).second) throw ConfigError(key, "given more than once");
    }
    return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    return parse_config_text(read_file(path));
}

RunConfig resolve_config(const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values)
        if (!is_config_key(key)) throw ConfigError(key, "unknown key");
    auto get = [&](const std::string& key) -> std::optional<std::string> {
        auto it = values.find(key);
        if (it == values.end()) return std::nullopt;
        return it->second;
    };

    RunConfig cfg;
    const std::string task = get("task").value_or("align");
    if (task == "align") cfg.task = TaskKind::align;
    else if (task == "classify") cfg.task = TaskKind::classify;
    else throw ConfigError("task", "expected 'align' or 'classify', got '" + task + "'");

    ModelConfig& m = cfg.train.model;
    m.dim = cfg.task == TaskKind::align ? 200 : 32;
    try {
        if (auto v = get("scorer")) m.scorer = parse_scorer(*v);
    } catch (const std::exception& e) {
        throw ConfigError("scorer", e.what());
    }
    try {
        if (auto v = get("mode")) m.mode = parse_mode(*v);
    } catch (const std::exception& e) {
        throw ConfigError("mode", e.what());
    }
    if (auto v = get("dim")) m.dim = parse_unsigned<std::size_t>("dim", *v);
    if (auto v = get("layers")) m.layers = parse_unsigned<std::size_t>("layers", *v);
    if (auto v = get("alpha")) m.alpha = parse_real("alpha", *v);
    if (auto v = get("lr")) cfg.train.lr = parse_real("lr", *v);
    if (auto v = get("gamma")) cfg.train.gamma = parse_real("gamma", *v);
    if (auto v = get("negatives")) cfg.train.negatives = parse_unsigned<std::size_t>("negatives", *v);
    if (auto v = get("epochs")) cfg.train.epochs = parse_unsigned<std::size_t>("epochs", *v);
    if (auto v = get("patience")) cfg.train.patience = parse_unsigned<std::size_t>("patience", *v);
    if (auto v = get("seed")) cfg.train.seed = parse_unsigned<std::uint64_t>("seed", *v);
    if (auto v = get("runs")) cfg.runs = parse_unsigned<std::size_t>("runs", *v);

    if (m.dim == 0) throw ConfigError("dim", "must be positive");
    if (m.layers == 0) throw ConfigError("layers", "must be at least 1");
    if (m.alpha < 0.0) throw ConfigError("alpha", "must be non-negative");
    if (cfg.train.lr <= 0.0) throw ConfigError("lr", "must be positive");
    if (cfg.train.gamma <= 0.0) throw ConfigError("gamma", "must be positive");
    if (cfg.train.negatives == 0) throw ConfigError("negatives", "must be at least 1");
    if (cfg.runs == 0) throw ConfigError("runs", "must be at least 1");
    try {
        m.validate();
    } catch (const ValidationError& e) {
        throw ConfigError("dim", e.what());
    }
    for (const std::string& key : kPathKeys)
        if (auto v = get(key)) cfg.paths[key] = *v;
    return cfg;
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
    const ModelConfig& m = train.model;
    std::vector<std::pair<std::string, std::string>> out = {
        {"task", task == TaskKind::align ? "align" : "classify"},
        {"scorer", std::string(to_string(m.scorer))},
        {"mode", std::string(to_string(m.mode))},
        {"dim", std::to_string(m.dim)},
        {"layers", std::to_string(m.layers)},
        {"lr", format_real(train.lr)},
        {"alpha", format_real(m.alpha)},
        {"gamma", format_real(train.gamma)},
        {"negatives", std::to_string(train.negatives)},
        {"epochs", std::to_string(train.epochs)},
        {"patience", std::to_string(train.patience)},
        {"seed", std::to_string(train.seed)},
        {"runs", std::to_string(runs)},
    };
    for (const auto& [k, v] : paths) out.emplace_back(k, v);
    return out;
}

// Checkpoints -----------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'K', 'E', 'G', 'C'};

template <class T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

void put_section(std::string& out, const std::string& name, std::span<const double> payload) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint64_t>(out, payload.size());
    for (double x : payload) put<double>(out, x);
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    bool done() const { return pos_ == bytes_.size(); }

    template <class T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string text(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

// "name@RxC" -> (name, rows, cols)
std::tuple<std::string, std::size_t, std::size_t> split_tensor_name(const std::string& s) {
    const auto at = s.rfind('@');
    const auto x = s.rfind('x');
    if (at == std::string::npos || x == std::string::npos || x < at)
        throw FormatError("section '" + s + "' has no shape suffix");
    std::size_t rows = 0, cols = 0;
    const std::string r = s.substr(at + 1, x - at - 1), c = s.substr(x + 1);
    auto [p1, e1] = std::from_chars(r.data(), r.data() + r.size(), rows);
    auto [p2, e2] = std::from_chars(c.data(), c.data() + c.size(), cols);
    if (r.empty() || c.empty() || e1 != std::errc() || e2 != std::errc() || p1 != r.data() + r.size() ||
        p2 != c.data() + c.size())
        throw FormatError("section '" + s + "' has a malformed shape suffix");
    return {s.substr(0, at), rows, cols};
}

} // namespace

std::string serialize_checkpoint(const Checkpoint& cp) {
    std::string out(kMagic, 4);
    put<std::uint32_t>(out, cp.version);
    for (const auto& [key, value] : cp.config) put_section(out, "config." + key + "=" + value, {});
    for (const auto& [name, t] : cp.tensors)
        put_section(out, name + "@" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()), t.values());
    const double best[1] = {cp.best_metric};
    put_section(out, "best_metric", best);
    return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("not a checkpoint (bad magic)");
    Reader in(bytes);
    (void)in.text(4);
    Checkpoint cp;
    cp.version = in.get<std::uint32_t>();
    if (cp.version != Checkpoint::kVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(cp.version));
    bool saw_best = false;
    while (!in.done()) {
        const std::string name = in.text(in.get<std::uint32_t>());
        const std::uint64_t count = in.get<std::uint64_t>();
        if (count > (bytes.size() / sizeof(double))) throw FormatError("checkpoint is truncated");
        std::vector<double> payload(count);
        for (double& x : payload) x = in.get<double>();
        if (name.rfind("config.", 0) == 0) {
            const auto eq = name.find('=');
            if (eq == std::string::npos || count != 0) throw FormatError("malformed config section '" + name + "'");
            cp.config.emplace_back(name.substr(7, eq - 7), name.substr(eq + 1));
        } else if (name == "best_metric") {
            if (count != 1) throw FormatError("best_metric section must hold one value");
            cp.best_metric = payload[0];
            saw_best = true;
        } else {
            auto [base, rows, cols] = split_tensor_name(name);
            if (rows * cols != count) throw FormatError("section '" + name + "' size does not match its shape");
            cp.tensors.emplace_back(base, Tensor(rows, cols, std::move(payload)));
        }
    }
    if (!saw_best) throw FormatError("checkpoint is truncated (no best_metric section)");
    return cp;
}

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
    write_file_atomic(path, serialize_checkpoint(cp));
}

Checkpoint load_checkpoint(const std::string& path) { return deserialize_checkpoint(read_file(path)); }

Checkpoint make_checkpoint(const RunConfig& cfg, const ModelParams& model, double best_metric) {
    Checkpoint cp;
    cp.config = cfg.echo();
    cp.config.emplace_back("output_width", std::to_string(model.config.output_width));
    for (std::size_t l = 0; l < model.layers.size(); ++l)
        for_each_param(model.layers[l], [&](const std::string& name, const Tensor& t) {
            cp.tensors.emplace_back("layer" + std::to_string(l) + "." + name, t);
        });
    for (std::size_t g = 0; g < model.inputs.size(); ++g) {
        cp.tensors.emplace_back("input" + std::to_string(g) + ".entities", model.inputs[g].entities);
        if (!model.inputs[g].relations.empty())
            cp.tensors.emplace_back("input" + std::to_string(g) + ".relations", model.inputs[g].relations);
    }
    cp.best_metric = best_metric;
    return cp;
}

ModelParams restore_model(const Checkpoint& cp, const ModelConfig& config) {
    ModelParams model;
    model.config = config;
    model.layers.resize(config.layers);
    for (const auto& [name, t] : cp.tensors) {
        const auto dot = name.find('.');
        if (dot == std::string::npos) throw FormatError("unexpected tensor '" + name + "'");
        const std::string head = name.substr(0, dot), field = name.substr(dot + 1);
        auto index_of = [&](std::size_t prefix) {
            std::size_t i = 0;
            auto [p, ec] = std::from_chars(head.data() + prefix, head.data() + head.size(), i);
            if (ec != std::errc() || p != head.data() + head.size())
                throw FormatError("unexpected tensor '" + name + "'");
            return i;
        };
        if (head.rfind("layer", 0) == 0) {
            const std::size_t l = index_of(5);
            if (l >= model.layers.size()) throw FormatError("tensor '" + name + "' is beyond the layer count");
            LayerParams& p = model.layers[l];
            if (field == "weight") p.weight = t;
            else if (field == "relation_scale") p.relation_scale = t;
            else if (field == "self_weight") p.self_weight = t;
            else if (field == "relation_transform") p.relation_transform = t;
            else if (field.rfind("relation_weight.", 0) == 0) {
                const std::size_t r = std::stoul(field.substr(16));
                if (p.relation_weights.size() <= r) p.relation_weights.resize(r + 1);
                p.relation_weights[r] = t;
            } else {
                throw FormatError("unexpected tensor '" + name + "'");
            }
        } else if (head.rfind("input", 0) == 0) {
            const std::size_t g = index_of(5);
            if (model.inputs.size() <= g) model.inputs.resize(g + 1);
            if (field == "entities") model.inputs[g].entities = t;
            else if (field == "relations") model.inputs[g].relations = t;
            else throw FormatError("unexpected tensor '" + name + "'");
        } else {
            throw FormatError("unexpected tensor '" + name + "'");
        }
    }

    // Compare against a freshly initialised model of the same configuration.
    std::size_t num_relations = model.layers.empty() ? 0 : model.layers[0].relation_weights.size();
    if (!model.layers.empty() && !model.layers[0].relation_scale.empty())
        num_relations = model.layers[0].relation_scale.rows();
    RandomSource dummy(0);
    const std::vector<LayerParams> shape = init_params(config, num_relations, dummy);
    for (std::size_t l = 0; l < shape.size(); ++l) {
        std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> want, got;
        for_each_param(shape[l], [&](const std::string& n, const Tensor& t) {
            want.push_back({n, {t.rows(), t.cols()}});
        });
        for_each_param(std::as_const(model.layers[l]), [&](const std::string& n, const Tensor& t) {
            got.push_back({n, {t.rows(), t.cols()}});
        });
        if (want != got)
            throw FormatError("layer " + std::to_string(l) + " tensors do not match the configuration");
    }
    if (model.inputs.empty()) throw FormatError("checkpoint holds no input embeddings");
    for (const EmbeddingState& s : model.inputs) {
        if (s.entities.cols() != config.dim) throw FormatError("input embedding width does not match dim");
        if (!s.relations.empty() && s.relations.cols() != config.relation_width())
            throw FormatError("relation embedding width does not match the configuration");
    }
    return model;
}

// Files -----------------------------------------------------------------------

void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp." + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw ValidationError("cannot write '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ValidationError("cannot replace '" + path + "'");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_report(const Report& report) {
    std::string out;
    for (const auto& [k, v] : report) out += k + "\t" + v + "\n";
    return out;
}

Report parse_report(const std::string& text) {
    Report out;
    std::stringstream ss(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(ss, line)) {
        ++number;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ValidationError("expected key<TAB>value", number);
        out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return out;
}

} // namespace kegcn
