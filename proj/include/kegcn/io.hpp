#pragma once

// Dataset files, configuration, checkpoints and report files.
//
// Triples:    head<TAB>relation<TAB>tail, one per line. Tokens are either all
//             non-negative integers (used as ids) or all strings (interned in
//             first-seen order). Blank lines and lines starting with '#' are skipped.
// Alignments: e1<TAB>e2
// Labels:     entity<TAB>label[,label...]
// Config:     key = value

#include "kegcn/graph.hpp"
#include "kegcn/numerics.hpp"
#include "kegcn/tasks.hpp"

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace kegcn {

/// Token <-> id map. In numeric mode tokens are decimal ids and the map only
/// tracks the largest id seen.
class Vocabulary {
public:
    explicit Vocabulary(bool numeric = false) : numeric_(numeric) {}

    bool numeric() const noexcept { return numeric_; }
    std::size_t size() const noexcept { return numeric_ ? numeric_size_ : names_.size(); }

    /// Id of `token`, adding it when new.
    std::uint32_t intern(const std::string& token);
    /// Id of a known token.
    std::optional<std::uint32_t> find(const std::string& token) const;
    std::string name(std::uint32_t id) const;
    /// Grows a numeric vocabulary to at least n ids.
    void reserve_ids(std::size_t n);

private:
    bool numeric_;
    std::size_t numeric_size_ = 0;
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t> ids_;
};

struct TripleFile {
    std::vector<Triple> triples;
    Vocabulary entities;
    Vocabulary relations;
};

/// Throws ValidationError naming the line for malformed input, and when
/// integer and string tokens are mixed.
TripleFile parse_triples(std::istream& in);
TripleFile load_triples(const std::string& path);

std::vector<EntityPair> parse_alignments(std::istream& in, const Vocabulary& left,
                                         const Vocabulary& right);
std::vector<EntityPair> load_alignments(const std::string& path, const Vocabulary& left,
                                        const Vocabulary& right);

std::vector<std::pair<RelationId, RelationId>> load_relation_pairs(const std::string& path,
                                                                   const Vocabulary& left,
                                                                   const Vocabulary& right);

struct LabelFile {
    std::vector<LabeledEntity> entries;
    bool multi_label = false; // some line carries more than one label
};

/// Label tokens are interned into `classes`, so splits loaded in sequence share ids.
LabelFile parse_labels(std::istream& in, const Vocabulary& entities, Vocabulary& classes);
LabelFile load_labels(const std::string& path, const Vocabulary& entities, Vocabulary& classes);

// Configuration ------------------------------------------------------------

enum class TaskKind { align, classify };

struct RunConfig {
    TaskKind task = TaskKind::align;
    TrainConfig train;
    std::size_t runs = 1;
    std::map<std::string, std::string> paths; // triples, triples2, train, valid, test, ...

    /// Every key with its resolved value, in a fixed order.
    std::vector<std::pair<std::string, std::string>> echo() const;
};

/// `key = value` lines; '#' starts a comment. Throws ConfigError naming the key
/// for unknown keys, duplicate keys and malformed lines (key "line N").
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Applies defaults (dim 200 for align, 32 for classify) and converts types.
/// Throws ConfigError naming the offending key.
RunConfig resolve_config(const std::map<std::string, std::string>& values);

bool is_config_key(const std::string& key);
const std::vector<std::string>& config_keys();

// Checkpoints ----------------------------------------------------------------

/// Layout: "KEGC", u32 LE version, then sections until end of file, each
/// u32 LE name length | name | u64 LE element count | f64 LE payload.
/// Config entries are zero-length sections named "config.<key>=<value>";
/// tensors are named "<name>@<rows>x<cols>".
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    std::uint32_t version = kVersion;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::pair<std::string, Tensor>> tensors;
    double best_metric = 0.0;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string serialize_checkpoint(const Checkpoint& cp);
/// Throws FormatError for bad magic, unknown version or truncation.
Checkpoint deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const RunConfig& cfg, const ModelParams& model, double best_metric);
/// Rebuilds a model; tensor shapes must match the config.
ModelParams restore_model(const Checkpoint& cp, const ModelConfig& model);

// Files ----------------------------------------------------------------------

/// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

using Report = std::vector<std::pair<std::string, std::string>>;

std::string format_report(const Report& report);
Report parse_report(const std::string& text);

} // namespace kegcn
