#pragma once

#include "kegcn/io.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace kegcn {

/// Graphs, splits and vocabularies named by a run configuration. Alignment
/// runs hold two graphs; classification runs one.
struct DatasetBundle {
    std::vector<KnowledgeGraph> graphs;
    std::vector<TripleFile> files;
    AlignmentSeeds seeds;
    std::vector<std::pair<RelationId, RelationId>> relation_pairs;
    LabelSet labels;
    Vocabulary classes;
};

/// Throws ConfigError when a required path key is missing and
/// ValidationError for unreadable or malformed files.
DatasetBundle load_dataset(const RunConfig& cfg);

/// Exit codes: 0 success, 1 validation or usage error (also a failed check),
/// 2 internal error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

} // namespace kegcn
