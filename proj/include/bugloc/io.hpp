#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bugloc/eval.hpp"
#include "bugloc/mutation.hpp"

namespace bugloc {

using json = nlohmann::json;

// Reads one JSON object per line; blank lines are skipped and metadata
// records (objects with a "meta" key) are dropped. Parse and shape errors
// carry the file path and 1-based line number.
std::vector<json> read_jsonl(const std::filesystem::path& path);

// Same, keeping each record's 1-based line number for error reporting.
std::vector<std::pair<int, json>> read_jsonl_numbered(
    const std::filesystem::path& path);

// Writes records one per line, preceded by the meta record when given.
void write_jsonl(const std::filesystem::path& path,
                 const std::optional<json>& meta,
                 const std::vector<json>& records);

// Provenance header placed first in every artifact: tool name/version, the
// effective configuration, its hash and the seeds in play.
json make_meta(const json& effective_config);

struct CorpusDoc {
  std::string id;
  std::string text;
  std::string description;
};

// A corpus is either a JSONL file of {"id","text"[,"description"]} objects
// or a directory of .v files (id = filename stem, description empty).
std::vector<CorpusDoc> load_corpus(const std::filesystem::path& path);

json to_json(const MutationRecord& record);
MutationRecord mutation_record_from_json(const json& obj,
                                         const std::string& path, int line);

json to_json(const TestCase& test_case);
TestCase test_case_from_json(const json& obj, const std::string& path,
                             int line);

json to_json(const ResponseSet& responses);
ResponseSet response_set_from_json(const json& obj, const std::string& path,
                                   int line);

json report_to_json(const EvalReport& report);

}  // namespace bugloc
