#include "bugloc/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "bugloc/text.hpp"
#include "bugloc/version.hpp"

namespace bugloc {

namespace {

json require(const json& obj, const char* key, const std::string& path,
             int line) {
  if (!obj.contains(key)) {
    throw SchemaError("missing key '" + std::string(key) + "'", path, line);
  }
  return obj.at(key);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

BugPattern pattern_or_throw(const std::string& name, const std::string& path,
                            int line) {
  auto pattern = pattern_from_name(name);
  if (!pattern) {
    throw SchemaError("unknown pattern '" + name +
                          "' (expected operator|numeric|keyword|variable|edge)",
                      path, line);
  }
  return *pattern;
}

}  // namespace

std::vector<std::pair<int, json>> read_jsonl_numbered(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path.string());

  std::vector<std::pair<int, json>> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) {
      throw SchemaError("invalid JSON", path.string(), line_no);
    }
    if (obj.is_object() && obj.contains("meta")) continue;
    records.emplace_back(line_no, std::move(obj));
  }
  return records;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::vector<json> records;
  for (auto& [line_no, obj] : read_jsonl_numbered(path)) {
    records.push_back(std::move(obj));
  }
  return records;
}

void write_jsonl(const std::filesystem::path& path,
                 const std::optional<json>& meta,
                 const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  if (meta) out << meta->dump() << '\n';
  for (const json& record : records) out << record.dump() << '\n';
}

json make_meta(const json& effective_config) {
  const std::string canonical = effective_config.dump();
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));
  return json{{"meta",
               {{"tool", kToolName},
                {"version", kToolVersion},
                {"config", effective_config},
                {"config_hash", hash_hex}}}};
}

std::vector<CorpusDoc> load_corpus(const std::filesystem::path& path) {
  std::vector<CorpusDoc> docs;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".v") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      docs.push_back(CorpusDoc{file.stem().string(), read_file(file), ""});
    }
    return docs;
  }

  for (const auto& [line_no, obj] : read_jsonl_numbered(path)) {
    if (!obj.is_object()) {
      throw SchemaError("corpus record is not an object", path.string(),
                        line_no);
    }
    CorpusDoc doc;
    doc.id = require(obj, "id", path.string(), line_no).get<std::string>();
    doc.text = require(obj, "text", path.string(), line_no).get<std::string>();
    doc.description = obj.value("description", "");
    docs.push_back(std::move(doc));
  }
  return docs;
}

json to_json(const MutationRecord& record) {
  return json{{"module_id", record.module_id},
              {"pattern", pattern_name(record.pattern)},
              {"line_no", record.line_no},
              {"original_line", record.original_line},
              {"mutated_line", record.mutated_line},
              {"buggy_code", record.mutated_text},
              {"seed", record.seed}};
}

MutationRecord mutation_record_from_json(const json& obj,
                                         const std::string& path, int line) {
  MutationRecord record;
  record.module_id = require(obj, "module_id", path, line).get<std::string>();
  record.pattern = pattern_or_throw(
      require(obj, "pattern", path, line).get<std::string>(), path, line);
  record.line_no = require(obj, "line_no", path, line).get<int>();
  record.original_line =
      require(obj, "original_line", path, line).get<std::string>();
  record.mutated_line =
      require(obj, "mutated_line", path, line).get<std::string>();
  record.mutated_text =
      require(obj, "buggy_code", path, line).get<std::string>();
  record.seed = obj.value("seed", 0ULL);
  return record;
}

json to_json(const TestCase& test_case) {
  return json{{"case_id", test_case.case_id},
              {"design_description", test_case.design_description},
              {"buggy_code", test_case.buggy_code},
              {"buggy_line_no", test_case.buggy_line_no},
              {"buggy_line", test_case.buggy_line},
              {"pattern", pattern_name(test_case.pattern)},
              {"module_id", test_case.module_id}};
}

TestCase test_case_from_json(const json& obj, const std::string& path,
                             int line) {
  TestCase tc;
  tc.case_id = require(obj, "case_id", path, line).get<std::string>();
  tc.design_description =
      require(obj, "design_description", path, line).get<std::string>();
  tc.buggy_code = require(obj, "buggy_code", path, line).get<std::string>();
  tc.buggy_line_no = require(obj, "buggy_line_no", path, line).get<int>();
  tc.buggy_line = require(obj, "buggy_line", path, line).get<std::string>();
  tc.pattern = pattern_or_throw(
      require(obj, "pattern", path, line).get<std::string>(), path, line);
  tc.module_id = obj.value("module_id", "");
  return tc;
}

json to_json(const ResponseSet& responses) {
  return json{{"case_id", responses.case_id},
              {"outputs", responses.outputs},
              {"temperature", responses.temperature}};
}

ResponseSet response_set_from_json(const json& obj, const std::string& path,
                                   int line) {
  ResponseSet rs;
  rs.case_id = require(obj, "case_id", path, line).get<std::string>();
  for (const auto& o : require(obj, "outputs", path, line)) {
    rs.outputs.push_back(o.get<std::string>());
  }
  rs.temperature = obj.value("temperature", 0.0);
  return rs;
}

json report_to_json(const EvalReport& report) {
  json per_case = json::array();
  for (const CaseScore& cs : report.per_case) {
    per_case.push_back(json{{"case_id", cs.case_id},
                            {"pattern", pattern_name(cs.pattern)},
                            {"n", cs.n},
                            {"c", cs.c}});
  }
  json pass_at = json::object();
  for (const auto& [k, v] : report.pass_at) {
    pass_at[std::to_string(k)] = v;
  }
  json per_pattern = json::object();
  for (const auto& [pattern, v] : report.per_pattern_pass1) {
    per_pattern[std::string(pattern_name(pattern))] = v;
  }
  json out = {{"per_case", per_case},
              {"pass_at", pass_at},
              {"per_pattern_pass1", per_pattern}};
  if (report.hit_rate) {
    out["hit_rate"] = *report.hit_rate;
  } else {
    out["hit_rate"] = nullptr;
  }
  return out;
}

}  // namespace bugloc
