// bugloc: dataset and evaluation toolkit for Verilog functional-bug
// localization. Subcommands cover the full workflow: corpus dedup, bug
// injection, testset construction, training-data builders (PT/SFT/SimPO),
// model evaluation with pass@k, temperature sweeps and SimPO scoring.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "bugloc/dataset.hpp"
#include "bugloc/dedup.hpp"
#include "bugloc/eval.hpp"
#include "bugloc/io.hpp"
#include "bugloc/mutation.hpp"
#include "bugloc/parallel.hpp"
#include "bugloc/rng.hpp"
#include "bugloc/simpo.hpp"
#include "bugloc/text.hpp"
#include "bugloc/verilog.hpp"
#include "bugloc/version.hpp"

namespace {

using namespace bugloc;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitExternal = 2;

struct GatewayFlags {
  std::string transport = "http";
  std::string transcript;
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o-mini";
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_s = 60.0;
  int max_retries = 3;
  double backoff_s = 0.5;

  void attach(CLI::App* cmd) {
    cmd->add_option("--transport", transport, "Transport: http or mock")
        ->check(CLI::IsMember({"http", "mock"}));
    cmd->add_option("--transcript", transcript,
                    "Mock transcript JSONL (required with --transport mock)");
    cmd->add_option("--base-url", base_url, "Chat-completions base URL");
    cmd->add_option("--model", model, "Model name");
    cmd->add_option("--api-key-env", api_key_env,
                    "Environment variable holding the API key");
    cmd->add_option("--timeout", timeout_s, "Request timeout in seconds");
    cmd->add_option("--max-retries", max_retries,
                    "Retries for transient failures");
    cmd->add_option("--backoff", backoff_s, "Base backoff in seconds");
  }

  Gateway build() const {
    EndpointConfig cfg;
    cfg.base_url = base_url;
    cfg.model = model;
    cfg.api_key_env = api_key_env;
    cfg.timeout_s = timeout_s;
    cfg.max_retries = max_retries;
    cfg.backoff_base_s = backoff_s;
    if (transport == "mock") {
      if (transcript.empty()) {
        throw CLI::ValidationError(
            "--transcript",
            "required with --transport mock, e.g. --transcript t.jsonl");
      }
      return Gateway::with_mock(transcript, cfg);
    }
    return Gateway::with_http(cfg);
  }

  json config_json() const {
    return json{{"transport", transport}, {"base_url", base_url},
                {"model", model},         {"api_key_env", api_key_env},
                {"timeout", timeout_s},   {"max_retries", max_retries},
                {"backoff", backoff_s}};
  }
};

// Config-file values become option defaults, so command-line flags always
// win; a key that satisfies a required option lifts the requirement.
void apply_config_defaults(CLI::App* cmd, const json& section) {
  if (!section.is_object()) return;
  for (const auto& [key, value] : section.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (!opt) {
      throw CLI::ValidationError(
          "--config", "unknown key '" + key + "' for subcommand '" +
                          cmd->get_name() + "' (see --help for valid flags)");
    }
    if (opt->get_expected_min() == 0) {  // a flag
      if (value.is_boolean() && value.get<bool>()) opt->add_result("true");
      continue;
    }
    opt->default_val(value.is_string() ? value.get<std::string>()
                                       : value.dump());
    opt->required(false);
  }
}

// --config must be known before CLI11 parses, so it is scanned manually
std::string scan_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg(argv[i]);
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) {
      return std::string(arg.substr(std::string_view("--config=").size()));
    }
  }
  return {};
}

std::vector<std::pair<SourceModule, std::string>> load_module_corpus(
    const std::string& path, int min_lines,
    std::optional<std::size_t> max_chars, bool warn_skipped) {
  LoadOptions options;
  options.min_lines = min_lines;
  options.max_chars = max_chars;
  std::vector<std::pair<SourceModule, std::string>> corpus;
  std::size_t skipped = 0;
  for (const CorpusDoc& doc : load_corpus(path)) {
    try {
      corpus.emplace_back(load_module(doc.text, doc.id, options),
                          doc.description);
    } catch (const LoadError& e) {
      ++skipped;
      if (warn_skipped) {
        std::cerr << "skip " << doc.id << ": " << e.what() << "\n";
      }
    }
  }
  if (warn_skipped && skipped > 0) {
    std::cerr << skipped << " corpus entries skipped\n";
  }
  return corpus;
}

std::map<BugPattern, std::size_t> parse_counts(const std::string& spec) {
  std::map<BugPattern, std::size_t> counts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError(
          "--counts", "expected name=count pairs, e.g. operator=25,edge=14");
    }
    const auto pattern = pattern_from_name(item.substr(0, eq));
    if (!pattern) {
      throw CLI::ValidationError(
          "--counts", "unknown pattern '" + item.substr(0, eq) +
                          "', expected operator|numeric|keyword|variable|edge");
    }
    counts[*pattern] = std::stoull(item.substr(eq + 1));
  }
  return counts;
}

std::string format_temp(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

std::map<std::string, std::string> description_map(
    const std::vector<CorpusDoc>& docs) {
  std::map<std::string, std::string> out;
  for (const CorpusDoc& doc : docs) out[doc.id] = doc.description;
  return out;
}

// ---------------------------------------------------------------------------

int cmd_dedup(const std::string& in, const std::string& out,
              const std::string& report_path, double threshold,
              DedupParams params) {
  std::vector<std::pair<std::string, std::string>> corpus;
  std::vector<CorpusDoc> docs = load_corpus(in);
  corpus.reserve(docs.size());
  for (const CorpusDoc& doc : docs) corpus.emplace_back(doc.id, doc.text);

  const DedupResult result = deduplicate(corpus, threshold, params);

  const json config = {{"command", "dedup"},
                       {"threshold", threshold},
                       {"num_hashes", params.num_hashes},
                       {"bands", params.lsh.bands},
                       {"rows", params.lsh.rows},
                       {"shingle_k", params.shingle_k},
                       {"seed", params.seed},
                       {"exact_verify", params.exact_verify}};

  std::map<std::string, const CorpusDoc*> by_id;
  for (const CorpusDoc& doc : docs) by_id[doc.id] = &doc;
  std::vector<json> kept;
  for (const std::string& id : result.retained_ids) {
    const CorpusDoc* doc = by_id.at(id);
    json record = {{"id", doc->id}, {"text", doc->text}};
    if (!doc->description.empty()) record["description"] = doc->description;
    kept.push_back(std::move(record));
  }
  write_jsonl(out, make_meta(config), kept);

  if (!report_path.empty()) {
    std::vector<json> entries;
    for (const DuplicateEntry& e : result.report) {
      entries.push_back(json{{"kept", e.kept},
                             {"dropped", e.dropped},
                             {"similarity", e.similarity}});
    }
    write_jsonl(report_path, make_meta(config), entries);
  }
  std::cout << "dedup: " << corpus.size() << " in, "
            << result.retained_ids.size() << " retained, "
            << result.report.size() << " dropped\n";
  return kExitOk;
}

int cmd_mutate(const std::string& corpus_path, const std::string& pattern_arg,
               std::uint64_t seed, const std::string& out, int min_lines,
               std::size_t max_chars, const MutationOptions& options,
               unsigned jobs) {
  const auto corpus = load_module_corpus(
      corpus_path, min_lines,
      max_chars ? std::optional<std::size_t>(max_chars) : std::nullopt, true);
  if (corpus.empty()) {
    std::cerr << "no usable modules in corpus\n";
    return kExitValidation;
  }

  std::vector<std::optional<MutationRecord>> slots(corpus.size());
  std::vector<std::string> errors(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    const SourceModule& module = corpus[i].first;
    const std::uint64_t task_seed = derive_seed(seed, i);
    try {
      BugPattern pattern;
      if (pattern_arg == "any") {
        std::vector<BugPattern> eligible;
        for (BugPattern p : kAllPatterns) {
          if (!enumerate_sites(module, p, options).empty()) {
            eligible.push_back(p);
          }
        }
        if (eligible.empty()) {
          errors[i] = "no mutation sites under any pattern";
          return;
        }
        Xoshiro256ss rng(derive_seed(task_seed, 0x9e3779b9));
        pattern = eligible[rng.bounded(eligible.size())];
      } else {
        pattern = *pattern_from_name(pattern_arg);
      }
      MutationRecord record = inject(module, pattern, task_seed, options);
      if (!legality_check(record, module, options)) {
        errors[i] = "mutant failed the legality check";
        return;
      }
      slots[i] = std::move(record);
    } catch (const NoSitesError& e) {
      errors[i] = e.what();
    }
  });

  std::vector<json> records;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (slots[i]) {
      records.push_back(to_json(*slots[i]));
    } else {
      ++skipped;
      std::cerr << "skip " << corpus[i].first.id << ": " << errors[i] << "\n";
    }
  }
  const json config = {{"command", "mutate"},
                       {"pattern", pattern_arg},
                       {"seed", seed},
                       {"min_lines", min_lines},
                       {"max_chars", max_chars},
                       {"allow_cross_class_ops", options.allow_cross_class_ops},
                       {"numeric_random_values", options.numeric_random_values},
                       {"synth_command", options.synth_command}};
  write_jsonl(out, make_meta(config), records);
  std::cout << "mutate: " << records.size() << " mutants written, " << skipped
            << " modules skipped\n";
  return kExitOk;
}

int cmd_build_testset(const std::string& corpus_path,
                      const std::string& counts_spec, std::uint64_t seed,
                      const std::string& out, int min_lines,
                      std::size_t max_chars, const MutationOptions& options) {
  const auto corpus = load_module_corpus(
      corpus_path, min_lines,
      max_chars ? std::optional<std::size_t>(max_chars) : std::nullopt, true);
  const auto counts = parse_counts(counts_spec);
  const auto cases = build_testset(corpus, counts, seed, options);

  std::vector<json> records;
  for (const TestCase& tc : cases) records.push_back(to_json(tc));
  const json config = {{"command", "build-testset"},
                       {"counts", counts_spec},
                       {"seed", seed},
                       {"min_lines", min_lines}};
  write_jsonl(out, make_meta(config), records);
  std::cout << "build-testset: " << cases.size() << " cases written\n";
  return kExitOk;
}

std::vector<MutationRecord> read_mutants(const std::string& path) {
  std::vector<MutationRecord> records;
  for (const auto& [line_no, obj] : read_jsonl_numbered(path)) {
    records.push_back(mutation_record_from_json(obj, path, line_no));
  }
  return records;
}

int cmd_build_sft(const std::string& mutants_path,
                  const std::string& corpus_path, const std::string& out,
                  bool numbered, std::size_t max_sample_chars) {
  const auto descriptions = description_map(load_corpus(corpus_path));
  std::vector<json> records;
  std::size_t truncated = 0;
  for (const MutationRecord& record : read_mutants(mutants_path)) {
    auto it = descriptions.find(record.module_id);
    const std::string description =
        it == descriptions.end() ? "" : it->second;
    const SftSample sample = build_sft_sample(record, description, numbered);
    if (max_sample_chars &&
        sample.prompt.size() + sample.label.size() > max_sample_chars) {
      ++truncated;
      continue;
    }
    records.push_back(json{
        {"instruction", std::string(kInstruction)},
        {"input", sample.prompt.substr(kInstruction.size() + 2)},
        {"output", sample.label}});
  }
  const json config = {{"command", "build-sft"},
                       {"numbered", numbered},
                       {"max_sample_chars", max_sample_chars}};
  write_jsonl(out, make_meta(config), records);
  std::cout << "build-sft: " << records.size() << " samples written";
  if (truncated) std::cout << ", " << truncated << " over the length cap";
  std::cout << "\n";
  return kExitOk;
}

int cmd_build_pt(const std::string& mutants_path,
                 const std::string& corpus_path, const GatewayFlags& gw,
                 const std::string& template_path, const std::string& out,
                 const std::string& thoughts_out, std::size_t max_sample_chars,
                 unsigned jobs) {
  const auto records = read_mutants(mutants_path);
  const auto descriptions = description_map(load_corpus(corpus_path));
  std::string template_text = default_thought_template();
  if (!template_path.empty()) {
    std::ifstream in(template_path);
    if (!in) {
      std::cerr << "cannot open template: " << template_path << "\n";
      return kExitValidation;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    template_text = buf.str();
  }

  Gateway gateway = gw.build();
  GenerateOptions gen;
  gen.max_in_flight = jobs;
  const auto outcomes = generate_thoughts(records, descriptions, gateway,
                                          template_text, gen);

  std::vector<json> pt_records;
  std::vector<json> thought_records;
  std::size_t invalid = 0;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& outcome = outcomes[i];
    if (!outcome.thought) {
      ++failed;
      thought_records.push_back(json{{"module_id", records[i].module_id},
                                     {"status", "gateway_error"},
                                     {"error", outcome.error}});
      continue;
    }
    thought_records.push_back(json{
        {"module_id", records[i].module_id},
        {"status", outcome.thought->valid ? "valid" : "invalid"},
        {"thought", outcome.thought->thought_text}});
    if (!outcome.thought->valid) {
      ++invalid;
      continue;
    }
    auto it = descriptions.find(records[i].module_id);
    const std::string description =
        it == descriptions.end() ? "" : it->second;
    const PtSample sample =
        build_pt_sample(records[i], description, *outcome.thought);
    if (max_sample_chars && sample.text.size() > max_sample_chars) continue;
    pt_records.push_back(json{{"text", sample.text}});
  }

  const json config = {{"command", "build-pt"},
                       {"gateway", gw.config_json()},
                       {"template", template_path},
                       {"max_sample_chars", max_sample_chars}};
  write_jsonl(out, make_meta(config), pt_records);
  if (!thoughts_out.empty()) {
    write_jsonl(thoughts_out, make_meta(config), thought_records);
  }
  std::cout << "build-pt: " << pt_records.size() << " samples written, "
            << invalid << " thoughts invalid, " << failed
            << " gateway failures\n";
  return kExitOk;
}

int cmd_build_simpo(const std::string& mutants_path,
                    const std::string& corpus_path, const GatewayFlags& gw,
                    int n, double temperature, std::uint64_t seed,
                    const std::string& out, const std::string& responses_out,
                    std::size_t max_sample_chars, unsigned jobs,
                    bool numbered) {
  const auto records = read_mutants(mutants_path);
  const auto descriptions = description_map(load_corpus(corpus_path));
  Gateway gateway = gw.build();

  struct Slot {
    std::optional<SimpoSample> sample;
    std::vector<std::string> outputs;
    std::string error;
  };
  std::vector<Slot> slots(records.size());

  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const MutationRecord& record = records[i];
    auto it = descriptions.find(record.module_id);
    const std::string description =
        it == descriptions.end() ? "" : it->second;
    ChatRequest req;
    req.user = format_prompt(description, record.mutated_text, numbered);
    req.temperature = temperature;
    req.n = n;
    try {
      const auto outputs = gateway.complete(req);
      slots[i].sample = build_simpo_sample(record, description, outputs,
                                           derive_seed(seed, i), numbered);
      slots[i].outputs = outputs;
    } catch (const Error& e) {
      slots[i].error = e.what();
    }
  });

  std::vector<json> samples;
  std::vector<json> responses;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!slots[i].sample) {
      ++failed;
      std::cerr << "skip " << records[i].module_id << ": " << slots[i].error
                << "\n";
      continue;
    }
    if (max_sample_chars &&
        slots[i].sample->prompt.size() > max_sample_chars) {
      continue;
    }
    samples.push_back(json{{"prompt", slots[i].sample->prompt},
                           {"chosen", slots[i].sample->chosen},
                           {"rejected", slots[i].sample->rejected}});
    responses.push_back(json{{"case_id", records[i].module_id},
                             {"outputs", slots[i].outputs},
                             {"temperature", temperature}});
  }
  if (!records.empty() && samples.empty()) {
    std::cerr << "every record failed\n";
    return kExitExternal;
  }
  const json config = {{"command", "build-simpo"},
                       {"gateway", gw.config_json()},
                       {"n", n},
                       {"temperature", temperature},
                       {"seed", seed}};
  write_jsonl(out, make_meta(config), samples);
  if (!responses_out.empty()) {
    write_jsonl(responses_out, make_meta(config), responses);
  }
  std::cout << "build-simpo: " << samples.size() << " triples written, "
            << failed << " failures\n";
  return kExitOk;
}

std::vector<TestCase> read_testset(const std::string& path) {
  std::vector<TestCase> cases;
  for (const auto& [line_no, obj] : read_jsonl_numbered(path)) {
    cases.push_back(test_case_from_json(obj, path, line_no));
  }
  return cases;
}

int cmd_eval(const std::string& testset_path, const GatewayFlags& gw,
             const std::string& responses_path, int n, double temperature,
             const std::vector<int>& ks, const std::string& mode_arg,
             const std::string& report_path,
             const std::string& dump_responses,
             const std::string& line_lists_path, unsigned jobs) {
  const auto cases = read_testset(testset_path);
  const ScoringMode mode = mode_arg == "substring" ? ScoringMode::Substring
                                                   : ScoringMode::EditDistance;

  EvalReport report;
  std::vector<ResponseSet> responses;
  std::vector<std::pair<std::string, std::string>> failures;

  if (!responses_path.empty()) {
    // offline scoring of precomputed responses
    for (const auto& [line_no, obj] : read_jsonl_numbered(responses_path)) {
      responses.push_back(
          response_set_from_json(obj, responses_path, line_no));
    }
    report = aggregate(cases, responses, ks, mode);
  } else {
    Gateway gateway = gw.build();
    EvalRunConfig cfg;
    cfg.n = n;
    cfg.temperature = temperature;
    cfg.ks = ks;
    cfg.mode = mode;
    cfg.jobs = jobs;
    EvalRunOutcome outcome = run_eval(cases, gateway, cfg);
    report = std::move(outcome.report);
    responses = std::move(outcome.responses);
    failures = std::move(outcome.failures);
  }

  if (!line_lists_path.empty()) {
    std::map<std::string, std::optional<std::vector<int>>> lists;
    for (const auto& [line_no, obj] : read_jsonl_numbered(line_lists_path)) {
      const std::string id = obj.value("case_id", "");
      if (!obj.contains("lines") || obj["lines"].is_null()) {
        lists[id] = std::nullopt;
      } else {
        lists[id] = obj["lines"].get<std::vector<int>>();
      }
    }
    if (cases.empty()) {
      std::cerr << "warning: hit rate over zero cases is 0 by definition\n";
    }
    report.hit_rate = hit_rate(cases, lists);
  }

  const json config = {{"command", "eval"},
                       {"n", n},
                       {"temperature", temperature},
                       {"mode", mode_arg},
                       {"offline", !responses_path.empty()}};
  json doc = report_to_json(report);
  doc["meta"] = make_meta(config)["meta"];
  if (!failures.empty()) {
    json failed = json::array();
    for (const auto& [id, error] : failures) {
      failed.push_back(json{{"case_id", id}, {"error", error}});
    }
    doc["failed_cases"] = failed;
  }
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    out << doc.dump(2) << "\n";
  } else {
    std::cout << doc.dump(2) << "\n";
  }
  if (!dump_responses.empty()) {
    std::vector<json> records;
    for (const ResponseSet& rs : responses) records.push_back(to_json(rs));
    write_jsonl(dump_responses, make_meta(config), records);
  }

  for (const auto& [k, v] : report.pass_at) {
    std::cout << "pass@" << k << " = " << v << "\n";
  }
  if (!failures.empty()) {
    std::cerr << failures.size() << " cases failed and were excluded\n";
  }
  return kExitOk;
}

int cmd_sweep(const std::string& testset_path, const GatewayFlags& gw,
              int n, const std::vector<double>& temps,
              const std::vector<int>& ks, const std::string& mode_arg,
              const std::string& out_dir, unsigned jobs) {
  const auto cases = read_testset(testset_path);
  const ScoringMode mode = mode_arg == "substring" ? ScoringMode::Substring
                                                   : ScoringMode::EditDistance;
  std::filesystem::create_directories(out_dir);

  for (double temperature : temps) {
    Gateway gateway = gw.build();
    EvalRunConfig cfg;
    cfg.n = n;
    cfg.temperature = temperature;
    cfg.ks = ks;
    cfg.mode = mode;
    cfg.jobs = jobs;
    const EvalRunOutcome outcome = run_eval(cases, gateway, cfg);

    const json config = {{"command", "sweep"},
                         {"n", n},
                         {"temperature", temperature},
                         {"mode", mode_arg}};
    json doc = report_to_json(outcome.report);
    doc["meta"] = make_meta(config)["meta"];

    const std::filesystem::path path =
        std::filesystem::path(out_dir) /
        ("report_t" + format_temp(temperature) + ".json");
    std::ofstream out(path);
    out << doc.dump(2) << "\n";
    std::cout << "sweep: wrote " << path.string() << " (pass@"
              << cfg.ks.front() << " = "
              << outcome.report.pass_at.at(cfg.ks.front()) << ")\n";
  }
  return kExitOk;
}

int cmd_simpo_score(const std::string& in, const std::string& out,
                    double beta, double gamma) {
  const SimpoParams params{beta, gamma};
  std::vector<std::pair<TokenLogProbs, TokenLogProbs>> pairs;
  std::vector<json> records;
  for (const auto& [line_no, obj] : read_jsonl_numbered(in)) {
    if (!obj.contains("chosen_logprobs") ||
        !obj.contains("rejected_logprobs")) {
      throw SchemaError("need chosen_logprobs and rejected_logprobs", in,
                        line_no);
    }
    TokenLogProbs chosen{obj["chosen_logprobs"].get<std::vector<double>>()};
    TokenLogProbs rejected{
        obj["rejected_logprobs"].get<std::vector<double>>()};
    const auto [loss, margin] = simpo_loss(chosen, rejected, params);
    records.push_back(json{{"index", pairs.size()},
                           {"margin", margin},
                           {"loss", loss},
                           {"reward_chosen", reward(chosen, params)},
                           {"reward_rejected", reward(rejected, params)}});
    pairs.emplace_back(std::move(chosen), std::move(rejected));
  }
  if (pairs.empty()) {
    std::cerr << "no pairs in input\n";
    return kExitValidation;
  }
  const double mean = batch_objective(pairs, params);
  records.push_back(json{{"batch_mean_loss", mean},
                         {"pairs", pairs.size()}});

  const json config = {{"command", "simpo-score"},
                       {"beta", beta},
                       {"gamma", gamma}};
  if (!out.empty()) {
    write_jsonl(out, make_meta(config), records);
  } else {
    for (const json& r : records) std::cout << r.dump() << "\n";
  }
  std::cout << "simpo-score: " << pairs.size()
            << " pairs, batch mean loss = " << mean << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verilog bug-localization dataset and evaluation toolkit"};
  app.set_version_flag("--version",
                       std::string(kToolName) + " " +
                           std::string(kToolVersion) + "\n" +
                           std::string(kNonReproductionNote));
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config file; flags override file values");

  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--jobs", jobs, "Worker threads for parallel stages")
      ->capture_default_str();

  // --- dedup ---
  auto* dedup_cmd =
      app.add_subcommand("dedup", "MinHash+LSH near-duplicate removal");
  std::string dd_in;
  std::string dd_out;
  std::string dd_report;
  double dd_threshold = 0.7;
  DedupParams dd_params;
  dedup_cmd->add_option("--in", dd_in, "Corpus JSONL or directory of .v")
      ->required();
  dedup_cmd->add_option("--out", dd_out, "Retained corpus JSONL")->required();
  dedup_cmd->add_option("--report", dd_report, "Duplicate-pair report JSONL");
  dedup_cmd->add_option("--threshold", dd_threshold,
                        "Similarity threshold in (0,1)")
      ->capture_default_str();
  dedup_cmd->add_option("--num-hashes", dd_params.num_hashes)
      ->capture_default_str();
  dedup_cmd->add_option("--bands", dd_params.lsh.bands)
      ->capture_default_str();
  dedup_cmd->add_option("--rows", dd_params.lsh.rows)->capture_default_str();
  dedup_cmd->add_option("--shingle-k", dd_params.shingle_k)
      ->capture_default_str();
  dedup_cmd->add_option("--seed", dd_params.seed, "MinHash family seed")
      ->capture_default_str();
  dedup_cmd->add_flag("--exact-verify", dd_params.exact_verify,
                      "Verify candidates with exact Jaccard");

  // --- mutate ---
  auto* mutate_cmd =
      app.add_subcommand("mutate", "Inject one functional bug per module");
  std::string mu_corpus;
  std::string mu_pattern;
  std::string mu_out;
  std::uint64_t mu_seed = 0;
  int mu_min_lines = 21;
  std::size_t mu_max_chars = 0;
  MutationOptions mu_options;
  mutate_cmd->add_option("--corpus", mu_corpus, "Corpus JSONL or directory")
      ->required();
  mutate_cmd
      ->add_option("--pattern", mu_pattern,
                   "operator|numeric|keyword|variable|edge|any")
      ->check(CLI::IsMember(
          {"operator", "numeric", "keyword", "variable", "edge", "any"}))
      ->required();
  mutate_cmd->add_option("--seed", mu_seed, "Deterministic run seed")
      ->required();
  mutate_cmd->add_option("--out", mu_out, "Mutant JSONL")->required();
  mutate_cmd->add_option("--min-lines", mu_min_lines)->capture_default_str();
  mutate_cmd->add_option("--max-chars", mu_max_chars,
                         "Skip modules longer than this many bytes (0 = off)");
  mutate_cmd->add_flag("--allow-cross-class-ops",
                       mu_options.allow_cross_class_ops,
                       "Permit bitwise<->logical operator swaps");
  mutate_cmd->add_flag("--numeric-random-values",
                       mu_options.numeric_random_values,
                       "Add hash-derived replacement values for literals");
  mutate_cmd->add_option("--synth-command", mu_options.synth_command,
                         "External legality hook; {} is the mutant path");

  // --- build-testset ---
  auto* ts_cmd = app.add_subcommand(
      "build-testset", "Testset with an exact per-pattern histogram");
  std::string ts_corpus;
  std::string ts_counts = "operator=25,numeric=26,variable=24,keyword=13,edge=14";
  std::string ts_out;
  std::uint64_t ts_seed = 0;
  int ts_min_lines = 21;
  std::size_t ts_max_chars = 0;
  MutationOptions ts_options;
  ts_cmd->add_option("--corpus", ts_corpus)->required();
  ts_cmd->add_option("--counts", ts_counts, "name=count list")
      ->capture_default_str();
  ts_cmd->add_option("--seed", ts_seed)->required();
  ts_cmd->add_option("--out", ts_out)->required();
  ts_cmd->add_option("--min-lines", ts_min_lines)->capture_default_str();
  ts_cmd->add_option("--max-chars", ts_max_chars,
                     "Skip modules longer than this many bytes (0 = off)");
  ts_cmd->add_flag("--numeric-random-values",
                   ts_options.numeric_random_values);
  ts_cmd->add_option("--synth-command", ts_options.synth_command);

  // --- build-pt ---
  auto* pt_cmd = app.add_subcommand(
      "build-pt", "Pretraining thought samples (f + d + b + r)");
  std::string pt_mutants;
  std::string pt_corpus;
  std::string pt_template;
  std::string pt_out;
  std::string pt_thoughts;
  std::size_t pt_max_chars = 0;
  GatewayFlags pt_gw;
  pt_cmd->add_option("--mutants", pt_mutants, "Mutant JSONL from `mutate`")
      ->required();
  pt_cmd->add_option("--corpus", pt_corpus, "Corpus with descriptions")
      ->required();
  pt_cmd->add_option("--template", pt_template,
                     "Thought prompt template file (built-in default)");
  pt_cmd->add_option("--out", pt_out)->required();
  pt_cmd->add_option("--thoughts-out", pt_thoughts,
                     "Per-record thought/validation log JSONL");
  pt_cmd->add_option("--max-sample-chars", pt_max_chars,
                     "Drop samples longer than this many bytes (0 = off)");
  pt_gw.attach(pt_cmd);

  // --- build-sft ---
  auto* sft_cmd = app.add_subcommand(
      "build-sft", "SFT pairs: prompt -> buggy line content");
  std::string sft_mutants;
  std::string sft_corpus;
  std::string sft_out;
  bool sft_numbered = false;
  std::size_t sft_max_chars = 0;
  sft_cmd->add_option("--mutants", sft_mutants)->required();
  sft_cmd->add_option("--corpus", sft_corpus)->required();
  sft_cmd->add_option("--out", sft_out)->required();
  sft_cmd->add_flag("--numbered-lines", sft_numbered,
                    "Prefix code lines with numbers in prompts");
  sft_cmd->add_option("--max-sample-chars", sft_max_chars,
                      "Drop samples longer than this many bytes (0 = off)");

  // --- build-simpo ---
  auto* simpo_cmd = app.add_subcommand(
      "build-simpo", "SimPO preference triples (prompt, chosen, rejected)");
  std::string sp_mutants;
  std::string sp_corpus;
  std::string sp_out;
  std::string sp_responses;
  int sp_n = 20;
  double sp_temperature = 0.7;
  std::uint64_t sp_seed = 0;
  bool sp_numbered = false;
  std::size_t sp_max_chars = 0;
  GatewayFlags sp_gw;
  simpo_cmd->add_option("--mutants", sp_mutants)->required();
  simpo_cmd->add_option("--corpus", sp_corpus)->required();
  simpo_cmd->add_option("--out", sp_out)->required();
  simpo_cmd->add_option("--responses-out", sp_responses,
                        "Raw model outputs JSONL");
  simpo_cmd->add_option("--n", sp_n, "Model outputs per record")
      ->capture_default_str();
  simpo_cmd->add_option("--temperature", sp_temperature)
      ->capture_default_str();
  simpo_cmd->add_option("--seed", sp_seed, "Fallback-pick seed")->required();
  simpo_cmd->add_flag("--numbered-lines", sp_numbered);
  simpo_cmd->add_option("--max-sample-chars", sp_max_chars,
                        "Drop samples longer than this many bytes (0 = off)");
  sp_gw.attach(simpo_cmd);

  // --- eval ---
  auto* eval_cmd =
      app.add_subcommand("eval", "Score a model on a testset (pass@k)");
  std::string ev_testset;
  std::string ev_responses;
  std::string ev_report;
  std::string ev_dump;
  std::string ev_line_lists;
  std::string ev_mode = "edit-distance";
  int ev_n = 20;
  double ev_temperature = 0.3;
  std::vector<int> ev_ks = {1, 5};
  GatewayFlags ev_gw;
  eval_cmd->add_option("--testset", ev_testset)->required();
  eval_cmd->add_option("--responses", ev_responses,
                       "Score precomputed responses instead of querying");
  eval_cmd->add_option("--report", ev_report, "Report JSON path");
  eval_cmd->add_option("--dump-responses", ev_dump,
                       "Write collected responses JSONL");
  eval_cmd->add_option("--line-lists", ev_line_lists,
                       "Hit-rate input: {case_id, lines|null} JSONL");
  eval_cmd->add_option("--mode", ev_mode, "edit-distance or substring")
      ->check(CLI::IsMember({"edit-distance", "substring"}))
      ->capture_default_str();
  eval_cmd->add_option("--n", ev_n)->capture_default_str();
  eval_cmd->add_option("--temperature", ev_temperature)
      ->capture_default_str();
  eval_cmd->add_option("--ks", ev_ks, "pass@k cutoffs")->delimiter(',');
  ev_gw.attach(eval_cmd);

  // --- sweep ---
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Evaluate across a temperature grid, one report per point");
  std::string sw_testset;
  std::string sw_out_dir = ".";
  std::string sw_mode = "edit-distance";
  int sw_n = 20;
  std::vector<double> sw_temps;
  std::vector<int> sw_ks = {1, 5};
  GatewayFlags sw_gw;
  sweep_cmd->add_option("--testset", sw_testset)->required();
  sweep_cmd->add_option("--temps", sw_temps, "Temperature grid")
      ->delimiter(',')
      ->required();
  sweep_cmd->add_option("--out-dir", sw_out_dir)->capture_default_str();
  sweep_cmd->add_option("--mode", sw_mode)
      ->check(CLI::IsMember({"edit-distance", "substring"}));
  sweep_cmd->add_option("--n", sw_n)->capture_default_str();
  sweep_cmd->add_option("--ks", sw_ks)->delimiter(',');
  sw_gw.attach(sweep_cmd);

  // --- simpo-score ---
  auto* score_cmd = app.add_subcommand(
      "simpo-score", "Margin/loss for preference pairs from log-probs");
  std::string sc_in;
  std::string sc_out;
  double sc_beta = 2.0;
  double sc_gamma = 1.0;
  score_cmd->add_option("--in", sc_in, "JSONL with chosen/rejected logprobs")
      ->required();
  score_cmd->add_option("--out", sc_out, "Per-pair scores JSONL (stdout if unset)");
  score_cmd->add_option("--beta", sc_beta)->capture_default_str();
  score_cmd->add_option("--gamma", sc_gamma)->capture_default_str();

  try {
    const std::string early_config = scan_config_path(argc, argv);
    if (!early_config.empty()) {
      std::ifstream in(early_config);
      if (!in) {
        throw CLI::ValidationError("--config",
                                   "cannot open config file: " + early_config);
      }
      json config = json::parse(in, nullptr, false);
      if (config.is_discarded() || !config.is_object()) {
        throw CLI::ValidationError(
            "--config", "config file is not a JSON object, e.g. "
                        "{\"mutate\": {\"seed\": 7}}");
      }
      for (CLI::App* sub :
           {dedup_cmd, mutate_cmd, ts_cmd, pt_cmd, sft_cmd, simpo_cmd,
            eval_cmd, sweep_cmd, score_cmd}) {
        if (config.contains(sub->get_name())) {
          apply_config_defaults(sub, config[sub->get_name()]);
        }
      }
    }
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*dedup_cmd) {
      dd_params.jobs = jobs;
      return cmd_dedup(dd_in, dd_out, dd_report, dd_threshold, dd_params);
    }
    if (*mutate_cmd) {
      return cmd_mutate(mu_corpus, mu_pattern, mu_seed, mu_out, mu_min_lines,
                        mu_max_chars, mu_options, jobs);
    }
    if (*ts_cmd) {
      return cmd_build_testset(ts_corpus, ts_counts, ts_seed, ts_out,
                               ts_min_lines, ts_max_chars, ts_options);
    }
    if (*pt_cmd) {
      return cmd_build_pt(pt_mutants, pt_corpus, pt_gw, pt_template, pt_out,
                          pt_thoughts, pt_max_chars, jobs);
    }
    if (*sft_cmd) {
      return cmd_build_sft(sft_mutants, sft_corpus, sft_out, sft_numbered,
                           sft_max_chars);
    }
    if (*simpo_cmd) {
      return cmd_build_simpo(sp_mutants, sp_corpus, sp_gw, sp_n,
                             sp_temperature, sp_seed, sp_out, sp_responses,
                             sp_max_chars, jobs, sp_numbered);
    }
    if (*eval_cmd) {
      return cmd_eval(ev_testset, ev_gw, ev_responses, ev_n, ev_temperature,
                      ev_ks, ev_mode, ev_report, ev_dump, ev_line_lists,
                      jobs);
    }
    if (*sweep_cmd) {
      return cmd_sweep(sw_testset, sw_gw, sw_n, sw_temps, sw_ks, sw_mode,
                       sw_out_dir, jobs);
    }
    if (*score_cmd) {
      return cmd_simpo_score(sc_in, sc_out, sc_beta, sc_gamma);
    }
  } catch (const AuthError& e) {
    std::cerr << "auth error: " << e.what() << "\n";
    return kExitExternal;
  } catch (const RateLimitedError& e) {
    std::cerr << "rate limited: " << e.what() << "\n";
    return kExitExternal;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kExitExternal;
  } catch (const ExternalToolError& e) {
    std::cerr << "external tool error: " << e.what() << "\n";
    return kExitExternal;
  } catch (const BatchError& e) {
    std::cerr << "batch failure: " << e.what() << "\n";
    return kExitExternal;
  } catch (const SchemaError& e) {
    std::cerr << e.path << ":" << e.line << ": " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
