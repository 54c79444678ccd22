#include "bugloc/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "bugloc/eval.hpp"
#include "bugloc/text.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bugloc;

namespace {

MutationRecord sample_record() {
  const SourceModule m = test::fixture_module("counter8");
  return inject(m, BugPattern::OperatorMisuse, 11);
}

const std::string kDescription = "An 8-bit counter with clear and enable.";

}  // namespace

TEST_CASE("validate_thought: exact final answer validates") {
  const std::string thought =
      "Walking through the module, the reset arm assigns zero, which is "
      "what the description asks for, and the clear arm repeats the same "
      "value through a different literal, also fine. The increment arm is "
      "supposed to add one on enable, but it subtracts instead, which "
      "contradicts the description of an up counter. That arm holds the "
      "defect.\n"
      "Buggy line: count <= count - 8'd1;";
  const ThoughtRecord r =
      validate_thought(thought, "      count <= count - 8'd1;");
  CHECK(r.valid);
  CHECK(r.extracted_line == "count <= count - 8'd1;");
}

TEST_CASE("validate_thought: missing marker is invalid") {
  const ThoughtRecord r = validate_thought("no formal answer here", "x;");
  CHECK(!r.valid);
  CHECK(!r.extracted_line.has_value());
}

TEST_CASE("validate_thought: wrong final line is invalid") {
  const ThoughtRecord r = validate_thought(
      "Some analysis that goes on for a while before concluding with the "
      "formal answer as requested, long enough to pass the opening check.\n"
      "Buggy line: assign q = d;",
      "assign q = e;");
  CHECK(!r.valid);
  CHECK(r.extracted_line == "assign q = d;");
}

TEST_CASE("validate_thought: stating the answer up front is invalid") {
  const ThoughtRecord r = validate_thought(
      "Buggy line: assign q = d;\nNow let me rationalize that claim with "
      "some analysis text.\nBuggy line: assign q = d;",
      "assign q = d;");
  CHECK(!r.valid);
}

TEST_CASE("validate_thought: last marker wins and match is case-insensitive") {
  std::string thought(220, '.');  // push markers past the opening window
  thought += "\nIntermediate guess\nbuggy line: wrong one\n";
  thought += "Revised conclusion\nBUGGY LINE:   assign y =  a & b;  ";
  const ThoughtRecord r = validate_thought(thought, "assign y = a & b;");
  CHECK(r.valid);
}

TEST_CASE("validate_thought: padding the reference never flips validity") {
  std::string thought(210, 'x');
  thought += "\nBuggy line: wire q;";
  const std::string base = "wire q;";
  const ThoughtRecord plain = validate_thought(thought, base);
  REQUIRE(plain.valid);
  for (const std::string padded :
       {"  wire q;", "wire q;   ", "\twire  q;\t", "  wire   q;  "}) {
    CHECK(validate_thought(thought, padded).valid == plain.valid);
  }
}

TEST_CASE("build_pt_sample: four parts joined by blank lines") {
  const MutationRecord record = sample_record();
  std::string thought_text(210, 'y');
  thought_text += "\nBuggy line: " + record.mutated_line;
  const ThoughtRecord thought =
      validate_thought(thought_text, record.mutated_line);
  REQUIRE(thought.valid);

  const PtSample pt = build_pt_sample(record, kDescription, thought);
  CHECK(pt.text.rfind("Find the buggy line in the Verilog code", 0) == 0);
  CHECK(pt.text.find(record.mutated_text) != std::string::npos);
  CHECK(pt.text.find(kDescription) != std::string::npos);
  CHECK(pt.text.substr(pt.text.size() - thought.thought_text.size()) ==
        thought.thought_text);

  // determinism
  CHECK(build_pt_sample(record, kDescription, thought).text == pt.text);

  ThoughtRecord bad;
  bad.thought_text = "nope";
  CHECK_THROWS_AS(build_pt_sample(record, kDescription, bad),
                  InvalidThoughtError);
}

TEST_CASE("build_sft_sample: label is the buggy line content, not a number") {
  const MutationRecord record = sample_record();
  const SftSample sft = build_sft_sample(record, kDescription);
  CHECK(sft.label == rtrim(record.mutated_line));
  CHECK(!sft.label.empty());
  // never a bare line number
  CHECK(sft.label.find_first_not_of("0123456789") != std::string::npos);
  CHECK(sft.prompt.find(record.mutated_text) != std::string::npos);
  CHECK(sft.prompt.rfind("Find the buggy line in the Verilog code", 0) == 0);

  // the label appears verbatim as a line of the code inside the prompt
  bool found = false;
  for (const std::string& line : split_lines(sft.prompt)) {
    found |= rtrim(line) == sft.label;
  }
  CHECK(found);
}

TEST_CASE("build_sft_sample: optional line numbering") {
  const MutationRecord record = sample_record();
  const SftSample numbered = build_sft_sample(record, kDescription, true);
  CHECK(numbered.prompt.find("1: ") != std::string::npos);
  CHECK(numbered.label == rtrim(record.mutated_line));
}

TEST_CASE("select_negative: most frequent non-buggy line wins") {
  const std::vector<std::string> code = {"wire a;", "wire b;", "wire c;",
                                         "assign a = b;", "assign b = c;",
                                         "assign c = a;", "endmodule"};
  // outputs map to lines 4, 7, 7, 2; buggy line is 4
  const std::vector<std::string> outputs = {"assign a = b;", "endmodule",
                                            "endmodule", "wire b;"};
  CHECK(select_negative(outputs, code, 4, 1) == "endmodule");
}

TEST_CASE("select_negative: frequency ties break to the smallest line") {
  const std::vector<std::string> code = {"wire a;", "wire b;", "wire c;",
                                         "assign a = b & c;"};
  const std::vector<std::string> outputs = {"wire c;", "wire b;"};
  // one vote each for lines 2 and 3 -> line 2 wins
  CHECK(select_negative(outputs, code, 4, 9) == "wire b;");
}

TEST_CASE("select_negative: all-correct outputs fall back to a seeded pick") {
  const std::vector<std::string> code = {"wire a;", "wire b;", "",
                                         "assign a = b;"};
  const std::vector<std::string> outputs = {"assign a = b;", "assign a = b;"};
  const std::string first = select_negative(outputs, code, 4, 42);
  CHECK(select_negative(outputs, code, 4, 42) == first);  // deterministic
  CHECK(first != "assign a = b;");
  CHECK(!first.empty());
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    seen.insert(select_negative(outputs, code, 4, seed));
  }
  // both non-buggy, non-blank lines get picked across seeds
  CHECK(seen == std::set<std::string>{"wire a;", "wire b;"});
}

TEST_CASE("select_negative: degenerate code raises NoEligibleLine") {
  const std::vector<std::string> code = {"", "assign a = b;", "   "};
  const std::vector<std::string> outputs = {"assign a = b;"};
  CHECK_THROWS_AS(select_negative(outputs, code, 2, 1), NoEligibleLineError);
  CHECK_THROWS_AS(select_negative({}, code, 2, 1), DomainError);
}

TEST_CASE("build_simpo_sample: chosen and rejected are distinct prompt lines") {
  const MutationRecord record = sample_record();
  const std::vector<std::string> outputs = {record.mutated_line,
                                            record.mutated_line};
  const SimpoSample sample =
      build_simpo_sample(record, kDescription, outputs, 5);
  CHECK(sample.chosen == rtrim(record.mutated_line));
  CHECK(sample.chosen != sample.rejected);

  std::set<std::string> prompt_lines;
  for (const std::string& line : split_lines(sample.prompt)) {
    prompt_lines.insert(rtrim(line));
  }
  CHECK(prompt_lines.count(sample.chosen) == 1);
  CHECK(prompt_lines.count(sample.rejected) == 1);

  // same inputs + seed -> identical sample
  const SimpoSample again =
      build_simpo_sample(record, kDescription, outputs, 5);
  CHECK(again.prompt == sample.prompt);
  CHECK(again.rejected == sample.rejected);
}

TEST_CASE("select_negative never returns the buggy line (property)") {
  const MutationRecord record = sample_record();
  const auto code = split_lines(record.mutated_text);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::string rejected =
        select_negative({record.mutated_line}, code, record.line_no, seed);
    CHECK(rejected != rtrim(record.mutated_line));
  }
}

TEST_CASE("render_template: placeholder substitution") {
  const std::string out = render_template(
      "D={description} C={code} L={buggy_line} L2={buggy_line}", "desc",
      "code body", "the line");
  CHECK(out == "D=desc C=code body L=the line L2=the line");
  CHECK(default_thought_template().find("{description}") !=
        std::string::npos);
  CHECK(default_thought_template().find("{code}") != std::string::npos);
  CHECK(default_thought_template().find("{buggy_line}") != std::string::npos);
}

TEST_CASE("generate_thoughts: scripted mock end to end") {
  const SourceModule m = test::fixture_module("gray_counter");
  std::vector<MutationRecord> records;
  std::set<std::string> distinct;
  for (std::uint64_t seed = 0; records.size() < 3; ++seed) {
    MutationRecord record = inject(m, BugPattern::NumericValue, seed);
    if (distinct.insert(record.mutated_line).second) {
      records.push_back(std::move(record));
    }
  }
  std::map<std::string, std::string> descriptions = {
      {"gray_counter", "A gray-code counter."}};

  const auto transcript =
      std::filesystem::temp_directory_path() / "bugloc_ds_gen.jsonl";
  {
    std::ofstream out(transcript);
    // answer every prompt with a valid thought for record 0's buggy line
    std::string thought(210, 'z');
    thought += "\nBuggy line: " + records[0].mutated_line;
    out << json{{"match", ""}, {"responses", {thought}}}.dump() << "\n";
  }
  Gateway gateway = Gateway::with_mock(transcript);
  const auto outcomes = generate_thoughts(records, descriptions, gateway,
                                          default_thought_template());
  REQUIRE(outcomes.size() == 3);
  for (const auto& outcome : outcomes) {
    REQUIRE(outcome.thought.has_value());
  }
  CHECK(outcomes[0].thought->valid);
  // records 1 and 2 got record 0's answer, which cannot match theirs
  CHECK(!outcomes[1].thought->valid);
  CHECK(!outcomes[2].thought->valid);
  std::filesystem::remove(transcript);
}

TEST_CASE("generate_thoughts: per-item failures never abort the batch") {
  const SourceModule m = test::fixture_module("clk_div");
  std::vector<MutationRecord> records;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    records.push_back(inject(m, BugPattern::VariableConfusion, seed));
  }
  // 7 records get a permanently failing entry, matched via their distinct
  // buggy line in the rendered prompt; everything else succeeds
  std::vector<json> entries;
  std::set<std::string> failing_lines;
  for (std::size_t i = 0; i < records.size() && failing_lines.size() < 7;
       ++i) {
    if (failing_lines.insert(records[i].mutated_line).second) {
      entries.push_back(json{{"match",
                              "known to be:\n" + records[i].mutated_line},
                             {"responses", {"x"}},
                             {"fail_times", 1000000},
                             {"fail_status", 0}});
    }
  }
  std::string good(210, 'g');
  good += "\nBuggy line: unrelated";
  entries.push_back(json{{"match", ""}, {"responses", {good}}});

  const auto transcript =
      std::filesystem::temp_directory_path() / "bugloc_ds_fail.jsonl";
  {
    std::ofstream out(transcript);
    for (const json& e : entries) out << e.dump() << "\n";
  }
  EndpointConfig cfg;
  cfg.max_retries = 0;
  cfg.backoff_base_s = 0.0;
  Gateway gateway = Gateway::with_mock(transcript, cfg);

  const auto outcomes =
      generate_thoughts(records, {}, gateway, default_thought_template());
  std::size_t ok = 0;
  std::size_t failed = 0;
  for (const auto& outcome : outcomes) {
    if (outcome.thought) {
      ++ok;
    } else {
      ++failed;
      CHECK(!outcome.error.empty());
    }
  }
  // every record whose buggy line matched a failing entry errors out
  std::size_t expected_failures = 0;
  for (const auto& record : records) {
    if (failing_lines.count(record.mutated_line)) ++expected_failures;
  }
  CHECK(failed == expected_failures);
  CHECK(ok == 100 - expected_failures);
  CHECK(failed >= 7);
  std::filesystem::remove(transcript);
}

TEST_CASE("generate_thoughts: all items failing raises BatchError") {
  const SourceModule m = test::fixture_module("sat_add");
  const std::vector<MutationRecord> records = {
      inject(m, BugPattern::OperatorMisuse, 1)};
  const auto transcript =
      std::filesystem::temp_directory_path() / "bugloc_ds_all_fail.jsonl";
  {
    std::ofstream out(transcript);
    out << json{{"match", ""},
                {"responses", {"x"}},
                {"fail_times", 1000000}}
               .dump()
        << "\n";
  }
  EndpointConfig cfg;
  cfg.max_retries = 0;
  cfg.backoff_base_s = 0.0;
  Gateway gateway = Gateway::with_mock(transcript, cfg);
  CHECK_THROWS_AS(
      generate_thoughts(records, {}, gateway, default_thought_template()),
      BatchError);
  std::filesystem::remove(transcript);
}
