#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bugloc/gateway.hpp"
#include "bugloc/mutation.hpp"

namespace bugloc {

// The fixed instruction sentence f that opens every prompt and PT sample.
inline constexpr std::string_view kInstruction =
    "Find the buggy line in the Verilog code";

// Marker that closes a reasoning thought; validation extracts the answer
// after its last occurrence (case-insensitive).
inline constexpr std::string_view kAnswerMarker = "Buggy line:";

struct PtSample {
  std::string text;  // f + d + b + r joined by blank lines
};

struct SftSample {
  std::string prompt;  // f + d + b
  std::string label;   // content of the buggy line
};

struct SimpoSample {
  std::string prompt;
  std::string chosen;    // buggy line content
  std::string rejected;  // a non-buggy line content
};

struct ThoughtRecord {
  std::string thought_text;
  std::optional<std::string> extracted_line;
  bool valid = false;
};

// f, description and code concatenated with single blank-line separators;
// the prompt format shared by SFT samples, SimPO samples and evaluation.
std::string format_prompt(const std::string& description,
                          const std::string& code,
                          bool numbered_lines = false);

// Extracts the answer after the last "Buggy line:" marker and compares it,
// whitespace-normalized, with the buggy line. Thoughts that state the marker
// within their first 200 characters give the answer away and are invalid.
ThoughtRecord validate_thought(const std::string& thought_text,
                               const std::string& buggy_line);

// Throws InvalidThoughtError unless thought.valid.
PtSample build_pt_sample(const MutationRecord& record,
                         const std::string& description,
                         const ThoughtRecord& thought);

SftSample build_sft_sample(const MutationRecord& record,
                           const std::string& description,
                           bool numbered_lines = false);

// The most frequent non-buggy line among the model outputs (each mapped to a
// code line by locate_line), ties broken by smallest line number. When every
// output maps to the buggy line, a seeded uniform pick over the non-buggy,
// non-blank lines. Throws NoEligibleLineError when nothing can be picked.
std::string select_negative(const std::vector<std::string>& outputs,
                            const std::vector<std::string>& code_lines,
                            int buggy_line_no, std::uint64_t seed);

SimpoSample build_simpo_sample(const MutationRecord& record,
                               const std::string& description,
                               const std::vector<std::string>& outputs,
                               std::uint64_t seed,
                               bool numbered_lines = false);

// Built-in reasoning-thought prompt; any file with {description}, {code} and
// {buggy_line} placeholders can replace it.
const std::string& default_thought_template();

std::string render_template(const std::string& template_text,
                            const std::string& description,
                            const std::string& code,
                            const std::string& buggy_line);

struct ThoughtOutcome {
  std::optional<ThoughtRecord> thought;  // set when the gateway call worked
  std::string error;                     // set when it did not
};

struct GenerateOptions {
  unsigned max_in_flight = 4;
  double temperature = 0.7;
  int max_tokens = 2048;
};

// One gateway call per record; outcomes align with the input order. A
// failing item never aborts the batch; BatchError is raised only when every
// item failed.
std::vector<ThoughtOutcome> generate_thoughts(
    const std::vector<MutationRecord>& records,
    const std::map<std::string, std::string>& descriptions, Gateway& gateway,
    const std::string& template_text, const GenerateOptions& options = {});

}  // namespace bugloc
