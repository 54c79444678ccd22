#include "bugloc/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "bugloc/eval.hpp"
#include "bugloc/parallel.hpp"
#include "bugloc/rng.hpp"
#include "bugloc/text.hpp"

namespace bugloc {

namespace {

std::size_t find_last_marker(const std::string& haystack) {
  // case-insensitive search for the last occurrence of kAnswerMarker
  if (haystack.size() < kAnswerMarker.size()) return std::string::npos;
  for (std::size_t start = haystack.size() - kAnswerMarker.size() + 1;
       start-- > 0;) {
    bool hit = true;
    for (std::size_t i = 0; i < kAnswerMarker.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(haystack[start + i])) !=
          std::tolower(static_cast<unsigned char>(kAnswerMarker[i]))) {
        hit = false;
        break;
      }
    }
    if (hit) return start;
  }
  return std::string::npos;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string format_prompt(const std::string& description,
                          const std::string& code, bool numbered_lines) {
  std::string body = code;
  if (numbered_lines) {
    body.clear();
    const auto lines = split_lines(code);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i) body.push_back('\n');
      body += std::to_string(i + 1) + ": " + lines[i];
    }
  }
  return std::string(kInstruction) + "\n\n" + description + "\n\n" + body;
}

ThoughtRecord validate_thought(const std::string& thought_text,
                               const std::string& buggy_line) {
  ThoughtRecord record;
  record.thought_text = thought_text;

  const std::size_t marker = find_last_marker(thought_text);
  if (marker == std::string::npos) return record;

  record.extracted_line =
      trim(std::string_view(thought_text).substr(marker +
                                                 kAnswerMarker.size()));
  if (record.extracted_line->empty()) {
    record.extracted_line.reset();
    return record;
  }

  // a thought that opens with the answer is not a reasoning process
  const bool opens_with_answer =
      find_last_marker(thought_text.substr(0, 200)) != std::string::npos;

  record.valid = !opens_with_answer &&
                 normalize_ws(*record.extracted_line) ==
                     normalize_ws(buggy_line);
  return record;
}

PtSample build_pt_sample(const MutationRecord& record,
                         const std::string& description,
                         const ThoughtRecord& thought) {
  if (!thought.valid) {
    throw InvalidThoughtError("thought for module '" + record.module_id +
                              "' did not validate");
  }
  PtSample sample;
  sample.text = std::string(kInstruction) + "\n\n" + description + "\n\n" +
                record.mutated_text + "\n\n" + thought.thought_text;
  return sample;
}

SftSample build_sft_sample(const MutationRecord& record,
                           const std::string& description,
                           bool numbered_lines) {
  SftSample sample;
  sample.prompt =
      format_prompt(description, record.mutated_text, numbered_lines);
  sample.label = rtrim(record.mutated_line);
  return sample;
}

std::string select_negative(const std::vector<std::string>& outputs,
                            const std::vector<std::string>& code_lines,
                            int buggy_line_no, std::uint64_t seed) {
  if (outputs.empty()) throw DomainError("outputs must be non-empty");
  if (code_lines.size() < 2) {
    throw NoEligibleLineError("code has fewer than two lines");
  }
  const std::string buggy_norm =
      buggy_line_no >= 1 &&
              buggy_line_no <= static_cast<int>(code_lines.size())
          ? normalize_ws(code_lines[static_cast<std::size_t>(buggy_line_no) -
                                    1])
          : std::string();

  // a line "is the buggy line" if it has its index or identical content
  auto is_buggy = [&](int line_no) {
    if (line_no == buggy_line_no) return true;
    return normalize_ws(code_lines[static_cast<std::size_t>(line_no) - 1]) ==
           buggy_norm;
  };

  std::map<int, int> votes;  // ordered so ties resolve to the smallest line
  for (const std::string& output : outputs) {
    const int located = locate_line(output, code_lines);
    if (!is_buggy(located)) ++votes[located];
  }

  int candidate = 0;
  int best = 0;
  for (const auto& [line_no, count] : votes) {
    if (count > best) {
      best = count;
      candidate = line_no;
    }
  }
  if (candidate != 0) {
    return rtrim(code_lines[static_cast<std::size_t>(candidate) - 1]);
  }

  // every output hit the buggy line: pick a random non-buggy, non-blank line
  std::vector<int> eligible;
  for (int line_no = 1; line_no <= static_cast<int>(code_lines.size());
       ++line_no) {
    if (is_buggy(line_no)) continue;
    if (normalize_ws(code_lines[static_cast<std::size_t>(line_no) - 1])
            .empty()) {
      continue;
    }
    eligible.push_back(line_no);
  }
  if (eligible.empty()) {
    throw NoEligibleLineError(
        "code consists solely of the buggy line and blanks");
  }
  Xoshiro256ss rng(seed);
  const int pick = eligible[rng.bounded(eligible.size())];
  return rtrim(code_lines[static_cast<std::size_t>(pick) - 1]);
}

SimpoSample build_simpo_sample(const MutationRecord& record,
                               const std::string& description,
                               const std::vector<std::string>& outputs,
                               std::uint64_t seed, bool numbered_lines) {
  SimpoSample sample;
  sample.prompt =
      format_prompt(description, record.mutated_text, numbered_lines);
  sample.chosen = rtrim(record.mutated_line);
  sample.rejected = select_negative(outputs, split_lines(record.mutated_text),
                                    record.line_no, seed);
  return sample;
}

const std::string& default_thought_template() {
  static const std::string kTemplate =
      "The following Verilog module contains exactly one functional bug.\n"
      "\n"
      "Design description:\n"
      "{description}\n"
      "\n"
      "Buggy code:\n"
      "{code}\n"
      "\n"
      "The buggy line is known to be:\n"
      "{buggy_line}\n"
      "\n"
      "Write a step-by-step reasoning process that locates this bug as if "
      "the location were unknown in advance. Analyze the code from front to "
      "back against the design description; do not mention or assume the "
      "buggy line at the start, and let the reasoning arrive at it. Close "
      "with exactly one final line of the form:\n"
      "Buggy line: <content of the located line>\n";
  return kTemplate;
}

std::string render_template(const std::string& template_text,
                            const std::string& description,
                            const std::string& code,
                            const std::string& buggy_line) {
  std::string out = template_text;
  const std::pair<std::string, const std::string*> subs[] = {
      {"{description}", &description},
      {"{code}", &code},
      {"{buggy_line}", &buggy_line},
  };
  for (const auto& [key, value] : subs) {
    std::size_t pos = 0;
    while ((pos = out.find(key, pos)) != std::string::npos) {
      out.replace(pos, key.size(), *value);
      pos += value->size();
    }
  }
  return out;
}

std::vector<ThoughtOutcome> generate_thoughts(
    const std::vector<MutationRecord>& records,
    const std::map<std::string, std::string>& descriptions, Gateway& gateway,
    const std::string& template_text, const GenerateOptions& options) {
  std::vector<ThoughtOutcome> outcomes(records.size());

  parallel_for(records.size(), options.max_in_flight, [&](std::size_t i) {
    const MutationRecord& record = records[i];
    auto it = descriptions.find(record.module_id);
    const std::string description =
        it == descriptions.end() ? std::string() : it->second;

    ChatRequest req;
    req.user = render_template(template_text, description,
                               record.mutated_text, record.mutated_line);
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;
    req.n = 1;
    try {
      const std::vector<std::string> texts = gateway.complete(req);
      outcomes[i].thought =
          validate_thought(texts.at(0), record.mutated_line);
    } catch (const Error& e) {
      outcomes[i].error = e.what();
    }
  });

  if (!records.empty()) {
    const bool all_failed =
        std::all_of(outcomes.begin(), outcomes.end(),
                    [](const ThoughtOutcome& o) { return !o.thought; });
    if (all_failed) {
      throw BatchError("thought generation failed for every record: " +
                       outcomes.front().error);
    }
  }
  return outcomes;
}

}  // namespace bugloc
