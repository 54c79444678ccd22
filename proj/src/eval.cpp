#include "bugloc/eval.hpp"

#include <algorithm>
#include <unordered_map>

#include "bugloc/dataset.hpp"
#include "bugloc/parallel.hpp"
#include "bugloc/text.hpp"

namespace bugloc {

int locate_line(const std::string& output,
                const std::vector<std::string>& code_lines) {
  if (code_lines.empty()) throw AllLinesBlankError("no code lines given");
  const std::string needle = normalize_ws(output);

  int best_index = 0;
  std::size_t best_distance = 0;
  bool found = false;
  for (std::size_t i = 0; i < code_lines.size(); ++i) {
    const std::string line = normalize_ws(code_lines[i]);
    if (line.empty()) continue;  // blank lines are not candidates
    const std::size_t d = levenshtein(needle, line);
    if (!found || d < best_distance) {
      found = true;
      best_distance = d;
      best_index = static_cast<int>(i) + 1;
    }
  }
  if (!found) throw AllLinesBlankError("every code line is blank");
  return best_index;
}

double pass_at_k(int n, int c, int k) {
  if (n < 0 || c < 0 || c > n || k < 1 || k > n) {
    throw DomainError("pass_at_k requires 0 <= c <= n and 1 <= k <= n");
  }
  if (n - c < k) return 1.0;
  double miss = 1.0;
  for (int i = 0; i < k; ++i) {
    miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
  }
  return 1.0 - miss;
}

int score_case(const TestCase& test_case, const ResponseSet& responses,
               ScoringMode mode) {
  if (test_case.case_id != responses.case_id) {
    throw CaseMismatchError("case '" + test_case.case_id +
                            "' scored against responses for '" +
                            responses.case_id + "'");
  }
  int correct = 0;
  if (mode == ScoringMode::Substring) {
    const std::string target = normalize_ws(test_case.buggy_line);
    for (const std::string& output : responses.outputs) {
      if (normalize_ws(output).find(target) != std::string::npos) ++correct;
    }
    return correct;
  }
  const std::vector<std::string> lines = split_lines(test_case.buggy_code);
  for (const std::string& output : responses.outputs) {
    if (locate_line(output, lines) == test_case.buggy_line_no) ++correct;
  }
  return correct;
}

EvalReport aggregate(const std::vector<TestCase>& cases,
                     const std::vector<ResponseSet>& response_sets,
                     const std::vector<int>& ks, ScoringMode mode) {
  std::unordered_map<std::string, const ResponseSet*> by_id;
  for (const ResponseSet& rs : response_sets) by_id[rs.case_id] = &rs;

  EvalReport report;
  for (const TestCase& tc : cases) {
    auto it = by_id.find(tc.case_id);
    if (it == by_id.end()) {
      throw MissingResponsesError("no responses for case '" + tc.case_id +
                                  "'");
    }
    const ResponseSet& rs = *it->second;
    const int n = static_cast<int>(rs.outputs.size());
    const int c = score_case(tc, rs, mode);
    report.per_case.push_back(CaseScore{tc.case_id, tc.pattern, n, c});
  }

  for (int k : ks) {
    double sum = 0.0;
    for (const CaseScore& cs : report.per_case) {
      sum += pass_at_k(cs.n, cs.c, k);
    }
    report.pass_at[k] =
        report.per_case.empty() ? 0.0 : sum / report.per_case.size();
  }

  std::map<BugPattern, std::pair<double, int>> by_pattern;
  for (const CaseScore& cs : report.per_case) {
    auto& [sum, count] = by_pattern[cs.pattern];
    sum += pass_at_k(cs.n, cs.c, 1);
    ++count;
  }
  for (const auto& [pattern, acc] : by_pattern) {
    report.per_pattern_pass1[pattern] = acc.first / acc.second;
  }
  return report;
}

double hit_rate(
    const std::vector<TestCase>& cases,
    const std::map<std::string, std::optional<std::vector<int>>>& line_lists) {
  if (cases.empty()) return 0.0;
  std::size_t hits = 0;
  for (const TestCase& tc : cases) {
    auto it = line_lists.find(tc.case_id);
    if (it == line_lists.end() || !it->second) continue;  // counts as a miss
    const auto& lines = *it->second;
    if (std::find(lines.begin(), lines.end(), tc.buggy_line_no) !=
        lines.end()) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(cases.size());
}

EvalRunOutcome run_eval(const std::vector<TestCase>& cases, Gateway& gateway,
                        const EvalRunConfig& cfg) {
  if (cfg.n < 1) throw DomainError("n must be >= 1");
  for (int k : cfg.ks) {
    if (k > cfg.n) {
      throw DomainError("pass@" + std::to_string(k) + " needs n >= " +
                        std::to_string(k));
    }
  }

  struct Slot {
    bool ok = false;
    ResponseSet responses;
    std::string error;
  };
  std::vector<Slot> slots(cases.size());

  parallel_for(cases.size(), cfg.jobs, [&](std::size_t i) {
    const TestCase& tc = cases[i];
    ChatRequest req;
    req.user = format_prompt(tc.design_description, tc.buggy_code);
    req.temperature = cfg.temperature;
    req.max_tokens = cfg.max_tokens;
    req.n = cfg.n;
    try {
      Slot& slot = slots[i];
      slot.responses.case_id = tc.case_id;
      slot.responses.temperature = cfg.temperature;
      slot.responses.outputs = gateway.complete(req);
      slot.ok = true;
    } catch (const Error& e) {
      slots[i].error = e.what();
    }
  });

  EvalRunOutcome outcome;
  std::vector<TestCase> scored_cases;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (slots[i].ok) {
      scored_cases.push_back(cases[i]);
      outcome.responses.push_back(std::move(slots[i].responses));
    } else {
      outcome.failures.emplace_back(cases[i].case_id, slots[i].error);
    }
  }
  if (!cases.empty() && scored_cases.empty()) {
    throw BatchError("every case failed: " + outcome.failures.front().second);
  }
  outcome.report = aggregate(scored_cases, outcome.responses, cfg.ks,
                             cfg.mode);
  return outcome;
}

}  // namespace bugloc
