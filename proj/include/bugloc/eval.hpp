#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bugloc/gateway.hpp"
#include "bugloc/mutation.hpp"

namespace bugloc {

struct ResponseSet {
  std::string case_id;
  std::vector<std::string> outputs;
  double temperature = 0.0;
};

struct CaseScore {
  std::string case_id;
  BugPattern pattern;
  int n;
  int c;
};

struct EvalReport {
  std::vector<CaseScore> per_case;
  std::map<int, double> pass_at;
  std::map<BugPattern, double> per_pattern_pass1;
  std::optional<double> hit_rate;
};

enum class ScoringMode {
  EditDistance,  // single-line answers located by minimum edit distance
  Substring,     // verbose answers: correct if the buggy line appears at all
};

// 1-based index of the non-blank code line with the smallest Levenshtein
// distance to the output, both sides whitespace-normalized; ties go to the
// smallest index. Throws AllLinesBlankError when no line is a candidate.
int locate_line(const std::string& output,
                const std::vector<std::string>& code_lines);

// Unbiased pass@k estimate from n samples with c correct:
//   1 - prod_{i=0}^{k-1} (n-c-i)/(n-i)
// which equals 1 - C(n-c,k)/C(n,k) without forming binomials.
double pass_at_k(int n, int c, int k);

int score_case(const TestCase& test_case, const ResponseSet& responses,
               ScoringMode mode = ScoringMode::EditDistance);

EvalReport aggregate(const std::vector<TestCase>& cases,
                     const std::vector<ResponseSet>& response_sets,
                     const std::vector<int>& ks,
                     ScoringMode mode = ScoringMode::EditDistance);

// Fraction of cases whose line list exists and contains the buggy line;
// absent lists count as misses. Zero cases yields 0.0 (degenerate input).
double hit_rate(
    const std::vector<TestCase>& cases,
    const std::map<std::string, std::optional<std::vector<int>>>& line_lists);

struct EvalRunConfig {
  int n = 20;
  double temperature = 0.3;
  std::vector<int> ks = {1, 5};
  ScoringMode mode = ScoringMode::EditDistance;
  unsigned jobs = 1;
  int max_tokens = 256;
};

struct EvalRunOutcome {
  EvalReport report;
  std::vector<ResponseSet> responses;               // successful cases only
  std::vector<std::pair<std::string, std::string>> failures;  // id, error
};

// Queries the model n times per case with the SFT-format prompt, scores and
// aggregates. Cases whose every query failed are excluded from the report
// and listed in failures.
EvalRunOutcome run_eval(const std::vector<TestCase>& cases, Gateway& gateway,
                        const EvalRunConfig& cfg);

}  // namespace bugloc
