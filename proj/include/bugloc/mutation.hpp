#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bugloc/verilog.hpp"

namespace bugloc {

// The five functional-bug classes injected by this toolkit.
enum class BugPattern {
  OperatorMisuse,
  NumericValue,
  KeywordMisuse,
  VariableConfusion,
  EdgeError,
};

constexpr std::array<BugPattern, 5> kAllPatterns = {
    BugPattern::OperatorMisuse, BugPattern::NumericValue,
    BugPattern::KeywordMisuse, BugPattern::VariableConfusion,
    BugPattern::EdgeError,
};

std::string_view pattern_name(BugPattern pattern);
std::optional<BugPattern> pattern_from_name(std::string_view name);

// A concrete place where one pattern can be applied: a byte span on one line
// plus the texts that may replace it. Spans never overlap comment or string
// tokens because sites are derived from non-comment, non-string tokens only.
struct MutationSite {
  int line;               // 1-based
  std::size_t col_start;  // byte offsets into the line, [start, end)
  std::size_t col_end;
  BugPattern pattern;
  std::vector<std::string> replacement_candidates;
};

struct MutationRecord {
  std::string module_id;
  BugPattern pattern;
  int line_no;
  std::string original_line;
  std::string mutated_line;
  std::uint64_t seed;
  std::string mutated_text;
};

struct MutationOptions {
  // Permit swaps across the bitwise/logical operator classes ({&,|} vs
  // {&&,||}). Off by default: within-class swaps never change operand arity.
  bool allow_cross_class_ops = false;
  // Adds hash-derived (still deterministic) replacement values for sized
  // literals instead of only +/-1 perturbations.
  bool numeric_random_values = false;
  // External legality hook; "{}" is replaced by the mutant's temp file path.
  // Exit code 0 accepts the mutant, any other exit rejects it.
  std::string synth_command;
};

struct LegalityReport {
  bool tokenizes = false;
  bool structure_ok = false;   // begin/end and module/endmodule counts
  bool identifier_ok = false;  // VariableConfusion target is declared
  bool tool_ok = false;        // synth_command verdict (true when unset)
  std::string detail;
};

std::vector<MutationSite> enumerate_sites(const SourceModule& module,
                                          BugPattern pattern,
                                          const MutationOptions& options = {});

// Picks a site, then a candidate, each uniformly with a generator seeded by
// `seed`; the result is reproducible for a fixed (module, pattern, seed).
// Throws NoSitesError when the pattern has no site in this module.
MutationRecord inject(const SourceModule& module, BugPattern pattern,
                      std::uint64_t seed, const MutationOptions& options = {});

// Static legality: the mutant re-tokenizes, block structure is intact and a
// VariableConfusion replacement is a declared identifier. When
// options.synth_command is set the external tool must also accept it.
bool legality_check(const MutationRecord& record, const SourceModule& original,
                    const MutationOptions& options = {},
                    LegalityReport* report = nullptr);

struct TestCase {
  std::string case_id;
  std::string design_description;
  std::string buggy_code;
  int buggy_line_no;
  std::string buggy_line;
  BugPattern pattern;
  std::string module_id;
};

// Builds a testset whose per-pattern histogram equals pattern_counts exactly.
// Sites are sampled without replacement across the corpus, so every emitted
// case is a distinct mutation. Throws InsufficientSitesError when a pattern
// cannot reach its requested count.
std::vector<TestCase> build_testset(
    const std::vector<std::pair<SourceModule, std::string>>& corpus,
    const std::map<BugPattern, std::size_t>& pattern_counts,
    std::uint64_t seed, const MutationOptions& options = {});

}  // namespace bugloc
