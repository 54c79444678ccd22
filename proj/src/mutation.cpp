#include "bugloc/mutation.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_map>

#include "bugloc/rng.hpp"
#include "bugloc/text.hpp"

namespace bugloc {

namespace {

// --- based-literal helpers -------------------------------------------------

struct BasedLiteral {
  std::string width_digits;  // empty when unsized
  bool is_signed = false;
  char base_char = 'd';
  std::string value_digits;  // as written, may contain _ x z ?
};

int base_radix(char base_char) {
  switch (std::tolower(static_cast<unsigned char>(base_char))) {
    case 'b': return 2;
    case 'o': return 8;
    case 'd': return 10;
    case 'h': return 16;
    default: return 0;
  }
}

std::optional<BasedLiteral> parse_based_literal(std::string_view lexeme) {
  BasedLiteral lit;
  std::size_t i = 0;
  while (i < lexeme.size() &&
         (std::isdigit(static_cast<unsigned char>(lexeme[i])) ||
          lexeme[i] == '_')) {
    if (lexeme[i] != '_') lit.width_digits.push_back(lexeme[i]);
    ++i;
  }
  if (i >= lexeme.size() || lexeme[i] != '\'') return std::nullopt;
  ++i;
  if (i < lexeme.size() && (lexeme[i] == 's' || lexeme[i] == 'S')) {
    lit.is_signed = true;
    ++i;
  }
  if (i >= lexeme.size() || base_radix(lexeme[i]) == 0) return std::nullopt;
  lit.base_char = lexeme[i];
  ++i;
  if (i >= lexeme.size()) return std::nullopt;
  lit.value_digits = std::string(lexeme.substr(i));
  return lit;
}

int digit_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

char value_digit(int v, bool uppercase) {
  if (v < 10) return static_cast<char>('0' + v);
  return static_cast<char>((uppercase ? 'A' : 'a') + v - 10);
}

// Exact +/-1 on a digit string in the given radix; no overflow concerns.
std::string digits_increment(std::string digits, int radix, bool uppercase) {
  int carry = 1;
  for (std::size_t i = digits.size(); i-- > 0 && carry;) {
    int v = digit_value(digits[i]) + carry;
    carry = v / radix;
    digits[i] = value_digit(v % radix, uppercase);
  }
  if (carry) digits.insert(digits.begin(), '1');
  return digits;
}

std::optional<std::string> digits_decrement(std::string digits, int radix,
                                            bool uppercase) {
  bool all_zero = std::all_of(digits.begin(), digits.end(),
                              [](char c) { return c == '0'; });
  if (all_zero) return std::nullopt;
  int borrow = 1;
  for (std::size_t i = digits.size(); i-- > 0 && borrow;) {
    int v = digit_value(digits[i]) - borrow;
    borrow = v < 0 ? 1 : 0;
    if (v < 0) v += radix;
    digits[i] = value_digit(v, uppercase);
  }
  return digits;
}

std::string pad_to(std::string digits, std::size_t width) {
  while (digits.size() < width) digits.insert(digits.begin(), '0');
  return digits;
}

std::string render_literal(const BasedLiteral& lit, std::string_view width,
                           std::string_view value) {
  std::string out;
  out.append(width);
  out.push_back('\'');
  if (lit.is_signed) out.push_back('s');
  out.push_back(lit.base_char);
  out.append(value);
  return out;
}

std::optional<std::uint64_t> parse_decimal(std::string_view digits) {
  if (digits.empty() || digits.size() > 18) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

bool is_plain_decimal(std::string_view lexeme) {
  return !lexeme.empty() &&
         std::all_of(lexeme.begin(), lexeme.end(), [](char c) {
           return std::isdigit(static_cast<unsigned char>(c));
         });
}

// --- site enumeration ------------------------------------------------------

void push_site(std::vector<MutationSite>& sites, const Token& tok,
               BugPattern pattern, std::vector<std::string> candidates) {
  if (candidates.empty()) return;
  MutationSite site;
  site.line = tok.line;
  site.col_start = static_cast<std::size_t>(tok.col - 1);
  site.col_end = site.col_start + tok.lexeme.size();
  site.pattern = pattern;
  site.replacement_candidates = std::move(candidates);
  sites.push_back(std::move(site));
}

void operator_sites(const SourceModule& module, const MutationOptions& options,
                    std::vector<MutationSite>& sites) {
  static const std::unordered_map<std::string, std::string> kSiblings = {
      {"+", "-"},   {"-", "+"},   {"&", "|"},   {"|", "&"},
      {"&&", "||"}, {"||", "&&"}, {"<", ">"},   {">", "<"},
      {"==", "!="}, {"!=", "=="}, {"<<", ">>"}, {">>", "<<"},
      {">=", "<="},
  };
  static const std::vector<std::string> kJunction = {"&", "|", "&&", "||"};

  int paren = 0;
  for (const Token& tok : module.tokens) {
    if (tok.kind == TokenKind::Punctuation) {
      if (tok.lexeme == "(") ++paren;
      else if (tok.lexeme == ")") --paren;
      continue;
    }
    if (tok.kind != TokenKind::Operator) continue;

    std::vector<std::string> candidates;
    if (tok.lexeme == "<=") {
      // "<=" doubles as the non-blocking assignment; only the parenthesized
      // occurrences (if/while/ternary conditions) are treated as comparisons.
      if (paren > 0) candidates.push_back(">=");
    } else if (options.allow_cross_class_ops &&
               std::find(kJunction.begin(), kJunction.end(), tok.lexeme) !=
                   kJunction.end()) {
      for (const auto& op : kJunction) {
        if (op != tok.lexeme) candidates.push_back(op);
      }
    } else if (auto it = kSiblings.find(tok.lexeme); it != kSiblings.end()) {
      candidates.push_back(it->second);
    }
    push_site(sites, tok, BugPattern::OperatorMisuse, std::move(candidates));
  }
}

void numeric_sites(const SourceModule& module, const MutationOptions& options,
                   std::vector<MutationSite>& sites) {
  const auto& tokens = module.tokens;

  // sized/based literals: perturb width or value
  for (const Token& tok : tokens) {
    if (tok.kind != TokenKind::Number) continue;
    auto lit = parse_based_literal(tok.lexeme);
    if (!lit) continue;

    std::vector<std::string> candidates;
    std::string clean_value;
    for (char c : lit->value_digits) {
      if (c != '_') clean_value.push_back(c);
    }
    const bool uppercase =
        std::any_of(clean_value.begin(), clean_value.end(), [](char c) {
          return c >= 'A' && c <= 'F';
        });
    const int radix = base_radix(lit->base_char);
    const bool value_is_clean =
        !clean_value.empty() &&
        std::all_of(clean_value.begin(), clean_value.end(),
                    [&](char c) { return digit_value(c) >= 0 &&
                                         digit_value(c) < radix; });

    if (!lit->width_digits.empty()) {
      if (auto w = parse_decimal(lit->width_digits)) {
        if (*w > 1) {
          candidates.push_back(render_literal(*lit, std::to_string(*w - 1),
                                              lit->value_digits));
        }
        candidates.push_back(render_literal(*lit, std::to_string(*w + 1),
                                            lit->value_digits));
      }
    }
    if (value_is_clean) {
      if (auto dec = digits_decrement(clean_value, radix, uppercase)) {
        candidates.push_back(render_literal(
            *lit, lit->width_digits, pad_to(*dec, clean_value.size())));
      }
      candidates.push_back(render_literal(
          *lit, lit->width_digits,
          pad_to(digits_increment(clean_value, radix, uppercase),
                 clean_value.size())));
      if (options.numeric_random_values) {
        // deterministic pseudo-random value derived from the literal itself
        std::uint64_t h = mix64(fnv1a64(tok.lexeme));
        std::string digits;
        std::size_t want = clean_value.size();
        while (digits.size() < want) {
          digits.push_back(value_digit(static_cast<int>(h % radix), uppercase));
          h = mix64(h);
        }
        std::string cand = render_literal(*lit, lit->width_digits, digits);
        if (cand != tok.lexeme) candidates.push_back(std::move(cand));
      }
    }
    // drop any candidate identical to the original span
    candidates.erase(
        std::remove(candidates.begin(), candidates.end(), tok.lexeme),
        candidates.end());
    push_site(sites, tok, BugPattern::NumericValue, std::move(candidates));
  }

  // range bounds [msb:lsb] with plain decimal bounds
  for (std::size_t i = 0; i + 4 < tokens.size(); ++i) {
    const Token& lb = tokens[i];
    const Token& msb_tok = tokens[i + 1];
    const Token& colon = tokens[i + 2];
    const Token& lsb_tok = tokens[i + 3];
    const Token& rb = tokens[i + 4];
    if (lb.kind != TokenKind::Punctuation || lb.lexeme != "[") continue;
    if (msb_tok.kind != TokenKind::Number ||
        !is_plain_decimal(msb_tok.lexeme)) continue;
    if (colon.kind != TokenKind::Punctuation || colon.lexeme != ":") continue;
    if (lsb_tok.kind != TokenKind::Number ||
        !is_plain_decimal(lsb_tok.lexeme)) continue;
    if (rb.kind != TokenKind::Punctuation || rb.lexeme != "]") continue;

    auto msb = parse_decimal(msb_tok.lexeme);
    auto lsb = parse_decimal(lsb_tok.lexeme);
    if (!msb || !lsb || *msb < *lsb) continue;

    std::vector<std::string> msb_cands;
    if (*msb > 0 && *msb - 1 >= *lsb) {
      msb_cands.push_back(std::to_string(*msb - 1));
    }
    msb_cands.push_back(std::to_string(*msb + 1));
    push_site(sites, msb_tok, BugPattern::NumericValue, std::move(msb_cands));

    std::vector<std::string> lsb_cands;
    if (*lsb > 0) lsb_cands.push_back(std::to_string(*lsb - 1));
    if (*lsb + 1 <= *msb) lsb_cands.push_back(std::to_string(*lsb + 1));
    push_site(sites, lsb_tok, BugPattern::NumericValue, std::move(lsb_cands));
  }
}

void keyword_sites(const SourceModule& module,
                   std::vector<MutationSite>& sites) {
  for (const Token& tok : module.tokens) {
    if (tok.kind != TokenKind::Keyword) continue;
    if (tok.lexeme == "wire") {
      push_site(sites, tok, BugPattern::KeywordMisuse, {"reg"});
    } else if (tok.lexeme == "reg") {
      push_site(sites, tok, BugPattern::KeywordMisuse, {"wire"});
    }
  }
}

void variable_sites(const SourceModule& module,
                    std::vector<MutationSite>& sites) {
  const DeclaredIdentifiers decls = declared_identifiers(module);
  if (decls.names.size() < 2) return;
  const std::set<std::pair<int, int>> defs(decls.def_sites.begin(),
                                           decls.def_sites.end());

  const Token* prev = nullptr;
  for (const Token& tok : module.tokens) {
    if (tok.kind == TokenKind::Comment) continue;
    const Token* before = prev;
    prev = &tok;
    if (tok.kind != TokenKind::Identifier) continue;
    if (!decls.contains(tok.lexeme)) continue;
    if (defs.count({tok.line, tok.col})) continue;  // keep declarations intact
    if (before && before->kind == TokenKind::Punctuation &&
        before->lexeme == ".") {
      continue;  // named port connection, foreign scope
    }
    std::vector<std::string> candidates;
    candidates.reserve(decls.names.size() - 1);
    for (const auto& name : decls.names) {
      if (name != tok.lexeme) candidates.push_back(name);
    }
    push_site(sites, tok, BugPattern::VariableConfusion,
              std::move(candidates));
  }
}

void edge_sites(const SourceModule& module, std::vector<MutationSite>& sites) {
  for (const Token& tok : module.tokens) {
    if (tok.kind != TokenKind::Keyword) continue;
    if (tok.lexeme == "posedge") {
      push_site(sites, tok, BugPattern::EdgeError, {"negedge"});
    } else if (tok.lexeme == "negedge") {
      push_site(sites, tok, BugPattern::EdgeError, {"posedge"});
    }
  }
}

MutationRecord apply_site(const SourceModule& module, const MutationSite& site,
                          const std::string& candidate, std::uint64_t seed) {
  const LineRecord& lr = module.line(site.line);
  std::string mutated_line = lr.text.substr(0, site.col_start) + candidate +
                             lr.text.substr(site.col_end);

  std::string mutated_text;
  mutated_text.reserve(module.raw_text.size() + candidate.size());
  for (const LineRecord& l : module.lines) {
    if (l.index > 1) mutated_text.push_back('\n');
    mutated_text += (l.index == site.line) ? mutated_line : l.text;
  }
  if (!module.raw_text.empty() && module.raw_text.back() == '\n') {
    mutated_text.push_back('\n');
  }

  tokenize(mutated_text);  // all patterns preserve lexical validity

  MutationRecord record;
  record.module_id = module.id;
  record.pattern = site.pattern;
  record.line_no = site.line;
  record.original_line = lr.text;
  record.mutated_line = std::move(mutated_line);
  record.seed = seed;
  record.mutated_text = std::move(mutated_text);
  return record;
}

struct TempFile {
  std::filesystem::path path;
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
};

// Runs the external hook with the mutant on disk; returns the exit code.
int run_tool(const std::string& command_template, const std::string& text,
             std::string& output_excerpt) {
  static std::atomic<std::uint64_t> counter{0};
  TempFile tmp;
  tmp.path = std::filesystem::temp_directory_path() /
             ("bugloc_mutant_" + std::to_string(counter.fetch_add(1)) + "_" +
              std::to_string(mix64(reinterpret_cast<std::uintptr_t>(&tmp))) +
              ".v");
  {
    std::ofstream out(tmp.path);
    out << text;
  }

  std::string cmd = command_template;
  const std::string placeholder = "{}";
  const std::string quoted = "'" + tmp.path.string() + "'";
  std::size_t pos = cmd.find(placeholder);
  if (pos == std::string::npos) {
    cmd += " " + quoted;
  } else {
    while (pos != std::string::npos) {
      cmd.replace(pos, placeholder.size(), quoted);
      pos = cmd.find(placeholder, pos + quoted.size());
    }
  }
  cmd += " 2>&1";

  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    throw ExternalToolError("failed to launch synth_command: " + cmd, -1, "");
  }
  char buf[512];
  std::string output;
  while (fgets(buf, sizeof buf, pipe)) {
    if (output.size() < 4096) output += buf;
  }
  int status = pclose(pipe);
  output_excerpt = output.substr(0, 512);
  if (status == -1 || !WIFEXITED(status)) {
    throw ExternalToolError("synth_command did not exit normally", -1,
                            output_excerpt);
  }
  return WEXITSTATUS(status);
}

std::size_t count_keyword(const std::vector<Token>& tokens,
                          std::string_view lexeme) {
  std::size_t n = 0;
  for (const Token& t : tokens) {
    if (t.kind == TokenKind::Keyword && t.lexeme == lexeme) ++n;
  }
  return n;
}

std::unordered_map<std::string, int> line_identifier_counts(
    const std::vector<Token>& tokens, int line) {
  std::unordered_map<std::string, int> counts;
  for (const Token& t : tokens) {
    if (t.line == line && t.kind == TokenKind::Identifier) {
      ++counts[t.lexeme];
    }
  }
  return counts;
}

// A testcase answer must identify the buggy line by content alone, so the
// mutated line may not read the same as any other line of the module.
bool line_is_ambiguous(const SourceModule& module, int line_no,
                       const std::string& mutated_line) {
  const std::string needle = normalize_ws(mutated_line);
  for (const LineRecord& l : module.lines) {
    if (l.index != line_no && normalize_ws(l.text) == needle) return true;
  }
  return false;
}

}  // namespace

std::string_view pattern_name(BugPattern pattern) {
  switch (pattern) {
    case BugPattern::OperatorMisuse: return "operator";
    case BugPattern::NumericValue: return "numeric";
    case BugPattern::KeywordMisuse: return "keyword";
    case BugPattern::VariableConfusion: return "variable";
    case BugPattern::EdgeError: return "edge";
  }
  return "operator";
}

std::optional<BugPattern> pattern_from_name(std::string_view name) {
  for (BugPattern p : kAllPatterns) {
    if (pattern_name(p) == name) return p;
  }
  return std::nullopt;
}

std::vector<MutationSite> enumerate_sites(const SourceModule& module,
                                          BugPattern pattern,
                                          const MutationOptions& options) {
  std::vector<MutationSite> sites;
  switch (pattern) {
    case BugPattern::OperatorMisuse:
      operator_sites(module, options, sites);
      break;
    case BugPattern::NumericValue:
      numeric_sites(module, options, sites);
      break;
    case BugPattern::KeywordMisuse:
      keyword_sites(module, sites);
      break;
    case BugPattern::VariableConfusion:
      variable_sites(module, sites);
      break;
    case BugPattern::EdgeError:
      edge_sites(module, sites);
      break;
  }
  std::stable_sort(sites.begin(), sites.end(),
                   [](const MutationSite& a, const MutationSite& b) {
                     return std::tie(a.line, a.col_start) <
                            std::tie(b.line, b.col_start);
                   });
  return sites;
}

MutationRecord inject(const SourceModule& module, BugPattern pattern,
                      std::uint64_t seed, const MutationOptions& options) {
  std::vector<MutationSite> sites = enumerate_sites(module, pattern, options);
  if (sites.empty()) {
    throw NoSitesError("no " + std::string(pattern_name(pattern)) +
                       " sites in module '" + module.id + "'");
  }
  Xoshiro256ss rng(seed);
  const MutationSite& site = sites[rng.bounded(sites.size())];
  const std::string& candidate =
      site.replacement_candidates[rng.bounded(
          site.replacement_candidates.size())];
  return apply_site(module, site, candidate, seed);
}

bool legality_check(const MutationRecord& record, const SourceModule& original,
                    const MutationOptions& options, LegalityReport* report) {
  LegalityReport local;
  LegalityReport& r = report ? *report : local;
  r = LegalityReport{};

  std::vector<Token> mutated_tokens;
  try {
    mutated_tokens = tokenize(record.mutated_text);
  } catch (const TokenizeError& e) {
    r.detail = e.what();
    return false;
  }
  r.tokenizes = true;

  for (std::string_view kw : {"begin", "end", "module", "endmodule"}) {
    if (count_keyword(original.tokens, kw) !=
        count_keyword(mutated_tokens, kw)) {
      r.detail = "token count changed for '" + std::string(kw) + "'";
      return false;
    }
  }
  r.structure_ok = true;

  r.identifier_ok = true;
  if (record.pattern == BugPattern::VariableConfusion) {
    const DeclaredIdentifiers decls = declared_identifiers(original);
    auto before = line_identifier_counts(original.tokens, record.line_no);
    auto after = line_identifier_counts(mutated_tokens, record.line_no);
    for (const auto& [lexeme, count] : after) {
      auto it = before.find(lexeme);
      const int prior = it == before.end() ? 0 : it->second;
      if (count > prior && !decls.contains(lexeme)) {
        r.identifier_ok = false;
        r.detail = "substituted identifier '" + lexeme + "' is not declared";
        return false;
      }
    }
  }

  r.tool_ok = true;
  if (!options.synth_command.empty()) {
    std::string excerpt;
    const int code = run_tool(options.synth_command, record.mutated_text,
                              excerpt);
    if (code == 126 || code == 127) {
      throw ExternalToolError("synth_command could not run (exit " +
                                  std::to_string(code) + ")",
                              code, excerpt);
    }
    if (code != 0) {
      r.tool_ok = false;
      r.detail = "synth_command exited " + std::to_string(code) + ": " +
                 excerpt;
      return false;
    }
  }
  return true;
}

std::vector<TestCase> build_testset(
    const std::vector<std::pair<SourceModule, std::string>>& corpus,
    const std::map<BugPattern, std::size_t>& pattern_counts,
    std::uint64_t seed, const MutationOptions& options) {
  std::vector<TestCase> cases;
  Xoshiro256ss rng(seed);

  for (BugPattern pattern : kAllPatterns) {
    auto it = pattern_counts.find(pattern);
    if (it == pattern_counts.end() || it->second == 0) continue;
    const std::size_t want = it->second;

    std::vector<std::pair<std::size_t, MutationSite>> pool;
    for (std::size_t m = 0; m < corpus.size(); ++m) {
      for (MutationSite& site :
           enumerate_sites(corpus[m].first, pattern, options)) {
        pool.emplace_back(m, std::move(site));
      }
    }
    if (pool.size() < want) {
      throw InsufficientSitesError(
          "pattern '" + std::string(pattern_name(pattern)) + "': requested " +
              std::to_string(want) + " cases but only " +
              std::to_string(pool.size()) + " sites exist",
          want, pool.size());
    }
    rng.shuffle(pool);

    std::size_t built = 0;
    for (std::size_t p = 0; p < pool.size() && built < want; ++p) {
      const auto& [module_idx, site] = pool[p];
      const SourceModule& module = corpus[module_idx].first;

      std::vector<std::size_t> order(site.replacement_candidates.size());
      for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
      rng.shuffle(order);

      for (std::size_t c : order) {
        MutationRecord record =
            apply_site(module, site, site.replacement_candidates[c], seed);
        if (line_is_ambiguous(module, record.line_no, record.mutated_line)) {
          continue;
        }
        if (!legality_check(record, module, options)) continue;

        TestCase tc;
        tc.case_id = std::string(pattern_name(pattern)) + "-" +
                     std::to_string(built + 1) + "-" + module.id;
        tc.design_description = corpus[module_idx].second;
        tc.buggy_code = std::move(record.mutated_text);
        tc.buggy_line_no = record.line_no;
        tc.buggy_line = std::move(record.mutated_line);
        tc.pattern = pattern;
        tc.module_id = module.id;
        cases.push_back(std::move(tc));
        ++built;
        break;
      }
    }
    if (built < want) {
      throw InsufficientSitesError(
          "pattern '" + std::string(pattern_name(pattern)) + "': requested " +
              std::to_string(want) + " cases but only " +
              std::to_string(built) + " legal mutants could be built",
          want, built);
    }
  }
  return cases;
}

}  // namespace bugloc
