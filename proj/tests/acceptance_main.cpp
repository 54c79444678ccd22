// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bugloc/dataset.hpp"
#include "bugloc/dedup.hpp"
#include "bugloc/eval.hpp"
#include "bugloc/io.hpp"
#include "bugloc/mutation.hpp"
#include "bugloc/rng.hpp"
#include "bugloc/simpo.hpp"
#include "bugloc/text.hpp"
#include "bugloc/verilog.hpp"
#include "bugloc/version.hpp"

using namespace bugloc;

namespace {

int failures = 0;

void report(int index, const std::string& name, bool ok,
            const std::string& detail = "") {
  std::printf("[%s] criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", index,
              name.c_str(), detail.empty() ? "" : " -- ",
              detail.c_str());
  if (!ok) ++failures;
}

std::vector<std::pair<SourceModule, std::string>> fixture_corpus() {
  std::vector<std::pair<SourceModule, std::string>> corpus;
  for (const CorpusDoc& doc :
       load_corpus(std::filesystem::path(BUGLOC_TEST_DATA_DIR))) {
    corpus.emplace_back(load_module(doc.text, doc.id),
                        "Design description of " + doc.id + ".");
  }
  return corpus;
}

std::size_t abs_offset(const std::string& text, int line, int col) {
  std::size_t offset = 0;
  int current = 1;
  while (current < line) {
    offset = text.find('\n', offset) + 1;
    ++current;
  }
  return offset + static_cast<std::size_t>(col - 1);
}

// --- oracles (independent of the implementations under test) --------------

double pass_at_k_oracle(int n, int c, int k) {
  long long total = 0;
  long long hit = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    ++total;
    if ((mask & ((1u << c) - 1u)) != 0) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

std::size_t levenshtein_oracle(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(
      a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub =
          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return d[a.size()][b.size()];
}

double jaccard_oracle(const std::unordered_set<std::uint64_t>& a,
                      const std::unordered_set<std::uint64_t>& b) {
  std::size_t inter = 0;
  for (std::uint64_t x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

// simulated model: returns the buggy line with probability p, otherwise a
// different non-blank line; deterministic given the seed
class SimulatedModel final : public Transport {
public:
  SimulatedModel(std::vector<TestCase> cases, double p, std::uint64_t seed)
      : cases_(std::move(cases)), p_(p), seed_(seed) {}

  TransportReply post(const std::string& body_json,
                      const std::string&) override {
    const json body = json::parse(body_json);
    std::string prompt;
    for (const auto& message : body["messages"]) {
      if (message["role"] == "user") prompt = message["content"];
    }
    const TestCase* match = nullptr;
    for (const TestCase& tc : cases_) {
      if (prompt.find(tc.buggy_code) != std::string::npos) {
        match = &tc;
        break;
      }
    }
    json choices = json::array();
    if (match) {
      const int n = body.value("n", 1);
      Xoshiro256ss rng(derive_seed(seed_, fnv1a64(match->case_id)));
      const auto lines = split_lines(match->buggy_code);
      for (int i = 0; i < n; ++i) {
        std::string answer;
        if (rng.unit() < p_) {
          answer = match->buggy_line;
        } else {
          // a wrong, non-blank, non-buggy line
          int line_no;
          do {
            line_no = 1 + static_cast<int>(rng.bounded(lines.size()));
          } while (line_no == match->buggy_line_no ||
                   normalize_ws(lines[line_no - 1]).empty());
          answer = lines[line_no - 1];
        }
        choices.push_back(
            {{"message", {{"role", "assistant"}, {"content", answer}}}});
      }
    }
    TransportReply reply;
    reply.ok = true;
    reply.status = 200;
    reply.body = json{{"choices", choices}}.dump();
    return reply;
  }
  bool needs_api_key() const override { return false; }

private:
  std::vector<TestCase> cases_;
  double p_;
  std::uint64_t seed_;
};

std::string random_words(Xoshiro256ss& rng, int words) {
  std::string text;
  for (int w = 0; w < words; ++w) {
    if (w) text.push_back(' ');
    for (int c = 0; c < 6; ++c) {
      text.push_back(static_cast<char>('a' + rng.bounded(26)));
    }
  }
  return text;
}

// --- criteria --------------------------------------------------------------

void criterion_1_pass_at_k_exactness() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int n = 1; n <= 12; ++n) {
    for (int c = 0; c <= n; ++c) {
      for (int k = 1; k <= n; ++k) {
        worst = std::max(worst, std::abs(pass_at_k(n, c, k) -
                                         pass_at_k_oracle(n, c, k)));
      }
    }
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "max |impl - oracle| = %.3g, runtime %.3fs", worst, elapsed);
  report(1, "pass@k matches subset enumeration for all n <= 12",
         worst <= 1e-12 && elapsed < 1.0, detail);
}

void criterion_2_spot_values(
    const std::vector<std::pair<SourceModule, std::string>>& corpus) {
  bool ok = pass_at_k(20, 0, 5) == 0.0 && pass_at_k(20, 20, 1) == 1.0 &&
            std::abs(pass_at_k(5, 2, 2) - 0.7) <= 1e-12;

  // the n = 20, pass@1/pass@5 regime end to end on a perfect mock model
  const auto cases = build_testset(
      corpus, {{BugPattern::OperatorMisuse, 3}, {BugPattern::EdgeError, 2}},
      2024);
  Gateway gateway({}, std::make_unique<SimulatedModel>(cases, 1.0, 7));
  EvalRunConfig cfg;
  cfg.n = 20;
  cfg.ks = {1, 5};
  const EvalRunOutcome outcome = run_eval(cases, gateway, cfg);
  ok = ok && outcome.report.pass_at.at(1) == 1.0 &&
       outcome.report.pass_at.at(5) == 1.0 && outcome.failures.empty();
  report(2, "pass@k spot values and the n=20 regime end-to-end", ok);
}

void criterion_3_simpo_math() {
  const SimpoParams params{2.0, 1.0};
  const auto [loss, margin] = simpo_loss(TokenLogProbs{{-1.0}},
                                         TokenLogProbs{{-2.0}}, params);
  bool ok = std::abs(loss - std::log1p(std::exp(-1.0))) <= 1e-9 &&
            std::abs(margin - 1.0) <= 1e-12;

  // analytic vs central finite differences over 1000 seeded pairs
  Xoshiro256ss rng(424242);
  int grad_failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double beta = 0.5 + 3.5 * rng.unit();
    const double gamma = 2.0 * rng.unit();
    const double pw = -8.0 * rng.unit();
    const double pl = -8.0 * rng.unit();
    const SimpoParams p{beta, gamma};
    if (std::abs(beta * (pw - pl) - gamma) > 30.0) continue;
    const double h = 1e-6;
    auto loss_at = [&](double w, double l) {
      return simpo_loss(TokenLogProbs{{w}}, TokenLogProbs{{l}}, p).loss;
    };
    const double fd_w = (loss_at(pw + h, pl) - loss_at(pw - h, pl)) / (2 * h);
    const double fd_l = (loss_at(pw, pl + h) - loss_at(pw, pl - h)) / (2 * h);
    const auto [dw, dl] =
        simpo_loss_grad(TokenLogProbs{{pw}}, TokenLogProbs{{pl}}, p);
    if (std::abs(dw - fd_w) > 1e-6 * std::max(1.0, std::abs(dw)) ||
        std::abs(dl - fd_l) > 1e-6 * std::max(1.0, std::abs(dl))) {
      ++grad_failures;
    }
  }
  ok = ok && grad_failures == 0;

  // extreme margins stay finite
  const auto lo =
      simpo_loss(TokenLogProbs{{0.0}}, TokenLogProbs{{-500.0}}, params);
  const auto hi =
      simpo_loss(TokenLogProbs{{-500.0}}, TokenLogProbs{{0.0}}, params);
  ok = ok && std::isfinite(lo.loss) && std::isfinite(hi.loss);

  char detail[64];
  std::snprintf(detail, sizeof detail, "%d gradient mismatches",
                grad_failures);
  report(3, "SimPO loss value, gradients and stability", ok, detail);
}

void criterion_4_mutation_soundness(
    const std::vector<std::pair<SourceModule, std::string>>& corpus) {
  // (module, pattern) combinations that have sites, cycled to 500 runs
  std::vector<std::pair<const SourceModule*, BugPattern>> combos;
  for (const auto& [module, description] : corpus) {
    for (BugPattern pattern : kAllPatterns) {
      if (!enumerate_sites(module, pattern).empty()) {
        combos.emplace_back(&module, pattern);
      }
    }
  }
  std::set<BugPattern> covered;
  for (const auto& [module, pattern] : combos) covered.insert(pattern);

  bool ok = corpus.size() >= 10 && covered.size() == kAllPatterns.size();
  int bad = 0;

  auto run_pass = [&]() {
    std::string jsonl;
    for (int i = 0; i < 500; ++i) {
      const auto& [module, pattern] = combos[i % combos.size()];
      const MutationRecord record =
          inject(*module, pattern, static_cast<std::uint64_t>(i));

      const auto original_lines = split_lines(module->raw_text);
      const auto mutated_lines = split_lines(record.mutated_text);
      bool sound = original_lines.size() == mutated_lines.size();
      int changed = 0;
      for (std::size_t l = 0; sound && l < original_lines.size(); ++l) {
        if (original_lines[l] != mutated_lines[l]) ++changed;
      }
      sound = sound && changed == 1;

      // changed byte region of the line, as absolute offsets in the original
      const std::string& before = record.original_line;
      const std::string& after = record.mutated_line;
      std::size_t lo = 0;
      while (lo < before.size() && lo < after.size() &&
             before[lo] == after[lo]) {
        ++lo;
      }
      std::size_t suffix = 0;
      while (suffix < before.size() - lo && suffix < after.size() - lo &&
             before[before.size() - 1 - suffix] ==
                 after[after.size() - 1 - suffix]) {
        ++suffix;
      }
      const std::size_t line_start = abs_offset(
          module->raw_text, record.line_no, 1);
      const std::size_t region_a = line_start + lo;
      const std::size_t region_b =
          std::max(region_a + 1, line_start + before.size() - suffix);

      try {
        tokenize(record.mutated_text);
        // the changed region must not intersect a comment/string token
        for (const Token& t : module->tokens) {
          if (t.kind != TokenKind::Comment &&
              t.kind != TokenKind::StringLiteral) {
            continue;
          }
          const std::size_t span_a =
              abs_offset(module->raw_text, t.line, t.col);
          const std::size_t span_b = span_a + t.lexeme.size();
          if (region_a < span_b && span_a < region_b) sound = false;
        }
      } catch (const TokenizeError&) {
        sound = false;
      }
      sound = sound && legality_check(record, *module);
      if (!sound) ++bad;
      jsonl += to_json(record).dump() + "\n";
    }
    return jsonl;
  };

  const std::string first = run_pass();
  const std::string second = run_pass();
  ok = ok && bad == 0 && first == second;

  char detail[128];
  std::snprintf(detail, sizeof detail,
                "%d unsound of 1000 runs, reproduction %s", bad,
                first == second ? "byte-identical" : "DIVERGED");
  report(4, "500 seeded injections all sound and reproducible", ok, detail);
}

void criterion_5_testset_histogram(
    const std::vector<std::pair<SourceModule, std::string>>& corpus) {
  const std::map<BugPattern, std::size_t> counts = {
      {BugPattern::OperatorMisuse, 25}, {BugPattern::NumericValue, 26},
      {BugPattern::VariableConfusion, 24}, {BugPattern::KeywordMisuse, 13},
      {BugPattern::EdgeError, 14},
  };
  bool ok = true;
  std::string detail;
  try {
    const auto cases = build_testset(corpus, counts, 1337);
    std::map<BugPattern, std::size_t> histogram;
    for (const TestCase& tc : cases) ++histogram[tc.pattern];
    ok = cases.size() == 102 && histogram == counts;
    for (const TestCase& tc : cases) {
      // every case carries a well-formed, line-consistent mutant
      ok = ok && split_lines(tc.buggy_code)[tc.buggy_line_no - 1] ==
                     tc.buggy_line;
    }
    detail = std::to_string(cases.size()) + " cases";
  } catch (const Error& e) {
    ok = false;
    detail = e.what();
  }
  report(5, "build-testset yields the 102-case histogram {25,26,24,13,14}",
         ok, detail);
}

void criterion_6_dedup_recall() {
  const auto start = std::chrono::steady_clock::now();
  Xoshiro256ss rng(20240809);
  std::vector<std::pair<std::string, std::string>> corpus;
  std::vector<std::string> bases;
  for (int i = 0; i < 50; ++i) {
    bases.push_back(random_words(rng, 220));
    corpus.emplace_back("base" + std::to_string(i), bases.back());
  }
  bool construction_ok = true;
  for (int i = 0; i < 50; ++i) {
    std::string plant = bases[static_cast<std::size_t>(i)];
    for (int e = 0; e < 3; ++e) {
      const std::size_t word = rng.bounded(plant.size() / 7);
      for (int c = 0; c < 6; ++c) {
        plant[word * 7 + c] = static_cast<char>('a' + rng.bounded(26));
      }
    }
    construction_ok =
        construction_ok &&
        jaccard_oracle(shingles(bases[i], 8), shingles(plant, 8)) >= 0.9;
    corpus.emplace_back("plant" + std::to_string(i), plant);
  }

  const DedupResult result = deduplicate(corpus, 0.7);
  bool ok = construction_ok && result.retained_ids.size() == 50;
  for (const std::string& id : result.retained_ids) {
    ok = ok && id.rfind("base", 0) == 0;
  }
  ok = ok && result.report.size() == 50;
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "%zu retained, %zu dropped, oracle-verified plants, %.2fs",
                result.retained_ids.size(), result.report.size(), elapsed);
  report(6, "dedup drops all 50 planted near-duplicates and no bases",
         ok && elapsed < 10.0, detail);
}

void criterion_7_locator(const std::vector<TestCase>& cases) {
  bool ok = cases.size() == 102;
  int misses = 0;
  for (const TestCase& tc : cases) {
    const auto lines = split_lines(tc.buggy_code);
    if (locate_line(tc.buggy_line, lines) != tc.buggy_line_no) ++misses;
  }
  ok = ok && misses == 0;

  // implementation vs quadratic-DP oracle on 1000 random fixtures
  Xoshiro256ss rng(55);
  int oracle_disagreements = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> lines;
    const std::size_t n_lines = 1 + rng.bounded(12);
    bool any = false;
    for (std::size_t i = 0; i < n_lines; ++i) {
      if (rng.bounded(7) == 0) {
        lines.emplace_back();
        continue;
      }
      std::string line;
      const std::size_t len = 1 + rng.bounded(30);
      for (std::size_t c = 0; c < len; ++c) {
        line.push_back(static_cast<char>('a' + rng.bounded(4)));
      }
      lines.push_back(line);
      any = true;
    }
    if (!any) continue;
    std::string probe;
    const std::size_t len = 1 + rng.bounded(30);
    for (std::size_t c = 0; c < len; ++c) {
      probe.push_back(static_cast<char>('a' + rng.bounded(4)));
    }

    int best = 0;
    std::size_t best_d = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (normalize_ws(lines[i]).empty()) continue;
      const std::size_t d =
          levenshtein_oracle(normalize_ws(probe), normalize_ws(lines[i]));
      if (best == 0 || d < best_d) {
        best = static_cast<int>(i) + 1;
        best_d = d;
      }
    }
    if (locate_line(probe, lines) != best) ++oracle_disagreements;
  }
  ok = ok && oracle_disagreements == 0;
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "%d testset misses, %d oracle disagreements", misses,
                oracle_disagreements);
  report(7, "locate_line exact on the testset and oracle-consistent", ok,
         detail);
}

void criterion_8_statistical(const std::vector<TestCase>& cases) {
  bool ok = cases.size() == 102;
  Gateway gateway({}, std::make_unique<SimulatedModel>(cases, 0.7, 99));
  EvalRunConfig cfg;
  cfg.n = 20;
  cfg.ks = {1, 5};
  const EvalRunOutcome outcome = run_eval(cases, gateway, cfg);
  const double pass1 = outcome.report.pass_at.at(1);
  ok = ok && outcome.failures.empty() && pass1 >= 0.67 && pass1 <= 0.73;
  char detail[64];
  std::snprintf(detail, sizeof detail, "pass@1 = %.4f", pass1);
  report(8, "seeded p=0.7 mock over 102 cases x n=20 lands in [0.67, 0.73]",
         ok, detail);
}

void criterion_9_disclosure() {
  const std::string note(kNonReproductionNote);
  const bool ok = note.find("93.38") != std::string::npos &&
                  note.find("94.10") != std::string::npos &&
                  note.find("77.9") != std::string::npos &&
                  note.find("40.39") != std::string::npos &&
                  note.find("58.92") != std::string::npos &&
                  note.find("not reproduced") != std::string::npos;
  report(9, "non-reproducibility disclosure is published by the tool", ok);
  std::printf("         %s\n", std::string(kNonReproductionNote).c_str());
}

}  // namespace

int main() {
  std::printf("acceptance suite: %s %s\n", std::string(kToolName).c_str(),
              std::string(kToolVersion).c_str());
  const auto corpus = fixture_corpus();

  criterion_1_pass_at_k_exactness();
  criterion_2_spot_values(corpus);
  criterion_3_simpo_math();
  criterion_4_mutation_soundness(corpus);
  criterion_5_testset_histogram(corpus);
  criterion_6_dedup_recall();

  const std::map<BugPattern, std::size_t> counts = {
      {BugPattern::OperatorMisuse, 25}, {BugPattern::NumericValue, 26},
      {BugPattern::VariableConfusion, 24}, {BugPattern::KeywordMisuse, 13},
      {BugPattern::EdgeError, 14},
  };
  const auto cases = build_testset(corpus, counts, 1337);
  criterion_7_locator(cases);
  criterion_8_statistical(cases);
  criterion_9_disclosure();

  std::printf("%s\n", failures == 0 ? "ALL CRITERIA PASS"
                                    : "SOME CRITERIA FAILED");
  return failures == 0 ? 0 : 1;
}
