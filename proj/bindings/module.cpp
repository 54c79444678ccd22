#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bugloc/dataset.hpp"
#include "bugloc/dedup.hpp"
#include "bugloc/eval.hpp"
#include "bugloc/mutation.hpp"
#include "bugloc/simpo.hpp"
#include "bugloc/text.hpp"
#include "bugloc/verilog.hpp"
#include "bugloc/version.hpp"

namespace py = pybind11;
using namespace bugloc;

namespace {

BugPattern pattern_arg(const std::string& name) {
  auto pattern = pattern_from_name(name);
  if (!pattern) {
    throw py::value_error("unknown pattern '" + name +
                          "', expected operator|numeric|keyword|variable|edge");
  }
  return *pattern;
}

}  // namespace

PYBIND11_MODULE(bugloc, m) {
  m.doc() = "Verilog bug-localization dataset and evaluation toolkit";
  m.attr("__version__") = std::string(kToolVersion);

  py::register_exception<Error>(m, "BuglocError");

  // --- verilog model ---
  py::enum_<TokenKind>(m, "TokenKind")
      .value("keyword", TokenKind::Keyword)
      .value("identifier", TokenKind::Identifier)
      .value("operator", TokenKind::Operator)
      .value("number", TokenKind::Number)
      .value("string_literal", TokenKind::StringLiteral)
      .value("comment", TokenKind::Comment)
      .value("punctuation", TokenKind::Punctuation)
      .value("other", TokenKind::Other);

  py::class_<Token>(m, "Token")
      .def_readonly("kind", &Token::kind)
      .def_readonly("lexeme", &Token::lexeme)
      .def_readonly("line", &Token::line)
      .def_readonly("col", &Token::col)
      .def("__repr__", [](const Token& t) {
        return "Token(" + std::string(token_kind_name(t.kind)) + ", '" +
               t.lexeme + "', " + std::to_string(t.line) + ":" +
               std::to_string(t.col) + ")";
      });

  py::class_<SourceModule>(m, "SourceModule")
      .def_readonly("id", &SourceModule::id)
      .def_readonly("name", &SourceModule::name)
      .def_readonly("raw_text", &SourceModule::raw_text)
      .def_property_readonly("lines",
                             [](const SourceModule& s) {
                               std::vector<std::string> out;
                               for (const auto& l : s.lines) {
                                 out.push_back(l.text);
                               }
                               return out;
                             })
      .def_property_readonly("tokens", [](const SourceModule& s) {
        return s.tokens;
      });

  m.def("tokenize", [](const std::string& text) { return tokenize(text); },
        py::arg("text"));
  m.def(
      "load_module",
      [](const std::string& text, const std::string& id, int min_lines) {
        LoadOptions options;
        options.min_lines = min_lines;
        return load_module(text, id, options);
      },
      py::arg("text"), py::arg("id"), py::arg("min_lines") = 21);

  // --- mutation engine ---
  py::class_<MutationRecord>(m, "MutationRecord")
      .def_readonly("module_id", &MutationRecord::module_id)
      .def_property_readonly("pattern",
                             [](const MutationRecord& r) {
                               return std::string(pattern_name(r.pattern));
                             })
      .def_readonly("line_no", &MutationRecord::line_no)
      .def_readonly("original_line", &MutationRecord::original_line)
      .def_readonly("mutated_line", &MutationRecord::mutated_line)
      .def_readonly("seed", &MutationRecord::seed)
      .def_readonly("buggy_code", &MutationRecord::mutated_text);

  py::class_<TestCase>(m, "TestCase")
      .def_readonly("case_id", &TestCase::case_id)
      .def_readonly("design_description", &TestCase::design_description)
      .def_readonly("buggy_code", &TestCase::buggy_code)
      .def_readonly("buggy_line_no", &TestCase::buggy_line_no)
      .def_readonly("buggy_line", &TestCase::buggy_line)
      .def_property_readonly("pattern",
                             [](const TestCase& t) {
                               return std::string(pattern_name(t.pattern));
                             })
      .def_readonly("module_id", &TestCase::module_id);

  m.def(
      "enumerate_sites",
      [](const SourceModule& module, const std::string& pattern) {
        std::vector<py::dict> out;
        for (const MutationSite& s :
             enumerate_sites(module, pattern_arg(pattern))) {
          py::dict d;
          d["line"] = s.line;
          d["col_start"] = s.col_start;
          d["col_end"] = s.col_end;
          d["candidates"] = s.replacement_candidates;
          out.push_back(std::move(d));
        }
        return out;
      },
      py::arg("module"), py::arg("pattern"));
  m.def(
      "inject",
      [](const SourceModule& module, const std::string& pattern,
         std::uint64_t seed) {
        return inject(module, pattern_arg(pattern), seed);
      },
      py::arg("module"), py::arg("pattern"), py::arg("seed"));
  m.def(
      "legality_check",
      [](const MutationRecord& record, const SourceModule& original) {
        return legality_check(record, original);
      },
      py::arg("record"), py::arg("original"));
  m.def(
      "build_testset",
      [](const std::vector<std::pair<SourceModule, std::string>>& corpus,
         const std::map<std::string, std::size_t>& counts,
         std::uint64_t seed) {
        std::map<BugPattern, std::size_t> typed;
        for (const auto& [name, count] : counts) {
          typed[pattern_arg(name)] = count;
        }
        return build_testset(corpus, typed, seed);
      },
      py::arg("corpus"), py::arg("counts"), py::arg("seed"));

  // --- dedup ---
  py::class_<DuplicateEntry>(m, "DuplicateEntry")
      .def_readonly("kept", &DuplicateEntry::kept)
      .def_readonly("dropped", &DuplicateEntry::dropped)
      .def_readonly("similarity", &DuplicateEntry::similarity);
  py::class_<DedupResult>(m, "DedupResult")
      .def_readonly("retained_ids", &DedupResult::retained_ids)
      .def_readonly("report", &DedupResult::report);

  m.def(
      "deduplicate",
      [](const std::vector<std::pair<std::string, std::string>>& corpus,
         double threshold, int num_hashes, int bands, int rows,
         int shingle_k, std::uint64_t seed) {
        DedupParams params;
        params.num_hashes = num_hashes;
        params.lsh.bands = bands;
        params.lsh.rows = rows;
        params.shingle_k = shingle_k;
        params.seed = seed;
        return deduplicate(corpus, threshold, params);
      },
      py::arg("corpus"), py::arg("threshold") = 0.7,
      py::arg("num_hashes") = 128, py::arg("bands") = 16, py::arg("rows") = 8,
      py::arg("shingle_k") = 8, py::arg("seed") = 1);
  m.def(
      "estimate_jaccard",
      [](const std::string& a, const std::string& b, int num_hashes,
         int shingle_k, std::uint64_t seed) {
        return estimate_jaccard(
            signature(shingles(a, shingle_k), num_hashes, seed),
            signature(shingles(b, shingle_k), num_hashes, seed));
      },
      py::arg("a"), py::arg("b"), py::arg("num_hashes") = 128,
      py::arg("shingle_k") = 8, py::arg("seed") = 1);

  // --- dataset pipeline ---
  py::class_<ThoughtRecord>(m, "ThoughtRecord")
      .def_readonly("thought_text", &ThoughtRecord::thought_text)
      .def_readonly("extracted_line", &ThoughtRecord::extracted_line)
      .def_readonly("valid", &ThoughtRecord::valid);

  m.def("validate_thought", &validate_thought, py::arg("thought_text"),
        py::arg("buggy_line"));
  m.def("format_prompt", &format_prompt, py::arg("description"),
        py::arg("code"), py::arg("numbered_lines") = false);
  m.def(
      "build_sft_sample",
      [](const MutationRecord& record, const std::string& description) {
        const SftSample s = build_sft_sample(record, description);
        return py::make_tuple(s.prompt, s.label);
      },
      py::arg("record"), py::arg("description"));
  m.def("select_negative", &select_negative, py::arg("outputs"),
        py::arg("code_lines"), py::arg("buggy_line_no"), py::arg("seed"));

  // --- preference objective ---
  m.def(
      "avg_logprob",
      [](const std::vector<double>& values) {
        return avg_logprob(TokenLogProbs{values});
      },
      py::arg("token_logprobs"));
  m.def(
      "simpo_reward",
      [](const std::vector<double>& values, double beta, double gamma) {
        return reward(TokenLogProbs{values}, SimpoParams{beta, gamma});
      },
      py::arg("token_logprobs"), py::arg("beta") = 2.0,
      py::arg("gamma") = 1.0);
  m.def(
      "simpo_loss",
      [](const std::vector<double>& chosen, const std::vector<double>& rejected,
         double beta, double gamma) {
        const auto [loss, margin] = simpo_loss(
            TokenLogProbs{chosen}, TokenLogProbs{rejected},
            SimpoParams{beta, gamma});
        return py::make_tuple(loss, margin);
      },
      py::arg("chosen"), py::arg("rejected"), py::arg("beta") = 2.0,
      py::arg("gamma") = 1.0);
  m.def(
      "simpo_loss_grad",
      [](const std::vector<double>& chosen, const std::vector<double>& rejected,
         double beta, double gamma) {
        return simpo_loss_grad(TokenLogProbs{chosen},
                               TokenLogProbs{rejected},
                               SimpoParams{beta, gamma});
      },
      py::arg("chosen"), py::arg("rejected"), py::arg("beta") = 2.0,
      py::arg("gamma") = 1.0);
  m.def(
      "batch_objective",
      [](const std::vector<std::pair<std::vector<double>,
                                     std::vector<double>>>& pairs,
         double beta, double gamma) {
        std::vector<std::pair<TokenLogProbs, TokenLogProbs>> typed;
        typed.reserve(pairs.size());
        for (const auto& [w, l] : pairs) {
          typed.emplace_back(TokenLogProbs{w}, TokenLogProbs{l});
        }
        return batch_objective(typed, SimpoParams{beta, gamma});
      },
      py::arg("pairs"), py::arg("beta") = 2.0, py::arg("gamma") = 1.0);

  // --- eval harness ---
  m.def("locate_line", &locate_line, py::arg("output"),
        py::arg("code_lines"));
  m.def("pass_at_k", &pass_at_k, py::arg("n"), py::arg("c"), py::arg("k"));
  m.def(
      "score_case",
      [](const TestCase& tc, const std::vector<std::string>& outputs,
         const std::string& mode) {
        ResponseSet rs;
        rs.case_id = tc.case_id;
        rs.outputs = outputs;
        return score_case(tc, rs,
                          mode == "substring" ? ScoringMode::Substring
                                              : ScoringMode::EditDistance);
      },
      py::arg("test_case"), py::arg("outputs"),
      py::arg("mode") = "edit-distance");
  m.def(
      "hit_rate",
      [](const std::vector<TestCase>& cases,
         const std::map<std::string,
                        std::optional<std::vector<int>>>& line_lists) {
        return hit_rate(cases, line_lists);
      },
      py::arg("cases"), py::arg("line_lists"));

  m.def("normalize_ws", &normalize_ws, py::arg("text"));
  m.def("levenshtein", [](const std::string& a, const std::string& b) {
    return levenshtein(a, b);
  });
}
