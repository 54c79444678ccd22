#include "bugloc/dedup.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "bugloc/parallel.hpp"
#include "bugloc/rng.hpp"
#include "bugloc/text.hpp"

namespace bugloc {

std::unordered_set<std::uint64_t> shingles(std::string_view text, int k) {
  if (k < 1) throw DomainError("shingle size must be >= 1");
  const std::string folded = fold_for_shingles(text);
  std::unordered_set<std::uint64_t> out;
  if (folded.size() < static_cast<std::size_t>(k)) {
    out.insert(fnv1a64(folded));
    return out;
  }
  for (std::size_t i = 0; i + k <= folded.size(); ++i) {
    out.insert(fnv1a64(std::string_view(folded).substr(i, k)));
  }
  return out;
}

MinHashSignature signature(const std::unordered_set<std::uint64_t>& sh,
                           int num_hashes, std::uint64_t seed) {
  if (sh.empty()) throw EmptyShingleSetError("cannot sketch an empty set");
  if (num_hashes < 1) throw DomainError("num_hashes must be >= 1");

  // i-th member of the hash family: x -> mix64(x ^ key[i])
  std::vector<std::uint64_t> keys(num_hashes);
  SplitMix64 sm(seed);
  for (auto& key : keys) key = sm.next();

  MinHashSignature sig;
  sig.num_hashes = num_hashes;
  sig.seed = seed;
  sig.values.assign(num_hashes, std::numeric_limits<std::uint64_t>::max());
  for (std::uint64_t shingle : sh) {
    for (int i = 0; i < num_hashes; ++i) {
      const std::uint64_t h = mix64(shingle ^ keys[i]);
      if (h < sig.values[i]) sig.values[i] = h;
    }
  }
  return sig;
}

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
  if (a.num_hashes != b.num_hashes || a.seed != b.seed ||
      a.values.size() != b.values.size()) {
    throw IncompatibleSignaturesError(
        "signatures differ in num_hashes or seed");
  }
  if (a.values.empty()) {
    throw IncompatibleSignaturesError("empty signatures");
  }
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] == b.values[i]) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(a.values.size());
}

namespace {

double exact_jaccard(const std::unordered_set<std::uint64_t>& a,
                     const std::unordered_set<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  for (std::uint64_t x : small) inter += large.count(x);
  return static_cast<double>(inter) /
         static_cast<double>(a.size() + b.size() - inter);
}

std::uint64_t band_key(const MinHashSignature& sig, int band, int rows) {
  std::uint64_t h = mix64(0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(band));
  for (int r = 0; r < rows; ++r) {
    h = mix64(h ^ sig.values[static_cast<std::size_t>(band) * rows + r]);
  }
  return h;
}

}  // namespace

DedupResult deduplicate(
    const std::vector<std::pair<std::string, std::string>>& corpus,
    double threshold, const DedupParams& params) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw DomainError("threshold must lie strictly between 0 and 1");
  }
  if (params.lsh.bands * params.lsh.rows != params.num_hashes) {
    throw DomainError("bands * rows must equal num_hashes");
  }

  const std::size_t n = corpus.size();
  std::vector<MinHashSignature> sigs(n);
  std::vector<std::unordered_set<std::uint64_t>> shingle_sets;
  if (params.exact_verify) shingle_sets.resize(n);

  parallel_for(n, params.jobs, [&](std::size_t i) {
    auto sh = shingles(corpus[i].second, params.shingle_k);
    sigs[i] = signature(sh, params.num_hashes, params.seed);
    if (params.exact_verify) shingle_sets[i] = std::move(sh);
  });

  // single-writer banding phase over retained documents
  DedupResult result;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
  buckets.reserve(n * static_cast<std::size_t>(params.lsh.bands));

  std::vector<std::uint64_t> keys(static_cast<std::size_t>(params.lsh.bands));
  for (std::size_t j = 0; j < n; ++j) {
    for (int b = 0; b < params.lsh.bands; ++b) {
      keys[static_cast<std::size_t>(b)] = band_key(sigs[j], b,
                                                   params.lsh.rows);
    }

    // earlier retained docs sharing any band, in ascending input order
    std::vector<std::size_t> candidates;
    for (std::uint64_t key : keys) {
      auto it = buckets.find(key);
      if (it == buckets.end()) continue;
      candidates.insert(candidates.end(), it->second.begin(),
                        it->second.end());
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());

    double best_sim = -1.0;
    std::size_t best_i = 0;
    for (std::size_t i : candidates) {
      const double sim =
          params.exact_verify
              ? exact_jaccard(shingle_sets[i], shingle_sets[j])
              : estimate_jaccard(sigs[i], sigs[j]);
      if (sim > best_sim) {
        best_sim = sim;
        best_i = i;
      }
    }

    if (best_sim >= threshold) {
      result.report.push_back(
          DuplicateEntry{corpus[best_i].first, corpus[j].first, best_sim});
      continue;
    }
    result.retained_ids.push_back(corpus[j].first);
    for (std::uint64_t key : keys) buckets[key].push_back(j);
  }
  return result;
}

}  // namespace bugloc
