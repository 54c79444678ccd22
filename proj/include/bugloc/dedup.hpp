#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "bugloc/errors.hpp"

namespace bugloc {

// MinHash sketch of a document's shingle set. The fraction of positions on
// which two sketches agree is an unbiased estimator of the Jaccard
// similarity of the underlying sets. Sketches are only comparable when they
// were built with the same num_hashes and seed.
struct MinHashSignature {
  std::vector<std::uint64_t> values;
  int num_hashes = 0;
  std::uint64_t seed = 0;
};

struct LshParams {
  int bands = 16;
  int rows = 8;  // bands * rows must equal num_hashes
};

struct DedupParams {
  int num_hashes = 128;
  LshParams lsh;
  int shingle_k = 8;
  std::uint64_t seed = 1;
  // Verify candidate pairs with exact Jaccard over shingle sets instead of
  // the signature estimate. Costs memory proportional to the corpus.
  bool exact_verify = false;
  unsigned jobs = 1;
};

// Hashes of all k-byte windows of the lowercased, whitespace-collapsed text.
// Texts shorter than k yield the singleton hash of the whole folded text.
std::unordered_set<std::uint64_t> shingles(std::string_view text, int k);

// values[i] = min over the set of the i-th seeded hash of each shingle.
MinHashSignature signature(const std::unordered_set<std::uint64_t>& sh,
                           int num_hashes, std::uint64_t seed);

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b);

struct DuplicateEntry {
  std::string kept;
  std::string dropped;
  double similarity;
};

struct DedupResult {
  std::vector<std::string> retained_ids;  // input order preserved
  std::vector<DuplicateEntry> report;
};

// LSH-banded near-duplicate removal. Documents are visited in input order;
// a document is dropped when some earlier retained document shares at least
// one band bucket and has similarity >= threshold, so the earliest member of
// every duplicate cluster is always retained. Deterministic for a fixed
// (corpus order, threshold, seed).
DedupResult deduplicate(
    const std::vector<std::pair<std::string, std::string>>& corpus,
    double threshold, const DedupParams& params = {});

}  // namespace bugloc
