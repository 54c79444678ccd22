#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bugloc {

// Trims both ends and collapses internal whitespace runs to a single space.
// This is the one normalization used everywhere lines are compared: thought
// validation, negative-example selection and the eval line locator.
std::string normalize_ws(std::string_view s);

std::string rtrim(std::string_view s);

// Lowercases and whitespace-collapses text for shingling.
std::string fold_for_shingles(std::string_view s);

// Splits on '\n'; a trailing newline does not produce a final empty element.
std::vector<std::string> split_lines(std::string_view text);

std::size_t levenshtein(std::string_view a, std::string_view b);

std::uint64_t fnv1a64(std::string_view s);

}  // namespace bugloc
