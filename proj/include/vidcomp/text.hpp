#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vidcomp::text {

/// Whitespace split, identical to Python's str.split() with no argument.
std::vector<std::string> split_words(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep = " ");

/// Collapses whitespace runs to single spaces and trims both ends.
std::string normalize_space(std::string_view s);

/// Sentences are maximal token runs ending in '.', '!' or '?' (or the final
/// run). Joining the result with single spaces gives normalize_space(s).
std::vector<std::string> split_sentences(std::string_view s);

std::string to_lower(std::string_view s);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace vidcomp::text
