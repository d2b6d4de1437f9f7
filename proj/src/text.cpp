#include "vidcomp/text.hpp"

#include <cctype>

#include <fmt/format.h>

namespace vidcomp::text {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string normalize_space(std::string_view s) { return join(split_words(s)); }

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> sentences;
  std::vector<std::string> current;
  for (auto& word : split_words(s)) {
    const char last = word.back();
    current.push_back(std::move(word));
    if (last == '.' || last == '!' || last == '?') {
      sentences.push_back(join(current));
      current.clear();
    }
  }
  if (!current.empty()) sentences.push_back(join(current));
  return sentences;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

}  // namespace vidcomp::text
