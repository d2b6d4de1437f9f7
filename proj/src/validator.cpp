#include "vidcomp/validator.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/format.h>

#include "vidcomp/error.hpp"
#include "vidcomp/text.hpp"

namespace vidcomp::validator {

namespace {

std::string strip_punct(std::string_view w) {
  auto is_p = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (!w.empty() && is_p(w.front())) w.remove_prefix(1);
  while (!w.empty() && is_p(w.back())) w.remove_suffix(1);
  return text::to_lower(w);
}

std::set<std::string> word_set(std::string_view s, bool normalize) {
  std::set<std::string> out;
  for (auto& w : text::split_words(s)) {
    if (normalize) {
      auto n = strip_punct(w);
      if (!n.empty()) out.insert(std::move(n));
    } else {
      out.insert(std::move(w));
    }
  }
  return out;
}

}  // namespace

PrecisionRecall word_precision_recall(std::string_view generated, std::string_view original,
                                      bool normalize) {
  const auto p = word_set(generated, normalize);
  const auto o = word_set(original, normalize);
  if (p.empty() || o.empty()) {
    throw Error(ErrorKind::InvalidInput, "precision/recall needs at least one word on each side");
  }
  std::size_t common = 0;
  for (const auto& w : p) common += o.count(w);
  return {static_cast<double>(common) / static_cast<double>(p.size()),
          static_cast<double>(common) / static_cast<double>(o.size())};
}

ValidationReport validate_output(std::string_view generated, std::string_view original,
                                 double threshold, bool normalize) {
  const auto pr = word_precision_recall(generated, original, normalize);
  return {pr.precision, pr.recall, pr.precision >= threshold && pr.recall >= threshold, threshold};
}

std::vector<std::string> check_sample(const CompSample& sample) {
  std::vector<std::string> violations;
  if (sample.negatives.empty()) violations.emplace_back("sample has no negatives");
  for (std::size_t i = 0; i < sample.negatives.size(); ++i) {
    const auto& n = sample.negatives[i];
    if (n.text == sample.positive_text) {
      violations.push_back(fmt::format("negative {} equals the positive text", i));
    }
    if (n.severity != static_cast<int>(n.disruption.atomic_count())) {
      violations.push_back(fmt::format("negative {} has severity {} but {} disruption(s)", i,
                                       n.severity, n.disruption.atomic_count()));
    }
    const bool seg = n.disruption.involves(DisruptionKind::SegMismatch);
    if (seg && !n.video_crop) {
      violations.push_back(fmt::format("negative {} is a segment mismatch without a video crop", i));
    }
    if (!seg && n.video_crop) {
      violations.push_back(fmt::format("negative {} carries a video crop without a segment mismatch", i));
    }
    if (i > 0 && negative_order_less(n, sample.negatives[i - 1])) {
      violations.push_back(fmt::format("negatives {} and {} are out of severity order", i - 1, i));
    }
  }
  return violations;
}

}  // namespace vidcomp::validator
