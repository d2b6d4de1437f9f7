#include "vidcomp/negative_generator.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>
#include <utility>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "vidcomp/error.hpp"
#include "vidcomp/rng.hpp"
#include "vidcomp/text.hpp"
#include "vidcomp/validator.hpp"
#include "vidcomp_assets.hpp"

namespace vidcomp {

namespace {

Error not_disruptable(const PositivePair& pair, std::string_view why) {
  return Error(ErrorKind::NotDisruptable, fmt::format("'{}': {}", pair.video_id, why));
}

// Sentences in their current order, each tagged with the event it came from.
struct Draft {
  std::vector<std::size_t> source;
  std::vector<std::string> sentences;
};

Draft initial_draft(const PositivePair& pair) {
  Draft d;
  for (std::size_t i = 0; i < pair.events_used.size(); ++i) {
    d.source.push_back(i);
    d.sentences.push_back(pair.events_used[i].text);
  }
  return d;
}

StructurerMode negative_mode(const PositivePair& pair) {
  return pair.structurer_used == StructurerMode::None ? StructurerMode::None
                                                      : StructurerMode::RuleBased;
}

Draft permuted(const Draft& d, const std::vector<std::size_t>& perm) {
  Draft out;
  for (auto p : perm) {
    out.source.push_back(d.source[p]);
    out.sentences.push_back(d.sentences[p]);
  }
  return out;
}

void reorder_stage(Draft& d, Rng& rng, StructurerMode mode, const PositivePair& pair) {
  const std::size_t n = d.sentences.size();
  if (n < 2) throw not_disruptable(pair, "temporal reordering needs at least two events");
  const auto before = render_paragraph(d.sentences, mode);
  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), 0);
  for (int attempt = 0; attempt < kReorderAttempts; ++attempt) {
    auto perm = identity;
    rng.shuffle(std::span(perm));
    if (perm == identity) continue;
    auto candidate = permuted(d, perm);
    if (render_paragraph(candidate.sentences, mode) != before) {
      d = std::move(candidate);
      return;
    }
  }
  for (std::size_t shift = 1; shift < n; ++shift) {
    auto perm = identity;
    std::rotate(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(shift), perm.end());
    auto candidate = permuted(d, perm);
    if (render_paragraph(candidate.sentences, mode) != before) {
      d = std::move(candidate);
      return;
    }
  }
  throw not_disruptable(pair, "every ordering renders the same text");
}

struct TokenParts {
  std::string_view prefix;
  std::string_view core;
  std::string_view suffix;
};

TokenParts split_token(std::string_view token) {
  auto is_p = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  std::size_t b = 0;
  while (b < token.size() && is_p(token[b])) ++b;
  std::size_t e = token.size();
  while (e > b && is_p(token[e - 1])) --e;
  return {token.substr(0, b), token.substr(b, e - b), token.substr(e)};
}

// Returns the edited sentence as (before, after).
std::pair<std::string, std::string> action_stage(Draft& d, const ActionLexicon& lexicon, Rng& rng,
                                                 const PositivePair& pair) {
  struct Hit {
    std::size_t sentence;
    std::size_t token;
  };
  std::vector<std::vector<Hit>> by_sentence;
  for (std::size_t s = 0; s < d.sentences.size(); ++s) {
    std::vector<Hit> hits;
    const auto tokens = text::split_words(d.sentences[s]);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (lexicon.find(text::to_lower(split_token(tokens[t]).core))) hits.push_back({s, t});
    }
    if (!hits.empty()) by_sentence.push_back(std::move(hits));
  }
  if (by_sentence.empty()) throw not_disruptable(pair, "no lexicon action word present");

  const auto& hits = by_sentence[rng.index(by_sentence.size())];
  const Hit hit = hits[rng.index(hits.size())];
  auto tokens = text::split_words(d.sentences[hit.sentence]);
  const auto parts = split_token(tokens[hit.token]);
  const auto& alternatives = *lexicon.find(text::to_lower(parts.core));
  std::string replacement = alternatives[rng.index(alternatives.size())];
  if (std::isupper(static_cast<unsigned char>(parts.core.front()))) {
    replacement.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement.front())));
  }
  tokens[hit.token] = fmt::format("{}{}{}", parts.prefix, replacement, parts.suffix);
  auto before = std::exchange(d.sentences[hit.sentence], text::join(tokens));
  return {std::move(before), d.sentences[hit.sentence]};
}

TimeInterval crop_of(const PositivePair& pair, const IndexRange& r) {
  double lo = pair.events_used[r.first].interval.start();
  double hi = pair.events_used[r.first].interval.end();
  for (std::size_t i = r.first; i <= r.last; ++i) {
    lo = std::min(lo, pair.events_used[i].interval.start());
    hi = std::max(hi, pair.events_used[i].interval.end());
  }
  return TimeInterval(lo, hi);
}

std::uint64_t stage_seed(std::uint64_t seed, std::size_t stage) {
  return derive_seed(seed, {"stage", std::to_string(stage)});
}

}  // namespace

ActionLexicon ActionLexicon::parse_tsv(std::istream& source) {
  ActionLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(source, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (text::normalize_space(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorKind::Input, fmt::format("lexicon line {}: expected word<TAB>alternatives", lineno));
    }
    std::vector<std::string> alts;
    std::stringstream ss(line.substr(tab + 1));
    for (std::string alt; std::getline(ss, alt, ',');) {
      if (auto a = text::normalize_space(alt); !a.empty()) alts.push_back(std::move(a));
    }
    try {
      lex.add(text::normalize_space(line.substr(0, tab)), std::move(alts));
    } catch (const Error& e) {
      throw Error(ErrorKind::Input, fmt::format("lexicon line {}: {}", lineno, e.what()));
    }
  }
  return lex;
}

ActionLexicon ActionLexicon::builtin() {
  std::istringstream in{std::string(assets::kActionLexicon)};
  return parse_tsv(in);
}

void ActionLexicon::add(const std::string& word, std::vector<std::string> alternatives) {
  const auto key = text::to_lower(word);
  if (key.empty() || text::split_words(key).size() != 1) {
    throw Error(ErrorKind::InvalidInput, fmt::format("lexicon word '{}' must be a single token", word));
  }
  if (alternatives.empty()) {
    throw Error(ErrorKind::InvalidInput, fmt::format("lexicon word '{}' has no alternatives", word));
  }
  for (const auto& alt : alternatives) {
    if (text::split_words(alt).size() != 1) {
      throw Error(ErrorKind::InvalidInput, fmt::format("alternative '{}' must be a single token", alt));
    }
    if (text::to_lower(alt) == key) {
      throw Error(ErrorKind::InvalidInput, fmt::format("lexicon word '{}' maps to itself", word));
    }
  }
  table_[key] = std::move(alternatives);
}

void ActionLexicon::merge(const ActionLexicon& other) {
  for (const auto& [k, v] : other.table_) table_[k] = v;
}

const std::vector<std::string>* ActionLexicon::find(std::string_view lowercase_word) const {
  const auto it = table_.find(lowercase_word);
  return it == table_.end() ? nullptr : &it->second;
}

bool is_valid_split(const IndexRange& a, const IndexRange& b, std::size_t event_count) {
  if (a.first > a.last || b.first > b.last) return false;
  if (a.last >= event_count || b.last >= event_count) return false;
  if (a.size() < 2 || b.size() < 2) return false;
  const std::size_t lo = std::max(a.first, b.first);
  const std::size_t hi = std::min(a.last, b.last);
  const std::size_t overlap = hi >= lo ? hi - lo + 1 : 0;
  return a.size() + b.size() - 2 * overlap >= 2;
}

NegativeSample gen_temp_reorder(const PositivePair& pair, std::uint64_t seed) {
  Rng rng(seed);
  auto draft = initial_draft(pair);
  const auto mode = negative_mode(pair);
  reorder_stage(draft, rng, mode, pair);
  auto text = render_paragraph(draft.sentences, mode);
  if (text == pair.paragraph) throw not_disruptable(pair, "reordered text equals the positive");
  return NegativeSample{std::move(text), Disruption::atomic(DisruptionKind::TempReorder), 1,
                        std::nullopt, Provenance::RuleBased};
}

NegativeSample gen_action_replace(const PositivePair& pair, const ActionLexicon& lexicon,
                                  std::uint64_t seed) {
  Rng rng(seed);
  auto draft = initial_draft(pair);
  const auto [before, after] = action_stage(draft, lexicon, rng, pair);
  const auto mode = negative_mode(pair);
  std::string text = render_paragraph(draft.sentences, mode);
  // An LLM-structured positive is edited in place so its own wording survives.
  if (render_paragraph(initial_draft(pair).sentences, mode) != pair.paragraph) {
    if (const auto pos = pair.paragraph.find(before); pos != std::string::npos) {
      text = pair.paragraph;
      text.replace(pos, before.size(), after);
    }
  }
  return NegativeSample{std::move(text), Disruption::atomic(DisruptionKind::ActionReplace), 1,
                        std::nullopt, Provenance::RuleBased};
}

SegmentSplit sample_segment_split(const PositivePair& pair, std::uint64_t seed) {
  const std::size_t n = pair.events_used.size();
  if (n < 4) throw not_disruptable(pair, "segment mismatch needs at least four events");
  std::vector<IndexRange> ranges;
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t l = f + 1; l < n; ++l) ranges.push_back({f, l});
  }
  // Unordered valid splits, each listed once with the earlier range first.
  std::vector<std::pair<IndexRange, IndexRange>> splits;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    for (std::size_t j = i + 1; j < ranges.size(); ++j) {
      if (is_valid_split(ranges[i], ranges[j], n)) splits.emplace_back(ranges[i], ranges[j]);
    }
  }
  Rng rng(seed);
  const auto [a, b] = splits[rng.index(splits.size())];
  return SegmentSplit{a, b, crop_of(pair, a), crop_of(pair, b)};
}

std::string range_paragraph(const PositivePair& pair, const IndexRange& range) {
  std::vector<std::string> sentences;
  for (std::size_t i = range.first; i <= range.last; ++i) sentences.push_back(pair.events_used[i].text);
  return render_paragraph(sentences, negative_mode(pair));
}

std::array<CompSample, 2> gen_seg_mismatch(const PositivePair& pair, const SegmentSplit& split,
                                           Split dataset_split) {
  if (!is_valid_split(split.a, split.b, pair.events_used.size())) {
    throw Error(ErrorKind::InvalidInput, "segment split violates its invariants");
  }
  const auto text_a = range_paragraph(pair, split.a);
  const auto text_b = range_paragraph(pair, split.b);
  if (text_a == text_b) throw not_disruptable(pair, "split ranges render identical text");
  auto make = [&](const TimeInterval& crop, const std::string& pos, const std::string& neg) {
    return CompSample{pair.video_id,
                      crop,
                      pos,
                      {NegativeSample{neg, Disruption::atomic(DisruptionKind::SegMismatch), 1, crop,
                                      Provenance::RuleBased}},
                      dataset_split};
  };
  return {make(split.video_crop_a, text_a, text_b), make(split.video_crop_b, text_b, text_a)};
}

MultiResult gen_multi_detailed(const PositivePair& pair, const std::vector<DisruptionKind>& kinds,
                               const ActionLexicon& lexicon, std::uint64_t seed) {
  auto disruption = Disruption::multi(kinds);
  const auto mode = negative_mode(pair);
  auto draft = initial_draft(pair);
  std::optional<SegmentSplit> split;
  for (std::size_t stage = 0; stage < kinds.size(); ++stage) {
    Rng rng(stage_seed(seed, stage));
    switch (kinds[stage]) {
      case DisruptionKind::TempReorder:
        reorder_stage(draft, rng, mode, pair);
        break;
      case DisruptionKind::ActionReplace:
        action_stage(draft, lexicon, rng, pair);
        break;
      case DisruptionKind::SegMismatch: {
        split = sample_segment_split(pair, rng.next());
        Draft kept;
        for (std::size_t i = 0; i < draft.source.size(); ++i) {
          if (split->b.contains(draft.source[i])) {
            kept.source.push_back(draft.source[i]);
            kept.sentences.push_back(draft.sentences[i]);
          }
        }
        draft = std::move(kept);
        break;
      }
    }
  }
  auto text = render_paragraph(draft.sentences, mode);
  const auto& reference = split ? range_paragraph(pair, split->a) : pair.paragraph;
  if (text == reference) throw not_disruptable(pair, "combined disruption left the text unchanged");
  std::optional<TimeInterval> crop;
  if (split) crop = split->video_crop_a;
  const int severity = static_cast<int>(kinds.size());
  return {NegativeSample{std::move(text), std::move(disruption), severity, crop, Provenance::RuleBased},
          split};
}

NegativeSample gen_multi(const PositivePair& pair, const std::vector<DisruptionKind>& kinds,
                         const ActionLexicon& lexicon, std::uint64_t seed) {
  return gen_multi_detailed(pair, kinds, lexicon, seed).negative;
}

std::string rewrite_with_llm(const std::string& text, PromptKind kind, LlmClient& client) {
  return text::normalize_space(client.complete(render_prompt(kind, text)));
}

namespace {

std::optional<NegativeSample> try_llm_negative(const PositivePair& pair, DisruptionKind kind,
                                               const GenerationConfig& config) {
  if (!config.llm) return std::nullopt;
  const auto prompt = kind == DisruptionKind::TempReorder ? PromptKind::Reorder : PromptKind::ActionReplace;
  try {
    auto out = rewrite_with_llm(pair.paragraph, prompt, *config.llm);
    if (out.empty() || out == pair.paragraph) return std::nullopt;
    if (!validator::validate_output(out, pair.paragraph, config.validation_threshold).accepted) {
      spdlog::info("'{}': LLM {} rejected by the overlap gate", pair.video_id, to_string(kind));
      return std::nullopt;
    }
    return NegativeSample{std::move(out), Disruption::atomic(kind), 1, std::nullopt,
                          Provenance::ExternalLLM};
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::LLMUnavailable) throw;
    spdlog::warn("'{}': LLM unavailable ({}); using rule-based {}", pair.video_id, e.what(),
                 to_string(kind));
    return std::nullopt;
  }
}

template <typename Fn>
std::optional<NegativeSample> unless_not_disruptable(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotDisruptable) throw;
    spdlog::debug("{}", e.what());
    return std::nullopt;
  }
}

}  // namespace

std::vector<CompSample> generate_samples(const PositivePair& pair, const GenerationConfig& config,
                                         Split split) {
  auto seed_for = [&](std::string_view label) {
    return derive_seed(config.seed, {pair.video_id, label});
  };

  CompSample full{pair.video_id, pair.video_interval, pair.paragraph, {}, split};
  std::vector<std::string> atomic_texts;

  auto reorder = try_llm_negative(pair, DisruptionKind::TempReorder, config);
  if (!reorder) {
    reorder = unless_not_disruptable([&] { return gen_temp_reorder(pair, seed_for("temp-reorder")); });
  }
  auto replace = try_llm_negative(pair, DisruptionKind::ActionReplace, config);
  if (!replace) {
    replace = unless_not_disruptable(
        [&] { return gen_action_replace(pair, config.lexicon, seed_for("action-replace")); });
  }
  for (auto* neg : {&reorder, &replace}) {
    if (*neg && (*neg)->text != pair.paragraph) {
      atomic_texts.push_back((*neg)->text);
      full.negatives.push_back(std::move(**neg));
    }
  }

  std::vector<CompSample> crops;
  if (pair.events_used.size() >= 4) {
    try {
      auto [a, b] = gen_seg_mismatch(pair, sample_segment_split(pair, seed_for("seg-mismatch")), split);
      atomic_texts.push_back(a.negatives.front().text);
      atomic_texts.push_back(b.negatives.front().text);
      crops.push_back(std::move(a));
      crops.push_back(std::move(b));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotDisruptable) throw;
    }
  }

  if (config.include_multi.value_or(split == Split::Train) && config.multi_recipe.size() >= 2) {
    constexpr int kMultiAttempts = 4;
    for (int attempt = 0; attempt < kMultiAttempts; ++attempt) {
      std::optional<MultiResult> multi;
      try {
        multi = gen_multi_detailed(pair, config.multi_recipe, config.lexicon,
                                   seed_for(fmt::format("multi/{}", attempt)));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotDisruptable) throw;
        break;
      }
      if (std::find(atomic_texts.begin(), atomic_texts.end(), multi->negative.text) != atomic_texts.end()) {
        continue;
      }
      if (!multi->split) {
        full.negatives.push_back(std::move(multi->negative));
        break;
      }
      const auto& crop = multi->split->video_crop_a;
      const auto positive = range_paragraph(pair, multi->split->a);
      auto it = std::find_if(crops.begin(), crops.end(), [&](const CompSample& s) {
        return s.video_interval == crop && s.positive_text == positive;
      });
      if (it == crops.end()) {
        crops.push_back(CompSample{pair.video_id, crop, positive, {}, split});
        it = std::prev(crops.end());
      }
      it->negatives.push_back(std::move(multi->negative));
      break;
    }
  }

  std::vector<CompSample> out;
  if (!full.negatives.empty()) out.push_back(std::move(full));
  for (auto& c : crops) out.push_back(std::move(c));
  for (auto& s : out) sort_negatives(s.negatives);
  return out;
}

}  // namespace vidcomp
