#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vidcomp/core.hpp"
#include "vidcomp/llm_client.hpp"
#include "vidcomp/positive_builder.hpp"

namespace vidcomp {

/// Action word -> plausible replacements, keyed by lowercase word.
class ActionLexicon {
 public:
  ActionLexicon() = default;

  /// `word<TAB>alt1,alt2,...` per line; '#' starts a comment. Throws
  /// Error(Input) on malformed lines, self-replacements or multi-word entries.
  static ActionLexicon parse_tsv(std::istream& source);
  /// The shipped starter table.
  static ActionLexicon builtin();

  /// Throws Error(InvalidInput) under the same rules as parse_tsv.
  void add(const std::string& word, std::vector<std::string> alternatives);
  /// Entries of `other` replace entries with the same key.
  void merge(const ActionLexicon& other);

  const std::vector<std::string>* find(std::string_view lowercase_word) const;
  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> table_;
};

/// Inclusive range of positions into PositivePair::events_used.
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const noexcept { return last - first + 1; }
  bool contains(std::size_t i) const noexcept { return i >= first && i <= last; }
  bool operator==(const IndexRange&) const = default;
};

struct SegmentSplit {
  IndexRange a;
  IndexRange b;
  TimeInterval video_crop_a;
  TimeInterval video_crop_b;
};

/// Both ranges hold >= 2 captions and differ in >= 2 captions.
bool is_valid_split(const IndexRange& a, const IndexRange& b, std::size_t event_count);

/// Reorder attempts before falling back to rotations.
inline constexpr int kReorderAttempts = 16;

// Every generator below is a pure function of its arguments and throws
// Error(NotDisruptable) when the pair cannot carry the disruption.

NegativeSample gen_temp_reorder(const PositivePair& pair, std::uint64_t seed);

NegativeSample gen_action_replace(const PositivePair& pair, const ActionLexicon& lexicon,
                                  std::uint64_t seed);

SegmentSplit sample_segment_split(const PositivePair& pair, std::uint64_t seed);

/// Paragraph built from the captions of one split range, in chronological order.
std::string range_paragraph(const PositivePair& pair, const IndexRange& range);

/// Two crop samples: crop A against the text of range B, and the reverse.
std::array<CompSample, 2> gen_seg_mismatch(const PositivePair& pair, const SegmentSplit& split,
                                           Split dataset_split = Split::Train);

struct MultiResult {
  NegativeSample negative;
  // Set when SegMismatch is part of the recipe; the negative then belongs to
  // a sample over video_crop_a whose positive is range_paragraph(pair, a).
  std::optional<SegmentSplit> split;
};

/// Applies the atomic disruptions in order to one evolving paragraph.
MultiResult gen_multi_detailed(const PositivePair& pair, const std::vector<DisruptionKind>& kinds,
                               const ActionLexicon& lexicon, std::uint64_t seed);

NegativeSample gen_multi(const PositivePair& pair, const std::vector<DisruptionKind>& kinds,
                         const ActionLexicon& lexicon, std::uint64_t seed);

/// Sends the prompt for `kind` with `text` filled in. The caller must gate the
/// result with validator::validate_output. Throws Error(LLMUnavailable).
std::string rewrite_with_llm(const std::string& text, PromptKind kind, LlmClient& client);

struct GenerationConfig {
  ActionLexicon lexicon = ActionLexicon::builtin();
  std::vector<DisruptionKind> multi_recipe{DisruptionKind::TempReorder,
                                           DisruptionKind::ActionReplace};
  // Multi-disruptions are training-only unless forced.
  std::optional<bool> include_multi;
  LlmClient* llm = nullptr;
  double validation_threshold = 0.8;
  std::uint64_t seed = 0;
};

/// Full pipeline for one positive: a full-span sample carrying reorder,
/// action-replace (and multi on train) negatives, plus the two seg-mismatch
/// crop samples when the pair has >= 4 events. Samples without any negative
/// are not emitted.
std::vector<CompSample> generate_samples(const PositivePair& pair, const GenerationConfig& config,
                                         Split split);

}  // namespace vidcomp
