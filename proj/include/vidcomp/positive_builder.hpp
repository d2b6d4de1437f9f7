#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vidcomp/core.hpp"
#include "vidcomp/ingest.hpp"

namespace vidcomp {

class LlmClient;

enum class StructurerMode { None, RuleBased, ExternalLLM };

std::string_view to_string(StructurerMode mode);
std::optional<StructurerMode> parse_structurer_mode(std::string_view name);

/// How sentences are joined into a paragraph. ExternalLLM needs a client; its
/// output must pass the word-overlap gate or the rule-based text is used.
struct TemporalStructurer {
  StructurerMode mode = StructurerMode::RuleBased;
  LlmClient* client = nullptr;
  double validation_threshold = 0.8;
};

struct PositivePair {
  std::string video_id;
  TimeInterval video_interval;
  std::vector<EventCaption> events_used;
  std::string paragraph;
  StructurerMode structurer_used = StructurerMode::None;

  bool operator==(const PositivePair&) const = default;
};

struct PositiveConfig {
  double iou_threshold = 0.5;
  double cover_frac = 0.8;
  int max_events = 2;
  ingest::DatasetFormat format = ingest::DatasetFormat::ActivityNetStyle;
  TemporalStructurer structurer;
};

/// Ascending start; equal starts put the shorter event first, then file order.
CaptionTrack sort_events(CaptionTrack track);

/// Drops captions whose interval covers (coverage >= cover_frac) more than
/// max_events event intervals, its own included. Throws EmptyTrack if nothing
/// survives.
CaptionTrack filter_global_captions(CaptionTrack track, double cover_frac = 0.8,
                                    int max_events = 2);

/// Greedy chronological pass: when two captions overlap with IoU above the
/// threshold the shorter one goes; on equal length the earlier one stays.
CaptionTrack dedup_overlaps(CaptionTrack track, double iou_threshold = 0.5);

/// The connective placed before sentence `position` (1-based among
/// sentences 2..n) of an n-sentence paragraph.
std::string_view forward_connective(std::size_t position, std::size_t count);

/// Plain (None) or connective-prefixed (RuleBased) join of sentences.
std::string render_paragraph(const std::vector<std::string>& sentences, StructurerMode mode);

std::pair<std::string, StructurerMode> structure_paragraph(const std::vector<EventCaption>& events,
                                                           const TemporalStructurer& structurer);

PositivePair build_positive(const CaptionTrack& track, const PositiveConfig& config);

}  // namespace vidcomp
