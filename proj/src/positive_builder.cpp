#include "vidcomp/positive_builder.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "vidcomp/error.hpp"
#include "vidcomp/llm_client.hpp"
#include "vidcomp/text.hpp"
#include "vidcomp/validator.hpp"

namespace vidcomp {

namespace {

constexpr std::string_view kConnectives[] = {"Then,", "Next,", "After that,", "Later,"};
constexpr std::string_view kLastConnective = "Finally,";

std::vector<std::string> sentences_of(const std::vector<EventCaption>& events) {
  std::vector<std::string> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(e.text);
  return out;
}

}  // namespace

std::string_view to_string(StructurerMode mode) {
  switch (mode) {
    case StructurerMode::None: return "none";
    case StructurerMode::RuleBased: return "rule";
    case StructurerMode::ExternalLLM: return "llm";
  }
  return "none";
}

std::optional<StructurerMode> parse_structurer_mode(std::string_view name) {
  if (name == "none") return StructurerMode::None;
  if (name == "rule") return StructurerMode::RuleBased;
  if (name == "llm") return StructurerMode::ExternalLLM;
  return std::nullopt;
}

CaptionTrack sort_events(CaptionTrack track) {
  std::stable_sort(track.events.begin(), track.events.end(),
                   [](const EventCaption& a, const EventCaption& b) {
                     if (a.interval.start() != b.interval.start()) {
                       return a.interval.start() < b.interval.start();
                     }
                     return a.interval.length() < b.interval.length();
                   });
  return track;
}

CaptionTrack filter_global_captions(CaptionTrack track, double cover_frac, int max_events) {
  std::vector<EventCaption> kept;
  for (const auto& candidate : track.events) {
    const auto covered = std::count_if(
        track.events.begin(), track.events.end(), [&](const EventCaption& other) {
          return coverage_fraction(candidate.interval, other.interval) >= cover_frac;
        });
    if (covered <= max_events) kept.push_back(candidate);
  }
  if (kept.empty()) {
    throw Error(ErrorKind::EmptyTrack,
                fmt::format("'{}': every caption was filtered as global", track.video_id));
  }
  track.events = std::move(kept);
  return track;
}

CaptionTrack dedup_overlaps(CaptionTrack track, double iou_threshold) {
  std::vector<EventCaption> survivors;
  for (const auto& candidate : track.events) {
    bool dominated = false;
    std::vector<std::size_t> displaced;
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      if (temporal_iou(candidate.interval, survivors[i].interval) <= iou_threshold) continue;
      if (candidate.interval.length() > survivors[i].interval.length()) {
        displaced.push_back(i);
      } else {
        dominated = true;
        break;
      }
    }
    if (dominated) continue;
    for (auto it = displaced.rbegin(); it != displaced.rend(); ++it) {
      survivors.erase(survivors.begin() + static_cast<std::ptrdiff_t>(*it));
    }
    survivors.push_back(candidate);
  }
  if (survivors.empty()) {
    throw Error(ErrorKind::EmptyTrack, fmt::format("'{}': no caption survived dedup", track.video_id));
  }
  track.events = std::move(survivors);
  return sort_events(std::move(track));
}

std::string_view forward_connective(std::size_t position, std::size_t count) {
  if (position + 1 == count) return kLastConnective;
  return kConnectives[(position - 1) % std::size(kConnectives)];
}

std::string render_paragraph(const std::vector<std::string>& sentences, StructurerMode mode) {
  if (mode == StructurerMode::None) return text::join(sentences);
  std::string out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (i) {
      out += ' ';
      out += forward_connective(i, sentences.size());
      out += ' ';
    }
    out += sentences[i];
  }
  return out;
}

std::pair<std::string, StructurerMode> structure_paragraph(const std::vector<EventCaption>& events,
                                                           const TemporalStructurer& structurer) {
  if (events.empty()) throw Error(ErrorKind::InvalidInput, "cannot structure an empty event list");
  const auto sentences = sentences_of(events);
  switch (structurer.mode) {
    case StructurerMode::None:
      return {render_paragraph(sentences, StructurerMode::None), StructurerMode::None};
    case StructurerMode::RuleBased:
      break;
    case StructurerMode::ExternalLLM: {
      const auto plain = render_paragraph(sentences, StructurerMode::None);
      if (!structurer.client) {
        spdlog::warn("LLM structuring requested without a client; using rule-based connectives");
        break;
      }
      try {
        auto rewritten = text::normalize_space(
            structurer.client->complete(render_prompt(PromptKind::Structure, plain)));
        if (!rewritten.empty() &&
            validator::validate_output(rewritten, plain, structurer.validation_threshold).accepted) {
          return {std::move(rewritten), StructurerMode::ExternalLLM};
        }
        spdlog::info("LLM-structured paragraph rejected by the overlap gate; using rule-based");
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::LLMUnavailable) throw;
        spdlog::warn("LLM structuring unavailable ({}); using rule-based connectives", e.what());
      }
      break;
    }
  }
  return {render_paragraph(sentences, StructurerMode::RuleBased), StructurerMode::RuleBased};
}

PositivePair build_positive(const CaptionTrack& track, const PositiveConfig& config) {
  validate_track(track);
  auto sorted = sort_events(track);
  if (config.format == ingest::DatasetFormat::ActivityNetStyle) {
    sorted = filter_global_captions(std::move(sorted), config.cover_frac, config.max_events);
    sorted = dedup_overlaps(std::move(sorted), config.iou_threshold);
  }
  auto [paragraph, used] = structure_paragraph(sorted.events, config.structurer);
  double lo = sorted.events.front().interval.start();
  double hi = sorted.events.front().interval.end();
  for (const auto& e : sorted.events) {
    lo = std::min(lo, e.interval.start());
    hi = std::max(hi, e.interval.end());
  }
  return PositivePair{track.video_id, TimeInterval(lo, hi), std::move(sorted.events),
                      std::move(paragraph), used};
}

}  // namespace vidcomp
