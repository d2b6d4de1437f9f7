#include "vidcomp/core.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "vidcomp/error.hpp"
#include "vidcomp/text.hpp"

namespace vidcomp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "InputError";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::EmptyTrack: return "EmptyTrack";
    case ErrorKind::NotDisruptable: return "NotDisruptable";
    case ErrorKind::LLMUnavailable: return "LLMUnavailable";
    case ErrorKind::DegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorKind::InvalidEmbedding: return "InvalidEmbedding";
    case ErrorKind::NumericalError: return "NumericalError";
    case ErrorKind::TrainingDiverged: return "TrainingDiverged";
    case ErrorKind::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorKind::IncompleteEvaluation: return "IncompleteEvaluation";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

TimeInterval::TimeInterval(double start, double end) : start_(start), end_(end) {
  if (!std::isfinite(start) || !std::isfinite(end) || start < 0.0 || !(start < end)) {
    throw Error(ErrorKind::InvalidInput,
                fmt::format("invalid time interval [{}, {}]", start, end));
  }
}

double temporal_iou(const TimeInterval& a, const TimeInterval& b) noexcept {
  const double inter = std::max(0.0, std::min(a.end(), b.end()) - std::max(a.start(), b.start()));
  const double uni = a.length() + b.length() - inter;
  return inter / uni;
}

double coverage_fraction(const TimeInterval& covering, const TimeInterval& covered) noexcept {
  const double inter = std::max(
      0.0, std::min(covering.end(), covered.end()) - std::max(covering.start(), covered.start()));
  return std::min(1.0, inter / covered.length());
}

void validate_track(const CaptionTrack& track) {
  if (track.events.empty()) {
    throw Error(ErrorKind::InvalidInput, fmt::format("track '{}' has no events", track.video_id));
  }
  if (!(track.duration > 0.0)) {
    throw Error(ErrorKind::InvalidInput,
                fmt::format("track '{}' has non-positive duration", track.video_id));
  }
  for (const auto& e : track.events) {
    if (text::split_words(e.text).empty()) {
      throw Error(ErrorKind::InvalidInput,
                  fmt::format("track '{}' event {} has empty text", track.video_id, e.index));
    }
    if (e.interval.end() > track.duration + kEndTolerance) {
      throw Error(ErrorKind::InvalidInput,
                  fmt::format("track '{}' event {} ends past duration", track.video_id, e.index));
    }
  }
}

std::string_view to_string(DisruptionKind kind) {
  switch (kind) {
    case DisruptionKind::TempReorder: return "temp-reorder";
    case DisruptionKind::ActionReplace: return "action-replace";
    case DisruptionKind::SegMismatch: return "seg-mismatch";
  }
  return "unknown";
}

std::optional<DisruptionKind> parse_disruption_kind(std::string_view name) {
  for (auto k : kAtomicKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

Disruption Disruption::atomic(DisruptionKind kind) { return Disruption({kind}); }

Disruption Disruption::multi(std::vector<DisruptionKind> kinds) {
  auto sorted = kinds;
  std::sort(sorted.begin(), sorted.end());
  if (kinds.size() < 2 || std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorKind::InvalidInput,
                "multi-disruption needs at least two distinct atomic disruptions");
  }
  return Disruption(std::move(kinds));
}

Disruption Disruption::parse(std::string_view label) {
  constexpr std::string_view prefix = "multi:";
  if (label.starts_with(prefix)) {
    std::vector<DisruptionKind> kinds;
    std::string_view rest = label.substr(prefix.size());
    while (!rest.empty()) {
      const auto plus = rest.find('+');
      const auto part = rest.substr(0, plus);
      const auto kind = parse_disruption_kind(part);
      if (!kind) throw Error(ErrorKind::InvalidInput, fmt::format("unknown disruption '{}'", part));
      kinds.push_back(*kind);
      if (plus == std::string_view::npos) break;
      rest = rest.substr(plus + 1);
    }
    return multi(std::move(kinds));
  }
  const auto kind = parse_disruption_kind(label);
  if (!kind) throw Error(ErrorKind::InvalidInput, fmt::format("unknown disruption '{}'", label));
  return atomic(*kind);
}

bool Disruption::involves(DisruptionKind kind) const noexcept {
  return std::find(kinds_.begin(), kinds_.end(), kind) != kinds_.end();
}

std::string Disruption::label() const {
  if (!is_multi()) return std::string(to_string(kinds_.front()));
  std::string out = "multi:";
  for (std::size_t i = 0; i < kinds_.size(); ++i) {
    if (i) out += '+';
    out += to_string(kinds_[i]);
  }
  return out;
}

std::strong_ordering Disruption::operator<=>(const Disruption& other) const {
  if (auto c = kinds_.size() <=> other.kinds_.size(); c != 0) return c;
  return std::lexicographical_compare_three_way(kinds_.begin(), kinds_.end(),
                                                other.kinds_.begin(), other.kinds_.end());
}

std::string_view to_string(Provenance p) {
  return p == Provenance::RuleBased ? "rule" : "llm";
}

std::optional<Provenance> parse_provenance(std::string_view name) {
  if (name == "rule") return Provenance::RuleBased;
  if (name == "llm") return Provenance::ExternalLLM;
  return std::nullopt;
}

bool negative_order_less(const NegativeSample& a, const NegativeSample& b) {
  if (a.severity != b.severity) return a.severity < b.severity;
  return a.disruption < b.disruption;
}

void sort_negatives(std::vector<NegativeSample>& negatives) {
  std::stable_sort(negatives.begin(), negatives.end(), negative_order_less);
}

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "val"; }

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  return std::nullopt;
}

std::string video_ref(const CompSample& sample) {
  return fmt::format("{}#{:.3f}-{:.3f}", sample.video_id, sample.video_interval.start(),
                     sample.video_interval.end());
}

std::string text_ref(std::string_view paragraph) {
  return "txt:" + text::hex64(text::fnv1a64(paragraph));
}

}  // namespace vidcomp
