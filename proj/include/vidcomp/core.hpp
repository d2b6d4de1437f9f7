#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vidcomp {

/// Closed time span on a video timeline, in seconds. Always start < end.
class TimeInterval {
 public:
  /// Throws Error(InvalidInput) unless 0 <= start < end and both are finite.
  TimeInterval(double start, double end);

  double start() const noexcept { return start_; }
  double end() const noexcept { return end_; }
  double length() const noexcept { return end_ - start_; }

  bool operator==(const TimeInterval&) const = default;

 private:
  double start_;
  double end_;
};

double temporal_iou(const TimeInterval& a, const TimeInterval& b) noexcept;

/// Fraction of `covered` lying inside `covering`.
double coverage_fraction(const TimeInterval& covering,
                         const TimeInterval& covered) noexcept;

struct EventCaption {
  std::string text;
  TimeInterval interval;
  std::size_t index = 0;

  bool operator==(const EventCaption&) const = default;
};

/// Annotation noise allowance for events ending past the declared duration.
inline constexpr double kEndTolerance = 0.5;

struct CaptionTrack {
  std::string video_id;
  double duration = 0.0;
  std::vector<EventCaption> events;
};

/// Throws Error(InvalidInput) when the track breaks its invariants.
void validate_track(const CaptionTrack& track);

// Declaration order is the canonical tie-break order within a severity level.
enum class DisruptionKind { TempReorder = 0, ActionReplace = 1, SegMismatch = 2 };

inline constexpr DisruptionKind kAtomicKinds[] = {
    DisruptionKind::TempReorder, DisruptionKind::ActionReplace,
    DisruptionKind::SegMismatch};

std::string_view to_string(DisruptionKind kind);
std::optional<DisruptionKind> parse_disruption_kind(std::string_view name);

/// An atomic disruption or an ordered combination of at least two distinct
/// atomic disruptions.
class Disruption {
 public:
  static Disruption atomic(DisruptionKind kind);
  /// Throws Error(InvalidInput) unless kinds holds >= 2 distinct entries.
  static Disruption multi(std::vector<DisruptionKind> kinds);
  /// Inverse of label(); throws Error(InvalidInput) on unknown text.
  static Disruption parse(std::string_view label);

  bool is_multi() const noexcept { return kinds_.size() > 1; }
  bool involves(DisruptionKind kind) const noexcept;
  const std::vector<DisruptionKind>& kinds() const noexcept { return kinds_; }
  std::size_t atomic_count() const noexcept { return kinds_.size(); }

  /// "temp-reorder", ... for atomic; "multi:temp-reorder+action-replace" for
  /// combinations.
  std::string label() const;

  bool operator==(const Disruption&) const = default;
  std::strong_ordering operator<=>(const Disruption& other) const;

 private:
  explicit Disruption(std::vector<DisruptionKind> kinds)
      : kinds_(std::move(kinds)) {}
  std::vector<DisruptionKind> kinds_;
};

enum class Provenance { RuleBased, ExternalLLM };

std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view name);

struct NegativeSample {
  std::string text;
  Disruption disruption = Disruption::atomic(DisruptionKind::TempReorder);
  int severity = 1;
  std::optional<TimeInterval> video_crop;
  Provenance provenance = Provenance::RuleBased;

  bool operator==(const NegativeSample&) const = default;
};

/// Severity first, then canonical disruption order.
bool negative_order_less(const NegativeSample& a, const NegativeSample& b);
void sort_negatives(std::vector<NegativeSample>& negatives);

enum class Split { Train, Val };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view name);

struct CompSample {
  std::string video_id;
  TimeInterval video_interval;
  std::string positive_text;
  std::vector<NegativeSample> negatives;
  Split split = Split::Train;

  bool operator==(const CompSample&) const = default;
};

/// Key under which a sample's video (or crop) is looked up in embedding files.
std::string video_ref(const CompSample& sample);
/// Key under which a paragraph is looked up in embedding files.
std::string text_ref(std::string_view text);

}  // namespace vidcomp
