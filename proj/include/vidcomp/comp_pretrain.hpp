#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vidcomp/core.hpp"
#include "vidcomp/ingest.hpp"

namespace vidcomp::pretrain {

inline constexpr int kDefaultStackSize = 4;
inline constexpr int kMinStackSize = 2;
inline constexpr int kMaxStackSize = 8;

/// Half-open range [begin, end) into StackedPair::sentences.
struct SentenceRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const SentenceRange&) const = default;
};

/// Short clips concatenated into one pseudo long-form video and paragraph.
struct StackedPair {
  std::vector<std::string> clip_ids;
  std::vector<std::string> captions;   // one per clip, whitespace-normalized
  std::vector<std::string> sentences;  // all captions split into sentences, in order
  std::vector<SentenceRange> segment_boundaries;
  std::string stacked_caption;
  double total_duration = 0.0;

  std::size_t size() const noexcept { return clip_ids.size(); }
  /// Sentences of segment k joined by single spaces.
  std::string segment_text(std::size_t k) const;
};

/// Builds a stack from clips in the given order.
StackedPair make_stack(std::span<const ingest::ShortPair> clips);

/// Samples k distinct pairs and stacks them in sampled order. Throws
/// Error(InvalidInput) unless |pairs| >= k >= 2.
StackedPair stack_pairs(std::span<const ingest::ShortPair> pairs, int k, std::uint64_t seed);

/// Non-identity shuffle of the segments. Throws Error(NotDisruptable) only if
/// every ordering renders the same text (all captions identical).
NegativeSample gen_stack_reorder(const StackedPair& stack, std::uint64_t seed);

/// Drops `drop_count` segments chosen uniformly, keeping the rest in order.
/// Throws Error(InvalidInput) unless 1 <= drop_count <= K-1.
NegativeSample gen_stack_partial(const StackedPair& stack, int drop_count, std::uint64_t seed);

struct PretrainOptions {
  int k = kDefaultStackSize;
  bool reorder = true;
  bool partial = true;
  int drop_count = 1;
  std::uint64_t seed = 0;
};

/// Shuffles the corpus once and cuts it into disjoint stacks of k (the
/// remainder is dropped); each stack becomes one training sample whose
/// positive is the full stacked caption.
std::vector<CompSample> build_pretrain_samples(std::span<const ingest::ShortPair> pairs,
                                               const PretrainOptions& opts);

}  // namespace vidcomp::pretrain
