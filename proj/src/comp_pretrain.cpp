#include "vidcomp/comp_pretrain.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "vidcomp/error.hpp"
#include "vidcomp/rng.hpp"
#include "vidcomp/text.hpp"

namespace vidcomp::pretrain {

namespace {

std::string join_segments(const StackedPair& stack, std::span<const std::size_t> order) {
  std::vector<std::string> parts;
  for (auto k : order) parts.push_back(stack.segment_text(k));
  return text::join(parts);
}

}  // namespace

std::string StackedPair::segment_text(std::size_t k) const {
  const auto& r = segment_boundaries.at(k);
  return text::join(std::vector<std::string>(sentences.begin() + static_cast<std::ptrdiff_t>(r.begin),
                                             sentences.begin() + static_cast<std::ptrdiff_t>(r.end)));
}

StackedPair make_stack(std::span<const ingest::ShortPair> clips) {
  if (clips.size() < static_cast<std::size_t>(kMinStackSize)) {
    throw Error(ErrorKind::InvalidInput, "a stack needs at least two clips");
  }
  StackedPair s;
  for (const auto& c : clips) {
    auto caption = text::normalize_space(c.caption);
    if (caption.empty()) throw Error(ErrorKind::InvalidInput, fmt::format("clip '{}' has no caption", c.clip_id));
    const auto begin = s.sentences.size();
    for (auto& sentence : text::split_sentences(caption)) s.sentences.push_back(std::move(sentence));
    s.segment_boundaries.push_back({begin, s.sentences.size()});
    s.clip_ids.push_back(c.clip_id);
    s.captions.push_back(std::move(caption));
    s.total_duration += c.duration;
  }
  s.stacked_caption = text::join(s.captions);
  return s;
}

StackedPair stack_pairs(std::span<const ingest::ShortPair> pairs, int k, std::uint64_t seed) {
  if (k < kMinStackSize || pairs.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::InvalidInput,
                fmt::format("cannot stack {} clips from {} pairs", k, pairs.size()));
  }
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first k slots are a uniform ordered sample.
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
    std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
  }
  std::vector<ingest::ShortPair> chosen;
  for (int i = 0; i < k; ++i) chosen.push_back(pairs[idx[static_cast<std::size_t>(i)]]);
  return make_stack(chosen);
}

NegativeSample gen_stack_reorder(const StackedPair& stack, std::uint64_t seed) {
  const std::size_t K = stack.size();
  std::vector<std::size_t> identity(K);
  std::iota(identity.begin(), identity.end(), 0);
  Rng rng(seed);
  auto accept = [&](const std::vector<std::size_t>& perm) -> std::optional<NegativeSample> {
    if (perm == identity) return std::nullopt;
    auto text = join_segments(stack, perm);
    if (text == stack.stacked_caption) return std::nullopt;
    return NegativeSample{std::move(text), Disruption::atomic(DisruptionKind::TempReorder), 1,
                          std::nullopt, Provenance::RuleBased};
  };
  for (int attempt = 0; attempt < 16; ++attempt) {
    auto perm = identity;
    rng.shuffle(std::span(perm));
    if (auto neg = accept(perm)) return *neg;
  }
  for (std::size_t shift = 1; shift < K; ++shift) {
    auto perm = identity;
    std::rotate(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(shift), perm.end());
    if (auto neg = accept(perm)) return *neg;
  }
  throw Error(ErrorKind::NotDisruptable, "every segment ordering renders the same caption");
}

NegativeSample gen_stack_partial(const StackedPair& stack, int drop_count, std::uint64_t seed) {
  const auto K = static_cast<int>(stack.size());
  if (drop_count < 1 || drop_count > K - 1) {
    throw Error(ErrorKind::InvalidInput,
                fmt::format("drop count {} outside [1, {}]", drop_count, K - 1));
  }
  std::vector<std::size_t> idx(stack.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < static_cast<std::size_t>(drop_count); ++i) {
    std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
  }
  std::vector<std::size_t> kept(idx.begin() + drop_count, idx.end());
  std::sort(kept.begin(), kept.end());
  return NegativeSample{join_segments(stack, kept), Disruption::atomic(DisruptionKind::SegMismatch), 1,
                        TimeInterval(0.0, stack.total_duration), Provenance::RuleBased};
}

std::vector<CompSample> build_pretrain_samples(std::span<const ingest::ShortPair> pairs,
                                               const PretrainOptions& opts) {
  if (opts.k < kMinStackSize || opts.k > kMaxStackSize) {
    throw Error(ErrorKind::InvalidInput,
                fmt::format("stack size {} outside [{}, {}]", opts.k, kMinStackSize, kMaxStackSize));
  }
  if (!opts.reorder && !opts.partial) {
    throw Error(ErrorKind::InvalidInput, "at least one stack negative kind is required");
  }
  if (opts.partial && (opts.drop_count < 1 || opts.drop_count > opts.k - 1)) {
    throw Error(ErrorKind::InvalidInput, fmt::format("drop count {} outside [1, {}]", opts.drop_count, opts.k - 1));
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(opts.seed, {"stack-order"}));
  rng.shuffle(std::span(order));

  const auto k = static_cast<std::size_t>(opts.k);
  std::vector<CompSample> out;
  for (std::size_t start = 0; start + k <= order.size(); start += k) {
    std::vector<ingest::ShortPair> clips;
    for (std::size_t i = start; i < start + k; ++i) clips.push_back(pairs[order[i]]);
    const auto stack = make_stack(clips);
    const auto id = text::join(stack.clip_ids, "+");
    CompSample sample{id, TimeInterval(0.0, stack.total_duration), stack.stacked_caption, {}, Split::Train};
    if (opts.reorder) {
      try {
        sample.negatives.push_back(gen_stack_reorder(stack, derive_seed(opts.seed, {id, "reorder"})));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotDisruptable) throw;
      }
    }
    if (opts.partial) {
      sample.negatives.push_back(
          gen_stack_partial(stack, opts.drop_count, derive_seed(opts.seed, {id, "partial"})));
    }
    sort_negatives(sample.negatives);
    if (!sample.negatives.empty()) out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace vidcomp::pretrain
