#include <doctest.h>

#include <algorithm>
#include <set>

#include "vidcomp/comp_pretrain.hpp"
#include "vidcomp/error.hpp"
#include "vidcomp/text.hpp"
#include "vidcomp/validator.hpp"

using namespace vidcomp;
using namespace vidcomp::pretrain;
using ingest::ShortPair;

namespace {

std::vector<ShortPair> corpus(int n) {
  std::vector<ShortPair> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({"c" + std::to_string(i), "Clip " + std::to_string(i) + " happens.", 2.0 + i % 3});
  }
  return out;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected vidcomp::Error");
  return ErrorKind::Io;
}

// Index of each segment text inside the negative, or npos when absent.
std::vector<std::size_t> positions(const StackedPair& s, const std::string& text) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < s.size(); ++k) out.push_back(text.find(s.segment_text(k)));
  return out;
}

}  // namespace

TEST_CASE("stacking three clips in order") {
  const std::vector<ShortPair> clips{{"V1", "T1", 3.0}, {"V2", "T2", 4.0}, {"V3", "T3", 5.0}};
  const auto s = make_stack(clips);
  CHECK(s.stacked_caption == "T1 T2 T3");
  CHECK(s.segment_boundaries == std::vector<SentenceRange>{{0, 1}, {1, 2}, {2, 3}});
  CHECK(s.total_duration == 12.0);
  CHECK(s.clip_ids == std::vector<std::string>{"V1", "V2", "V3"});

  const auto partial = gen_stack_partial(s, 1, 0);
  CHECK(partial.disruption == Disruption::atomic(DisruptionKind::SegMismatch));
  CHECK(partial.video_crop == TimeInterval(0, 12));
  CHECK(std::set<std::string>{"T2 T3", "T1 T3", "T1 T2"}.count(partial.text) == 1);

  bool saw_drop_last = false;
  for (std::uint64_t seed = 0; seed < 50; ++seed) saw_drop_last |= gen_stack_partial(s, 1, seed).text == "T1 T2";
  CHECK(saw_drop_last);
}

TEST_CASE("multi-sentence captions keep their segment boundaries") {
  const std::vector<ShortPair> clips{{"a", "One. Two.", 1}, {"b", "Three.", 1}, {"c", "Four! Five? Six.", 1}};
  const auto s = make_stack(clips);
  CHECK(s.sentences.size() == 6);
  std::size_t total = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    total += s.segment_boundaries[k].end - s.segment_boundaries[k].begin;
    if (k > 0) CHECK(s.segment_boundaries[k].begin == s.segment_boundaries[k - 1].end);
  }
  CHECK(total == s.sentences.size());
  CHECK(s.segment_text(2) == "Four! Five? Six.");
}

TEST_CASE("stack reorders are non-identity permutations") {
  const std::vector<ShortPair> clips{{"V1", "T1", 1}, {"V2", "T2", 1}, {"V3", "T3", 1}};
  const auto s = make_stack(clips);
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto n = gen_stack_reorder(s, seed);
    CHECK(n.text != s.stacked_caption);
    auto words = text::split_words(n.text);
    std::sort(words.begin(), words.end());
    CHECK(words == std::vector<std::string>{"T1", "T2", "T3"});
    CHECK(n.severity == 1);
    CHECK(n.text == gen_stack_reorder(s, seed).text);
    seen.insert(n.text);
  }
  CHECK(seen.size() == 5);
  const std::vector<ShortPair> same{{"a", "x", 1}, {"b", "x", 1}};
  CHECK(kind_of([&] { gen_stack_reorder(make_stack(same), 0); }) == ErrorKind::NotDisruptable);
}

TEST_CASE("partial captions are strict order-preserving subsequences") {
  const auto s = make_stack(corpus(5));
  for (int drop = 1; drop <= 4; ++drop) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto n = gen_stack_partial(s, drop, seed);
      CHECK(n.text != s.stacked_caption);
      const auto pos = positions(s, n.text);
      std::vector<std::size_t> present;
      for (auto p : pos)
        if (p != std::string::npos) present.push_back(p);
      CHECK(present.size() == 5u - static_cast<std::size_t>(drop));
      CHECK(std::is_sorted(present.begin(), present.end()));
    }
  }
  CHECK(kind_of([&] { gen_stack_partial(s, 0, 0); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([&] { gen_stack_partial(s, 5, 0); }) == ErrorKind::InvalidInput);
}

TEST_CASE("stack sampling") {
  const auto pairs = corpus(10);
  const auto s = stack_pairs(pairs, 4, 3);
  CHECK(s.size() == 4);
  CHECK(std::set<std::string>(s.clip_ids.begin(), s.clip_ids.end()).size() == 4);
  CHECK(stack_pairs(pairs, 4, 3).clip_ids == s.clip_ids);
  CHECK(kind_of([&] { stack_pairs(corpus(3), 4, 0); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([&] { stack_pairs(pairs, 1, 0); }) == ErrorKind::InvalidInput);
  CHECK(kDefaultStackSize == 4);
}

TEST_CASE("pretraining samples cover the corpus with disjoint stacks") {
  const auto pairs = corpus(100);
  PretrainOptions opts;
  const auto samples = build_pretrain_samples(pairs, opts);
  CHECK(samples.size() == 25);
  std::set<std::string> used;
  for (const auto& s : samples) {
    CHECK(validator::check_sample(s).empty());
    CHECK(s.negatives.size() == 2);
    CHECK(s.split == Split::Train);
    std::size_t start = 0;
    for (std::size_t plus = s.video_id.find('+'); ; plus = s.video_id.find('+', start)) {
      used.insert(s.video_id.substr(start, plus - start));
      if (plus == std::string::npos) break;
      start = plus + 1;
    }
  }
  CHECK(used.size() == 100);
  CHECK(build_pretrain_samples(pairs, opts) == samples);

  opts.k = 8;
  CHECK(build_pretrain_samples(corpus(20), opts).size() == 2);
  opts.k = 4;
  opts.partial = false;
  for (const auto& s : build_pretrain_samples(pairs, opts)) CHECK(s.negatives.size() == 1);
  opts.reorder = false;
  CHECK(kind_of([&] { build_pretrain_samples(pairs, opts); }) == ErrorKind::InvalidInput);
}
