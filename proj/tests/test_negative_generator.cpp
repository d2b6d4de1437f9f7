#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "vidcomp/error.hpp"
#include "vidcomp/llm_client.hpp"
#include "vidcomp/negative_generator.hpp"
#include "vidcomp/positive_builder.hpp"
#include "vidcomp/text.hpp"
#include "vidcomp/validator.hpp"

using namespace vidcomp;

namespace {

PositivePair make_pair(const std::vector<std::string>& sentences, StructurerMode mode = StructurerMode::None) {
  std::vector<EventCaption> events;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    events.push_back({sentences[i], TimeInterval(10.0 * i, 10.0 * i + 8.0), i});
  }
  return PositivePair{"vid", TimeInterval(0, 10.0 * (sentences.size() - 1) + 8.0), std::move(events),
                      render_paragraph(sentences, mode), mode};
}

const std::vector<std::string> kFour{"A man enters the room.", "He opens the window.", "He sits on the chair.",
                                     "He reads a book."};

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected vidcomp::Error");
  return ErrorKind::Io;
}

std::size_t token_diff(const std::string& a, const std::string& b) {
  const auto ta = text::split_words(a), tb = text::split_words(b);
  if (ta.size() != tb.size()) return 1000;
  std::size_t d = 0;
  for (std::size_t i = 0; i < ta.size(); ++i) d += ta[i] != tb[i];
  return d;
}

std::multiset<std::string> sentence_multiset(const std::string& s) {
  const auto v = text::split_sentences(s);
  return {v.begin(), v.end()};
}

class ScriptedLlm : public LlmClient {
 public:
  explicit ScriptedLlm(std::string reply) : reply_(std::move(reply)) {}
  std::string complete(const std::string& prompt) override {
    prompts.push_back(prompt);
    return reply_;
  }
  std::vector<std::string> prompts;

 private:
  std::string reply_;
};

}  // namespace

TEST_CASE("lexicon parsing and validation") {
  std::istringstream in("# comment\npours\tdrinks, spills\n\nCuts\tslices\n");
  auto lex = ActionLexicon::parse_tsv(in);
  CHECK(lex.size() == 2);
  REQUIRE(lex.find("pours"));
  CHECK(*lex.find("pours") == std::vector<std::string>{"drinks", "spills"});
  CHECK(lex.find("cuts"));
  CHECK_FALSE(lex.find("jumps"));

  for (const char* bad : {"pours\n", "pours\tpours\n", "two words\tx\n", "pours\tdrinks slowly\n", "pours\t\n"}) {
    std::istringstream b(bad);
    CHECK(kind_of([&] { ActionLexicon::parse_tsv(b); }) == ErrorKind::Input);
  }
  CHECK(kind_of([&] { lex.add("runs", {"runs"}); }) == ErrorKind::InvalidInput);

  const auto builtin = ActionLexicon::builtin();
  CHECK(builtin.size() > 100);
  REQUIRE(builtin.find("pours"));
  ActionLexicon merged = builtin;
  merged.merge(lex);
  CHECK(*merged.find("pours") == std::vector<std::string>{"drinks", "spills"});
}

TEST_CASE("action replacement swaps exactly one word and keeps its casing and punctuation") {
  ActionLexicon lex;
  lex.add("pours", {"drinks"});
  const auto p = make_pair({"The man pours the milk."});
  const auto n = gen_action_replace(p, lex, 1);
  CHECK(n.text == "The man drinks the milk.");
  CHECK(n.severity == 1);
  CHECK(n.disruption == Disruption::atomic(DisruptionKind::ActionReplace));
  CHECK_FALSE(n.video_crop.has_value());

  CHECK(gen_action_replace(make_pair({"Pours, then waits."}), lex, 3).text == "Drinks, then waits.");
  CHECK(gen_action_replace(make_pair({"He (pours) it."}), lex, 3).text == "He (drinks) it.");
  CHECK(kind_of([&] { gen_action_replace(make_pair({"Nothing to see."}), lex, 1); }) == ErrorKind::NotDisruptable);
}

TEST_CASE("action replacement with several candidates changes one position") {
  const auto lex = ActionLexicon::builtin();
  const auto p = make_pair({"A woman cuts the bread.", "She pours some water.", "She walks away."},
                           StructurerMode::RuleBased);
  std::set<std::string> outputs;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto n = gen_action_replace(p, lex, seed);
    CHECK(token_diff(n.text, p.paragraph) == 1);
    CHECK(n.text == gen_action_replace(p, lex, seed).text);
    outputs.insert(n.text);
  }
  CHECK(outputs.size() > 3);
}

TEST_CASE("temporal reordering is a non-identity permutation of the sentences") {
  const auto p = make_pair(kFour);
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto n = gen_temp_reorder(p, seed);
    CHECK(n.text != p.paragraph);
    CHECK(sentence_multiset(n.text) == sentence_multiset(p.paragraph));
    seen.insert(n.text);
  }
  // 4! - 1 non-identity orders exist.
  CHECK(seen.size() == 23);

  const auto two = make_pair({"First.", "Second."});
  CHECK(gen_temp_reorder(two, 9).text == "Second. First.");
  CHECK(kind_of([] { gen_temp_reorder(make_pair({"Alone."}), 1); }) == ErrorKind::NotDisruptable);
  CHECK(kind_of([] { gen_temp_reorder(make_pair({"Same.", "Same."}), 1); }) == ErrorKind::NotDisruptable);
}

TEST_CASE("rule-structured reorders keep connectives in place") {
  const auto p = make_pair({"A.", "B.", "C."}, StructurerMode::RuleBased);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto t = gen_temp_reorder(p, seed).text;
    CHECK(t != p.paragraph);
    CHECK(t.find(" Then, ") != std::string::npos);
    CHECK(t.find(" Finally, ") != std::string::npos);
  }
}

TEST_CASE("segment splits for four events match a brute-force enumeration") {
  std::set<std::pair<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, std::size_t>>> oracle;
  const std::size_t n = 4;
  for (std::size_t a0 = 0; a0 < n; ++a0)
    for (std::size_t a1 = a0 + 1; a1 < n; ++a1)
      for (std::size_t b0 = 0; b0 < n; ++b0)
        for (std::size_t b1 = b0 + 1; b1 < n; ++b1) {
          std::size_t sym = 0;
          for (std::size_t i = 0; i < n; ++i) {
            sym += (i >= a0 && i <= a1) != (i >= b0 && i <= b1);
          }
          const bool valid = sym >= 2;
          CHECK(is_valid_split({a0, a1}, {b0, b1}, n) == valid);
          if (valid && std::pair(a0, a1) < std::pair(b0, b1)) oracle.insert({{a0, a1}, {b0, b1}});
        }
  CHECK(is_valid_split({0, 2}, {2, 3}, 4));
  CHECK(is_valid_split({0, 2}, {1, 3}, 4));
  CHECK_FALSE(is_valid_split({0, 2}, {0, 3}, 4));
  CHECK_FALSE(is_valid_split({0, 0}, {2, 3}, 4));
  CHECK_FALSE(is_valid_split({0, 2}, {2, 4}, 4));

  const auto p = make_pair(kFour);
  std::set<std::pair<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, std::size_t>>> sampled;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto s = sample_segment_split(p, seed);
    const auto key = std::make_pair(std::make_pair(s.a.first, s.a.last), std::make_pair(s.b.first, s.b.last));
    CHECK(oracle.count(key) == 1);
    sampled.insert(key);
  }
  CHECK(sampled == oracle);
  CHECK(kind_of([] { sample_segment_split(make_pair({"a.", "b.", "c."}), 0); }) == ErrorKind::NotDisruptable);
}

TEST_CASE("seg-mismatch pairs each crop with the other range's text") {
  const auto p = make_pair(kFour);
  const SegmentSplit split{{0, 2}, {2, 3}, TimeInterval(0, 28), TimeInterval(20, 38)};
  const auto [first, second] = gen_seg_mismatch(p, split, Split::Val);
  CHECK(first.video_interval == TimeInterval(0, 28));
  CHECK(first.positive_text == "A man enters the room. He opens the window. He sits on the chair.");
  REQUIRE(first.negatives.size() == 1);
  CHECK(first.negatives[0].text == "He sits on the chair. He reads a book.");
  CHECK(first.negatives[0].video_crop == TimeInterval(0, 28));
  CHECK(first.split == Split::Val);
  CHECK(second.positive_text == first.negatives[0].text);
  CHECK(second.negatives[0].text == first.positive_text);
  CHECK(second.video_interval == TimeInterval(20, 38));
  CHECK(validator::check_sample(first).empty());
  CHECK(validator::check_sample(second).empty());

  const auto sampled = sample_segment_split(p, 4);
  CHECK(sampled.video_crop_a.start() == p.events_used[sampled.a.first].interval.start());
  CHECK(sampled.video_crop_a.end() == p.events_used[sampled.a.last].interval.end());
}

TEST_CASE("multi-disruptions compose their stages") {
  const auto lex = ActionLexicon::builtin();
  const auto p = make_pair({"A man cuts the bread.", "He pours the milk.", "He walks away."});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto n = gen_multi(p, {DisruptionKind::TempReorder, DisruptionKind::ActionReplace}, lex, seed);
    CHECK(n.severity == 2);
    CHECK(n.disruption.label() == "multi:temp-reorder+action-replace");
    CHECK(n.text != p.paragraph);
    const auto sentences = text::split_sentences(n.text);
    CHECK(sentences.size() == 3);
    // One sentence carries a replaced verb; the remaining two are original.
    std::size_t original = 0;
    for (const auto& s : sentences) {
      original += std::any_of(p.events_used.begin(), p.events_used.end(),
                              [&](const EventCaption& e) { return e.text == s; });
    }
    CHECK(original == 2);
  }
  CHECK(kind_of([&] { gen_multi(p, {DisruptionKind::ActionReplace}, lex, 0); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([&] {
          gen_multi(make_pair({"Nothing here.", "Or here."}),
                    {DisruptionKind::TempReorder, DisruptionKind::ActionReplace}, lex, 0);
        }) == ErrorKind::NotDisruptable);

  const auto four = make_pair({"A man cuts the bread.", "He pours the milk.", "He walks away.", "He sits down."});
  const auto r = gen_multi_detailed(four, {DisruptionKind::SegMismatch, DisruptionKind::TempReorder}, lex, 8);
  REQUIRE(r.split.has_value());
  CHECK(r.negative.video_crop == r.split->video_crop_a);
  CHECK(r.negative.severity == 2);
}

TEST_CASE("generate_samples emits validated, sorted samples") {
  GenerationConfig cfg;
  const auto p = make_pair({"A man cuts the bread.", "He pours the milk.", "He walks away.", "He sits down."},
                           StructurerMode::RuleBased);
  const auto train = generate_samples(p, cfg, Split::Train);
  REQUIRE(train.size() == 3);
  CHECK(train[0].video_interval == p.video_interval);
  std::map<std::string, int> labels;
  for (const auto& s : train) {
    CHECK(validator::check_sample(s).empty());
    for (const auto& n : s.negatives) ++labels[n.disruption.label()];
  }
  CHECK(labels["temp-reorder"] == 1);
  CHECK(labels["action-replace"] == 1);
  CHECK(labels["seg-mismatch"] == 2);
  CHECK(labels["multi:temp-reorder+action-replace"] == 1);

  const auto val = generate_samples(p, cfg, Split::Val);
  for (const auto& s : val) {
    for (const auto& n : s.negatives) CHECK_FALSE(n.disruption.is_multi());
  }
  CHECK(generate_samples(p, cfg, Split::Train) == train);
  cfg.seed = 99;
  CHECK(generate_samples(p, cfg, Split::Train) != train);

  // A lone sentence with no action word yields nothing.
  CHECK(generate_samples(make_pair({"Quiet scene."}), GenerationConfig{}, Split::Train).empty());
}

TEST_CASE("llm rewrites are gated by word overlap") {
  const auto p = make_pair({"The man walks into the big kitchen.", "He opens the fridge door slowly.",
                            "He pours the milk into a glass."},
                           StructurerMode::RuleBased);
  GenerationConfig cfg;
  cfg.include_multi = false;

  ScriptedLlm unrelated("A dog sleeps on the sofa all afternoon long.");
  cfg.llm = &unrelated;
  CHECK_FALSE(validator::validate_output(unrelated.complete(""), p.paragraph).accepted);
  auto samples = generate_samples(p, cfg, Split::Train);
  REQUIRE(samples.size() == 1);
  for (const auto& n : samples[0].negatives) CHECK(n.provenance == Provenance::RuleBased);
  REQUIRE(unrelated.prompts.size() >= 2);
  CHECK(unrelated.prompts[1].find(p.paragraph) != std::string::npos);

  ScriptedLlm plausible(
      "He opens the fridge door slowly. Then, the man walks into the big kitchen. Finally, he pours the milk into "
      "a glass.");
  cfg.llm = &plausible;
  samples = generate_samples(p, cfg, Split::Train);
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].negatives[0].provenance == Provenance::ExternalLLM);
  CHECK(samples[0].negatives[0].text == text::normalize_space(plausible.complete("")));
}
