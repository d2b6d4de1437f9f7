#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vidcomp/core.hpp"
#include "vidcomp/ingest.hpp"
#include "vidcomp/loss_engine.hpp"

namespace vidcomp::eval {

/// Scores how well a text matches a video (or crop). nullopt means the
/// inputs cannot be resolved, e.g. a missing embedding; the sample is skipped.
class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  virtual std::optional<double> score(std::string_view video_ref, std::string_view text) = 0;
};

/// Cosine similarity over precomputed embeddings keyed by video_ref() and
/// text_ref(). Throws Error(InvalidEmbedding) if the two tables disagree on
/// dimension.
class EmbeddingScorer final : public SimilarityScorer {
 public:
  EmbeddingScorer(ingest::EmbeddingTable videos, ingest::EmbeddingTable texts);
  std::optional<double> score(std::string_view video_ref, std::string_view text) override;

 private:
  ingest::EmbeddingTable videos_;
  ingest::EmbeddingTable texts_;
};

/// Uniform scores from a hash of (seed, video, text): a reproducible,
/// order-independent random baseline.
class RandomScorer final : public SimilarityScorer {
 public:
  explicit RandomScorer(std::uint64_t seed) : seed_(seed) {}
  std::optional<double> score(std::string_view video_ref, std::string_view text) override;

 private:
  std::uint64_t seed_;
};

/// Generative scorer: returns the raw answer for a two-candidate question.
/// Throws Error(LLMUnavailable) on transport failure.
class BinaryChoiceScorer {
 public:
  virtual ~BinaryChoiceScorer() = default;
  virtual std::string choose(std::string_view video_ref, std::string_view candidate_1,
                             std::string_view candidate_2) = 0;
};

/// POSTs {video_ref, candidate_1, candidate_2, prompt} and returns the body.
class HttpChoiceScorer final : public BinaryChoiceScorer {
 public:
  explicit HttpChoiceScorer(std::string url, std::chrono::seconds timeout = std::chrono::seconds(120));
  std::string choose(std::string_view video_ref, std::string_view candidate_1,
                     std::string_view candidate_2) override;

 private:
  std::string url_;
  std::chrono::seconds timeout_;
};

struct Tally {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct AccuracyTable {
  std::map<Disruption, Tally> by_type;
  std::size_t skipped = 0;
};

/// Per disruption type, the fraction of (positive, negative) comparisons in
/// which the positive scores strictly higher. Throws Error(EmptyEvaluation)
/// when nothing could be scored.
AccuracyTable binary_accuracy(std::span<const CompSample> samples, SimilarityScorer& scorer);

/// Exact "1" or "2" after trimming whitespace; anything else is nullopt.
std::optional<int> parse_choice(std::string_view response);

/// Slot (1 or 2) holding the positive for one comparison; depends only on the
/// seed and the comparison's content.
int positive_slot(std::uint64_t seed, std::string_view video_ref, std::string_view positive,
                  std::string_view negative);

/// Binary-choice protocol for generative models. Unparseable answers count
/// as wrong; transport failures skip the sample. Up to `max_in_flight`
/// requests run concurrently.
AccuracyTable binary_choice_eval(std::span<const CompSample> samples, BinaryChoiceScorer& scorer,
                                 std::uint64_t seed, std::size_t max_in_flight = 1);

/// Product of the three atomic accuracies. Throws Error(IncompleteEvaluation)
/// when one is missing.
double comprehensive_score(const std::map<DisruptionKind, double>& per_type);

struct Recall {
  double t2v = 0.0;
  double v2t = 0.0;
};

/// sim(i, j) scores video i against text j; pair i is the truth. Ties rank
/// the lower index first. Throws Error(InvalidInput) unless the matrix is
/// square and k >= 1.
Recall recall_at_k(const loss::Matrix& sim, int k);

/// Video/positive-text similarity matrix over the samples whose embeddings
/// resolve.
loss::Matrix retrieval_matrix(std::span<const CompSample> samples, SimilarityScorer& scorer);

struct EvalReport {
  std::map<Disruption, double> per_type_accuracy;
  std::map<Disruption, std::size_t> counts;
  std::optional<double> comprehensive;       // product over the atomic types present
  std::vector<DisruptionKind> missing_types;  // atomic types with no comparisons
  std::optional<Recall> recall_at_1;
  std::size_t skipped = 0;
};

EvalReport make_report(const AccuracyTable& table, std::optional<Recall> recall = std::nullopt);

/// 0.18862 -> "18.9"
std::string format_percent(double fraction);

nlohmann::ordered_json report_to_json(const EvalReport& report);

}  // namespace vidcomp::eval
