#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vidcomp/core.hpp"

namespace vidcomp {

struct PositivePair;

namespace ingest {

using Json = nlohmann::ordered_json;

enum class DatasetFormat { ActivityNetStyle, YouCook2Style };

struct Skip {
  std::string item;  // video id or "line N"
  std::string reason;
};

struct DenseCaptionResult {
  std::vector<CaptionTrack> tracks;
  std::vector<Skip> skipped;
  std::vector<std::string> warnings;
};

/// ActivityNet:  {video_id: {duration, timestamps: [[s,e],...], sentences: [...]}}
/// YouCook2:     {database: {video_id: {duration, annotations: [{segment, sentence}]}}}
///
/// Videos keep file order, events keep file order as their index. Events ending
/// past duration + kEndTolerance are clamped to the duration with a warning.
/// Throws Error(Input) when the document itself is not a JSON object.
DenseCaptionResult parse_dense_captions(std::istream& source, DatasetFormat format);

struct ShortPair {
  std::string clip_id;
  std::string caption;
  double duration = 0.0;

  bool operator==(const ShortPair&) const = default;
};

struct EmbeddingRecord {
  std::string item_id;
  std::vector<double> vector;

  std::size_t dim() const noexcept { return vector.size(); }
};

using EmbeddingTable = std::map<std::string, EmbeddingRecord>;

template <typename T>
struct LinesResult {
  std::vector<T> items;
  std::vector<Skip> skipped;
};

// JSONL outputs start with a {"_meta": {...}} line; readers skip it.
void write_meta_line(std::ostream& sink, const Json& meta);
bool is_meta_line(const Json& line);

Json sample_to_json(const CompSample& sample);
CompSample sample_from_json(const Json& j);

/// One sample per line. Throws Error(Io) if the sink fails.
std::size_t write_samples(std::span<const CompSample> samples, std::ostream& sink);
LinesResult<CompSample> read_samples(std::istream& source);

Json positive_to_json(const PositivePair& pair);
PositivePair positive_from_json(const Json& j);
std::size_t write_positives(std::span<const PositivePair> pairs, std::ostream& sink);
LinesResult<PositivePair> read_positives(std::istream& source);

/// JSONL of {clip_id, caption, duration}.
LinesResult<ShortPair> read_short_pairs(std::istream& source);

/// JSONL of {"id": ..., "vector": [...]}. Duplicate ids, dimension mismatch and
/// non-finite entries are fatal: Error(InvalidEmbedding) naming the offending id.
EmbeddingTable read_embeddings(std::istream& source);
void write_embeddings(const EmbeddingTable& table, std::ostream& sink);

}  // namespace ingest
}  // namespace vidcomp
