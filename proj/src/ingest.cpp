#include "vidcomp/ingest.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "vidcomp/error.hpp"
#include "vidcomp/positive_builder.hpp"
#include "vidcomp/text.hpp"

namespace vidcomp::ingest {

namespace {

struct RawEvent {
  double start;
  double end;
  std::string text;
};

double number_field(const Json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_number()) {
    throw std::invalid_argument(fmt::format("missing or non-numeric '{}'", key));
  }
  return obj.at(key).get<double>();
}

std::pair<double, double> span_pair(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw std::invalid_argument("time span is not a [start, end] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

// Builds a track, turning per-video problems into std::invalid_argument so
// the caller can record a skip.
CaptionTrack make_track(const std::string& video_id, double duration,
                        const std::vector<RawEvent>& raw, std::vector<std::string>& warnings) {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw std::invalid_argument("duration must be positive");
  }
  if (raw.empty()) throw std::invalid_argument("no events");
  CaptionTrack track{video_id, duration, {}};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [start, end] = std::pair{raw[i].start, raw[i].end};
    if (end > duration + kEndTolerance) {
      warnings.push_back(fmt::format("{}: event {} ends at {} past duration {}; clamped",
                                     video_id, i, end, duration));
      end = duration;
    }
    if (!std::isfinite(start) || !std::isfinite(end) || start < 0.0 || !(start < end)) {
      throw std::invalid_argument(fmt::format("event {} has invalid interval [{}, {}]", i, start, end));
    }
    std::string sentence = text::normalize_space(raw[i].text);
    if (sentence.empty()) throw std::invalid_argument(fmt::format("event {} has empty text", i));
    track.events.push_back(EventCaption{std::move(sentence), TimeInterval(start, end), i});
  }
  return track;
}

std::vector<RawEvent> activitynet_events(const Json& v) {
  if (!v.is_object()) throw std::invalid_argument("video entry is not an object");
  const auto& ts = v.contains("timestamps") ? v.at("timestamps") : Json();
  const auto& ss = v.contains("sentences") ? v.at("sentences") : Json();
  if (!ts.is_array() || !ss.is_array()) {
    throw std::invalid_argument("missing timestamps or sentences array");
  }
  if (ts.size() != ss.size()) {
    throw std::invalid_argument(
        fmt::format("{} timestamps but {} sentences", ts.size(), ss.size()));
  }
  std::vector<RawEvent> out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    auto [s, e] = span_pair(ts[i]);
    if (!ss[i].is_string()) throw std::invalid_argument(fmt::format("sentence {} is not a string", i));
    out.push_back({s, e, ss[i].get<std::string>()});
  }
  return out;
}

std::vector<RawEvent> youcook_events(const Json& v) {
  if (!v.is_object()) throw std::invalid_argument("video entry is not an object");
  if (!v.contains("annotations") || !v.at("annotations").is_array()) {
    throw std::invalid_argument("missing annotations array");
  }
  std::vector<RawEvent> out;
  for (const auto& a : v.at("annotations")) {
    if (!a.is_object() || !a.contains("segment") || !a.contains("sentence") ||
        !a.at("sentence").is_string()) {
      throw std::invalid_argument("annotation lacks segment or sentence");
    }
    auto [s, e] = span_pair(a.at("segment"));
    out.push_back({s, e, a.at("sentence").get<std::string>()});
  }
  return out;
}

Json interval_json(const TimeInterval& t) { return Json::array({t.start(), t.end()}); }

TimeInterval interval_from(const Json& j) {
  auto [s, e] = span_pair(j);
  return TimeInterval(s, e);
}

const Json& require(const Json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(fmt::format("missing field '{}'", key));
  return j.at(key);
}

template <typename T, typename Fn>
LinesResult<T> read_lines(std::istream& source, Fn&& parse) {
  LinesResult<T> result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(source, line)) {
    ++lineno;
    if (text::normalize_space(line).empty()) continue;
    try {
      const Json j = Json::parse(line);
      if (is_meta_line(j)) continue;
      result.items.push_back(parse(j));
    } catch (const std::exception& e) {
      result.skipped.push_back({fmt::format("line {}", lineno), e.what()});
    }
  }
  return result;
}

void write_line(std::ostream& sink, const Json& j) {
  sink << j.dump() << '\n';
  if (!sink) throw Error(ErrorKind::Io, "failed writing output stream");
}

}  // namespace

DenseCaptionResult parse_dense_captions(std::istream& source, DatasetFormat format) {
  Json doc;
  try {
    doc = Json::parse(source);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::Input, fmt::format("dense caption file is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw Error(ErrorKind::Input, "dense caption file must be a JSON object");

  const Json* videos = &doc;
  if (format == DatasetFormat::YouCook2Style) {
    if (!doc.contains("database")) return {};
    videos = &doc.at("database");
    if (!videos->is_object()) throw Error(ErrorKind::Input, "'database' must be a JSON object");
  }

  DenseCaptionResult result;
  for (const auto& [video_id, entry] : videos->items()) {
    try {
      const double duration = number_field(entry, "duration");
      const auto raw = format == DatasetFormat::ActivityNetStyle ? activitynet_events(entry)
                                                                 : youcook_events(entry);
      result.tracks.push_back(make_track(video_id, duration, raw, result.warnings));
    } catch (const std::exception& e) {
      result.skipped.push_back({video_id, e.what()});
    }
  }
  return result;
}

void write_meta_line(std::ostream& sink, const Json& meta) {
  write_line(sink, Json{{"_meta", meta}});
}

bool is_meta_line(const Json& line) { return line.is_object() && line.contains("_meta"); }

Json sample_to_json(const CompSample& s) {
  Json negs = Json::array();
  for (const auto& n : s.negatives) {
    Json crop = n.video_crop ? interval_json(*n.video_crop) : Json(nullptr);
    negs.push_back(Json{{"text", n.text},
                        {"disruption", n.disruption.label()},
                        {"severity", n.severity},
                        {"video_crop", std::move(crop)},
                        {"provenance", to_string(n.provenance)}});
  }
  return Json{{"video_id", s.video_id},
              {"video_interval", interval_json(s.video_interval)},
              {"positive_text", s.positive_text},
              {"split", to_string(s.split)},
              {"negatives", std::move(negs)}};
}

CompSample sample_from_json(const Json& j) {
  const auto split = parse_split(require(j, "split").get<std::string>());
  if (!split) throw std::invalid_argument("unknown split");
  CompSample s{require(j, "video_id").get<std::string>(),
               interval_from(require(j, "video_interval")),
               require(j, "positive_text").get<std::string>(),
               {},
               *split};
  for (const auto& n : require(j, "negatives")) {
    const auto prov = parse_provenance(require(n, "provenance").get<std::string>());
    if (!prov) throw std::invalid_argument("unknown provenance");
    NegativeSample neg;
    neg.text = require(n, "text").get<std::string>();
    neg.disruption = Disruption::parse(require(n, "disruption").get<std::string>());
    neg.severity = require(n, "severity").get<int>();
    if (const auto& crop = require(n, "video_crop"); !crop.is_null()) {
      neg.video_crop = interval_from(crop);
    }
    neg.provenance = *prov;
    s.negatives.push_back(std::move(neg));
  }
  return s;
}

std::size_t write_samples(std::span<const CompSample> samples, std::ostream& sink) {
  for (const auto& s : samples) write_line(sink, sample_to_json(s));
  return samples.size();
}

LinesResult<CompSample> read_samples(std::istream& source) {
  return read_lines<CompSample>(source, sample_from_json);
}

Json positive_to_json(const PositivePair& p) {
  Json events = Json::array();
  for (const auto& e : p.events_used) {
    events.push_back(Json{{"index", e.index}, {"interval", interval_json(e.interval)}, {"text", e.text}});
  }
  return Json{{"video_id", p.video_id},
              {"video_interval", interval_json(p.video_interval)},
              {"events", std::move(events)},
              {"paragraph", p.paragraph},
              {"structurer", to_string(p.structurer_used)}};
}

PositivePair positive_from_json(const Json& j) {
  const auto mode = parse_structurer_mode(require(j, "structurer").get<std::string>());
  if (!mode) throw std::invalid_argument("unknown structurer");
  PositivePair p{require(j, "video_id").get<std::string>(),
                 interval_from(require(j, "video_interval")),
                 {},
                 require(j, "paragraph").get<std::string>(),
                 *mode};
  for (const auto& e : require(j, "events")) {
    p.events_used.push_back(EventCaption{require(e, "text").get<std::string>(),
                                         interval_from(require(e, "interval")),
                                         require(e, "index").get<std::size_t>()});
  }
  if (p.events_used.empty()) throw std::invalid_argument("positive has no events");
  return p;
}

std::size_t write_positives(std::span<const PositivePair> pairs, std::ostream& sink) {
  for (const auto& p : pairs) write_line(sink, positive_to_json(p));
  return pairs.size();
}

LinesResult<PositivePair> read_positives(std::istream& source) {
  return read_lines<PositivePair>(source, positive_from_json);
}

LinesResult<ShortPair> read_short_pairs(std::istream& source) {
  return read_lines<ShortPair>(source, [](const Json& j) {
    ShortPair p{require(j, "clip_id").get<std::string>(),
                text::normalize_space(require(j, "caption").get<std::string>()),
                require(j, "duration").get<double>()};
    if (p.caption.empty()) throw std::invalid_argument("empty caption");
    if (!(p.duration > 0.0)) throw std::invalid_argument("duration must be positive");
    return p;
  });
}

EmbeddingTable read_embeddings(std::istream& source) {
  EmbeddingTable table;
  std::size_t dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(source, line)) {
    ++lineno;
    if (text::normalize_space(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::InvalidEmbedding, fmt::format("embeddings line {}: {}", lineno, e.what()));
    }
    if (is_meta_line(j)) continue;
    if (!j.is_object() || !j.contains("id") || !j.at("id").is_string() || !j.contains("vector") ||
        !j.at("vector").is_array()) {
      throw Error(ErrorKind::InvalidEmbedding,
                  fmt::format("embeddings line {}: expected {{\"id\", \"vector\"}}", lineno));
    }
    EmbeddingRecord rec{j.at("id").get<std::string>(), {}};
    for (const auto& x : j.at("vector")) {
      if (!x.is_number()) {
        throw Error(ErrorKind::InvalidEmbedding, fmt::format("embedding '{}' has a non-numeric entry", rec.item_id));
      }
      const double v = x.get<double>();
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::InvalidEmbedding, fmt::format("embedding '{}' has a non-finite entry", rec.item_id));
      }
      rec.vector.push_back(v);
    }
    if (rec.vector.empty()) {
      throw Error(ErrorKind::InvalidEmbedding, fmt::format("embedding '{}' is empty", rec.item_id));
    }
    if (dim == 0) dim = rec.dim();
    if (rec.dim() != dim) {
      throw Error(ErrorKind::InvalidEmbedding,
                  fmt::format("embedding '{}' has dimension {}, expected {}", rec.item_id, rec.dim(), dim));
    }
    if (table.contains(rec.item_id)) {
      throw Error(ErrorKind::InvalidEmbedding, fmt::format("duplicate embedding id '{}'", rec.item_id));
    }
    auto id = rec.item_id;
    table.emplace(std::move(id), std::move(rec));
  }
  return table;
}

void write_embeddings(const EmbeddingTable& table, std::ostream& sink) {
  for (const auto& [id, rec] : table) write_line(sink, Json{{"id", id}, {"vector", rec.vector}});
}

}  // namespace vidcomp::ingest
