#include "vidcomp/evaluator.hpp"

#include <algorithm>
#include <future>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "vidcomp/error.hpp"
#include "vidcomp/llm_client.hpp"
#include "vidcomp/rng.hpp"
#include "vidcomp/text.hpp"

namespace vidcomp::eval {

EmbeddingScorer::EmbeddingScorer(ingest::EmbeddingTable videos, ingest::EmbeddingTable texts)
    : videos_(std::move(videos)), texts_(std::move(texts)) {
  // One dimension across both tables; the first video (else text) entry sets it.
  const auto& anchor = !videos_.empty() ? videos_.begin()->second : texts_.empty() ? ingest::EmbeddingRecord{} : texts_.begin()->second;
  for (const auto* table : {&videos_, &texts_}) {
    for (const auto& [id, rec] : *table) {
      if (rec.dim() != anchor.dim()) {
        throw Error(ErrorKind::InvalidEmbedding,
                    fmt::format("{} embedding '{}' has dimension {} but '{}' has {}",
                                table == &videos_ ? "video" : "text", id, rec.dim(), anchor.item_id, anchor.dim()));
      }
    }
  }
}

std::optional<double> EmbeddingScorer::score(std::string_view video_ref, std::string_view text) {
  const auto v = videos_.find(std::string(video_ref));
  const auto t = texts_.find(text_ref(text));
  if (v == videos_.end() || t == texts_.end()) return std::nullopt;
  const auto& a = v->second.vector;
  const auto& b = t->second.vector;
  return loss::cosine_sim(Eigen::Map<const loss::Vector>(a.data(), static_cast<Eigen::Index>(a.size())),
                          Eigen::Map<const loss::Vector>(b.data(), static_cast<Eigen::Index>(b.size())));
}

std::optional<double> RandomScorer::score(std::string_view video_ref, std::string_view text) {
  const auto h = derive_seed(seed_, {video_ref, text});
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

HttpChoiceScorer::HttpChoiceScorer(std::string url, std::chrono::seconds timeout)
    : url_(std::move(url)), timeout_(timeout) {
  split_url(url_);
}

std::string HttpChoiceScorer::choose(std::string_view video_ref, std::string_view candidate_1,
                                     std::string_view candidate_2) {
  const auto parts = split_url(url_);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  const nlohmann::json body{{"video_ref", video_ref},
                            {"candidate_1", candidate_1},
                            {"candidate_2", candidate_2},
                            {"prompt", render_choice_prompt(candidate_1, candidate_2)}};
  auto res = client.Post(parts.path, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorKind::LLMUnavailable,
                fmt::format("choice endpoint request failed: {}", httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw Error(ErrorKind::LLMUnavailable, fmt::format("choice endpoint returned HTTP {}", res->status));
  }
  return res->body;
}

AccuracyTable binary_accuracy(std::span<const CompSample> samples, SimilarityScorer& scorer) {
  AccuracyTable table;
  for (const auto& s : samples) {
    const auto ref = video_ref(s);
    const auto pos = scorer.score(ref, s.positive_text);
    std::vector<double> negs;
    bool resolved = pos.has_value();
    for (const auto& n : s.negatives) {
      if (!resolved) break;
      const auto v = scorer.score(ref, n.text);
      if (!v) resolved = false;
      else negs.push_back(*v);
    }
    if (!resolved || s.negatives.empty()) {
      ++table.skipped;
      continue;
    }
    for (std::size_t i = 0; i < negs.size(); ++i) {
      auto& tally = table.by_type[s.negatives[i].disruption];
      ++tally.total;
      if (*pos > negs[i]) ++tally.correct;
    }
  }
  if (table.by_type.empty()) throw Error(ErrorKind::EmptyEvaluation, "no sample could be scored");
  return table;
}

std::optional<int> parse_choice(std::string_view response) {
  const auto trimmed = text::normalize_space(response);
  if (trimmed == "1") return 1;
  if (trimmed == "2") return 2;
  return std::nullopt;
}

int positive_slot(std::uint64_t seed, std::string_view video_ref, std::string_view positive,
                  std::string_view negative) {
  return (derive_seed(seed, {video_ref, positive, negative}) >> 63) ? 2 : 1;
}

AccuracyTable binary_choice_eval(std::span<const CompSample> samples, BinaryChoiceScorer& scorer,
                                 std::uint64_t seed, std::size_t max_in_flight) {
  struct Job {
    std::size_t sample;
    std::size_t negative;
    int slot;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto ref = video_ref(samples[i]);
    for (std::size_t n = 0; n < samples[i].negatives.size(); ++n) {
      jobs.push_back({i, n, positive_slot(seed, ref, samples[i].positive_text, samples[i].negatives[n].text)});
    }
  }

  // -1: transport failure, 0: wrong or unparseable, 1: correct
  std::vector<int> outcome(jobs.size(), 0);
  auto run = [&](std::size_t j) {
    const auto& job = jobs[j];
    const auto& s = samples[job.sample];
    const auto& pos = s.positive_text;
    const auto& neg = s.negatives[job.negative].text;
    try {
      const auto answer = job.slot == 1 ? scorer.choose(video_ref(s), pos, neg)
                                        : scorer.choose(video_ref(s), neg, pos);
      outcome[j] = parse_choice(answer) == job.slot ? 1 : 0;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::LLMUnavailable) throw;
      spdlog::warn("choice scorer failed for '{}': {}", s.video_id, e.what());
      outcome[j] = -1;
    }
  };
  const std::size_t width = std::max<std::size_t>(1, max_in_flight);
  for (std::size_t begin = 0; begin < jobs.size(); begin += width) {
    const std::size_t end = std::min(jobs.size(), begin + width);
    if (width == 1) {
      run(begin);
      continue;
    }
    std::vector<std::future<void>> inflight;
    for (std::size_t j = begin; j < end; ++j) inflight.push_back(std::async(std::launch::async, run, j));
    for (auto& f : inflight) f.get();
  }

  AccuracyTable table;
  std::vector<bool> failed(samples.size(), false);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (outcome[j] < 0) failed[jobs[j].sample] = true;
  }
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (failed[jobs[j].sample]) continue;
    auto& tally = table.by_type[samples[jobs[j].sample].negatives[jobs[j].negative].disruption];
    ++tally.total;
    tally.correct += static_cast<std::size_t>(outcome[j]);
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (failed[i] || samples[i].negatives.empty()) ++table.skipped;
  }
  if (table.by_type.empty()) throw Error(ErrorKind::EmptyEvaluation, "no sample could be scored");
  return table;
}

double comprehensive_score(const std::map<DisruptionKind, double>& per_type) {
  double product = 1.0;
  for (auto kind : kAtomicKinds) {
    const auto it = per_type.find(kind);
    if (it == per_type.end()) {
      throw Error(ErrorKind::IncompleteEvaluation,
                  fmt::format("no accuracy for disruption type {}", to_string(kind)));
    }
    product *= it->second;
  }
  return product;
}

Recall recall_at_k(const loss::Matrix& sim, int k) {
  if (sim.rows() != sim.cols() || sim.rows() == 0) {
    throw Error(ErrorKind::InvalidInput, "retrieval needs a non-empty square similarity matrix");
  }
  if (k < 1) throw Error(ErrorKind::InvalidInput, "k must be at least 1");
  const auto M = sim.rows();
  // Rank of the true item among candidates under "higher score, then lower index".
  auto rank_of = [](auto scores, Eigen::Index truth) {
    Eigen::Index rank = 0;
    for (Eigen::Index c = 0; c < scores.size(); ++c) {
      if (scores(c) > scores(truth) || (scores(c) == scores(truth) && c < truth)) ++rank;
    }
    return rank;
  };
  std::size_t t2v = 0;
  std::size_t v2t = 0;
  for (Eigen::Index i = 0; i < M; ++i) {
    if (rank_of(sim.col(i), i) < k) ++t2v;
    if (rank_of(sim.row(i), i) < k) ++v2t;
  }
  return {static_cast<double>(t2v) / static_cast<double>(M), static_cast<double>(v2t) / static_cast<double>(M)};
}

loss::Matrix retrieval_matrix(std::span<const CompSample> samples, SimilarityScorer& scorer) {
  std::vector<std::string> refs;
  std::vector<std::string> texts;
  for (const auto& s : samples) {
    const auto ref = video_ref(s);
    if (scorer.score(ref, s.positive_text)) {
      refs.push_back(ref);
      texts.push_back(s.positive_text);
    }
  }
  const auto M = static_cast<Eigen::Index>(refs.size());
  loss::Matrix sim(M, M);
  for (Eigen::Index i = 0; i < M; ++i) {
    for (Eigen::Index j = 0; j < M; ++j) {
      const auto v = scorer.score(refs[static_cast<std::size_t>(i)], texts[static_cast<std::size_t>(j)]);
      if (!v) throw Error(ErrorKind::InvalidInput, "retrieval scorer lost an embedding");
      sim(i, j) = *v;
    }
  }
  return sim;
}

EvalReport make_report(const AccuracyTable& table, std::optional<Recall> recall) {
  EvalReport r;
  r.skipped = table.skipped;
  r.recall_at_1 = recall;
  for (const auto& [d, tally] : table.by_type) {
    r.per_type_accuracy[d] = tally.accuracy();
    r.counts[d] = tally.total;
  }
  double product = 1.0;
  bool any = false;
  for (auto kind : kAtomicKinds) {
    const auto it = table.by_type.find(Disruption::atomic(kind));
    if (it == table.by_type.end() || it->second.total == 0) {
      r.missing_types.push_back(kind);
      continue;
    }
    product *= it->second.accuracy();
    any = true;
  }
  if (any) r.comprehensive = product;
  return r;
}

std::string format_percent(double fraction) { return fmt::format("{:.1f}", 100.0 * fraction); }

nlohmann::ordered_json report_to_json(const EvalReport& r) {
  using Json = nlohmann::ordered_json;
  Json per_type = Json::object();
  for (const auto& [d, acc] : r.per_type_accuracy) {
    per_type[d.label()] = Json{{"accuracy", acc},
                               {"percent", format_percent(acc)},
                               {"count", r.counts.at(d)},
                               {"in_comprehensive", !d.is_multi()}};
  }
  Json out{{"per_type", std::move(per_type)}};
  if (r.comprehensive) {
    out["comprehensive"] = Json{{"score", *r.comprehensive}, {"percent", format_percent(*r.comprehensive)}};
  } else {
    out["comprehensive"] = nullptr;
  }
  Json missing = Json::array();
  for (auto k : r.missing_types) missing.push_back(to_string(k));
  out["missing_types"] = std::move(missing);
  if (r.recall_at_1) {
    out["recall_at_1"] = Json{{"t2v", r.recall_at_1->t2v},
                              {"v2t", r.recall_at_1->v2t},
                              {"t2v_percent", format_percent(r.recall_at_1->t2v)},
                              {"v2t_percent", format_percent(r.recall_at_1->v2t)}};
  }
  out["skipped_samples"] = r.skipped;
  return out;
}

}  // namespace vidcomp::eval
