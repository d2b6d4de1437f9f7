#include "vidcomp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "vidcomp/comp_pretrain.hpp"
#include "vidcomp/error.hpp"
#include "vidcomp/evaluator.hpp"
#include "vidcomp/gradcheck.hpp"
#include "vidcomp/ingest.hpp"
#include "vidcomp/negative_generator.hpp"
#include "vidcomp/parallel.hpp"
#include "vidcomp/positive_builder.hpp"
#include "vidcomp/rng.hpp"
#include "vidcomp/text.hpp"
#include "vidcomp/toy_trainer.hpp"
#include "vidcomp/validator.hpp"

namespace vidcomp::cli {

namespace {

using Json = nlohmann::ordered_json;

struct Globals {
  std::uint64_t seed = 0;
  std::string log_level = "warn";
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  bool no_timestamp = false;
};

struct LlmFlags {
  std::string url;
  std::string model = "default";
  std::string key_env = "VIDCOMP_LLM_API_KEY";

  void add_to(CLI::App* app) {
    app->add_option("--llm-url", url, "Chat-completion endpoint (http://host:port/path)");
    app->add_option("--llm-model", model, "Model name sent to the endpoint");
    app->add_option("--llm-key-env", key_env, "Environment variable holding the API key");
  }

  std::unique_ptr<LlmClient> make() const {
    if (url.empty()) return nullptr;
    return std::make_unique<HttpLlmClient>(HttpLlmConfig{url, model, key_env});
  }
};

Error input_error(const std::string& what) { return Error(ErrorKind::Input, what); }

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error(fmt::format("cannot open '{}' for reading", path));
  return in;
}

// "-" writes to the caller's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path == "-" || path.empty()) {
      stream_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw input_error(fmt::format("cannot open '{}' for writing", path));
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw Error(ErrorKind::Io, "failed writing output");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

Json make_meta(const Globals& g, std::string_view command, const Json& config) {
  Json meta{{"tool", kToolName},
            {"version", kToolVersion},
            {"command", command},
            {"seed", g.seed},
            {"config_hash", text::hex64(text::fnv1a64(config.dump()))},
            {"config", config}};
  if (!g.no_timestamp) {
    const auto now = std::chrono::system_clock::now();
    meta["created"] = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
  }
  return meta;
}

bool keep_subsampled(std::uint64_t seed, std::string_view key, double rate) {
  if (rate >= 1.0) return true;
  Rng rng(derive_seed(seed, {"subsample", key}));
  return rng.uniform() < rate;
}

template <typename T>
void report_skips(std::string_view what, const std::vector<T>& skipped) {
  for (const auto& s : skipped) spdlog::warn("{}: skipped {}: {}", what, s.item, s.reason);
}

void setup_logging(const std::string& level, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>(kToolName, std::move(sink));
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::from_str(level));
  spdlog::set_default_logger(std::move(logger));
}

// --- build-positives -------------------------------------------------------

struct BuildPositivesOpts {
  std::string in;
  std::string format;
  std::string out;
  PositiveConfig config;
  std::string structurer = "rule";
  LlmFlags llm;
};

int build_positives(const Globals& g, BuildPositivesOpts& o, std::ostream& out, std::ostream& err) {
  o.config.format = o.format == "youcook2" ? ingest::DatasetFormat::YouCook2Style
                                           : ingest::DatasetFormat::ActivityNetStyle;
  o.config.structurer.mode = *parse_structurer_mode(o.structurer);
  auto client = o.llm.make();
  if (o.config.structurer.mode == StructurerMode::ExternalLLM && !client) {
    throw input_error("--structurer llm requires --llm-url");
  }
  o.config.structurer.client = client.get();

  auto in = open_in(o.in);
  const auto parsed = ingest::parse_dense_captions(in, o.config.format);
  report_skips("build-positives", parsed.skipped);
  for (const auto& w : parsed.warnings) spdlog::warn("{}", w);

  std::vector<std::optional<PositivePair>> built(parsed.tracks.size());
  const std::size_t threads = o.config.structurer.mode == StructurerMode::ExternalLLM ? 1 : g.threads;
  parallel_for(parsed.tracks.size(), threads, [&](std::size_t i) {
    try {
      built[i] = build_positive(parsed.tracks[i], o.config);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyTrack) throw;
      spdlog::warn("{}", e.what());
    }
  });
  std::vector<PositivePair> pairs;
  for (auto& b : built) {
    if (b) pairs.push_back(std::move(*b));
  }

  const Json config{{"in", o.in},
                    {"format", o.format},
                    {"iou_threshold", o.config.iou_threshold},
                    {"cover_frac", o.config.cover_frac},
                    {"max_events", o.config.max_events},
                    {"structurer", o.structurer}};
  Sink sink(o.out, out);
  ingest::write_meta_line(sink.get(), make_meta(g, "build-positives", config));
  ingest::write_positives(pairs, sink.get());
  sink.finish();
  err << fmt::format("build-positives: {} videos read, {} skipped, {} positives written\n",
                     parsed.tracks.size() + parsed.skipped.size(), parsed.skipped.size(), pairs.size());
  return 0;
}

// --- gen-negatives ---------------------------------------------------------

struct GenNegativesOpts {
  std::string in;
  std::string out;
  std::string split = "train";
  std::string lexicon;
  bool lexicon_replace = false;
  std::string multi_recipe = "temp-reorder,action-replace";
  std::string multi = "auto";
  double subsample = 1.0;
  double threshold = 0.8;
  LlmFlags llm;
};

std::vector<DisruptionKind> parse_recipe(const std::string& recipe) {
  std::vector<DisruptionKind> kinds;
  std::stringstream ss(recipe);
  for (std::string part; std::getline(ss, part, ',');) {
    const auto kind = parse_disruption_kind(text::normalize_space(part));
    if (!kind) throw input_error(fmt::format("unknown disruption '{}' in --multi-recipe", part));
    kinds.push_back(*kind);
  }
  try {
    Disruption::multi(kinds);
  } catch (const Error& e) {
    throw input_error(fmt::format("--multi-recipe: {}", e.what()));
  }
  return kinds;
}

int gen_negatives(const Globals& g, GenNegativesOpts& o, std::ostream& out, std::ostream& err) {
  GenerationConfig config;
  config.seed = g.seed;
  config.validation_threshold = o.threshold;
  config.multi_recipe = parse_recipe(o.multi_recipe);
  if (o.multi == "on") config.include_multi = true;
  if (o.multi == "off") config.include_multi = false;
  if (!o.lexicon.empty()) {
    auto lex_in = open_in(o.lexicon);
    auto extra = ActionLexicon::parse_tsv(lex_in);
    if (o.lexicon_replace) {
      config.lexicon = std::move(extra);
    } else {
      config.lexicon.merge(extra);
    }
  }
  auto client = o.llm.make();
  config.llm = client.get();
  const Split split = *parse_split(o.split);

  auto in = open_in(o.in);
  auto positives = ingest::read_positives(in);
  report_skips("gen-negatives", positives.skipped);
  std::vector<PositivePair> kept;
  for (auto& p : positives.items) {
    if (keep_subsampled(g.seed, p.video_id, o.subsample)) kept.push_back(std::move(p));
  }

  std::vector<std::vector<CompSample>> per_pair(kept.size());
  parallel_for(kept.size(), client ? 1 : g.threads,
               [&](std::size_t i) { per_pair[i] = generate_samples(kept[i], config, split); });
  std::vector<CompSample> samples;
  for (auto& group : per_pair) {
    for (auto& s : group) samples.push_back(std::move(s));
  }

  const Json cfg{{"in", o.in},
                 {"split", o.split},
                 {"lexicon", o.lexicon},
                 {"lexicon_replace", o.lexicon_replace},
                 {"multi_recipe", o.multi_recipe},
                 {"multi", o.multi},
                 {"subsample", o.subsample},
                 {"validation_threshold", o.threshold},
                 {"llm", !o.llm.url.empty()}};
  Sink sink(o.out, out);
  ingest::write_meta_line(sink.get(), make_meta(g, "gen-negatives", cfg));
  ingest::write_samples(samples, sink.get());
  sink.finish();
  err << fmt::format("gen-negatives: {} positives used, {} samples written\n", kept.size(), samples.size());
  return 0;
}

// --- validate --------------------------------------------------------------

struct ValidateOpts {
  std::string in;
  std::string samples;
  std::string out = "-";
  double threshold = 0.8;
  bool normalize = false;
  bool strict = false;
};

int validate_cmd(const Globals& g, ValidateOpts& o, std::ostream& out, std::ostream& err) {
  if (o.in.empty() == o.samples.empty()) throw input_error("validate needs exactly one of --in or --samples");
  Sink sink(o.out, out);
  const Json cfg{{"in", o.in}, {"samples", o.samples}, {"threshold", o.threshold}, {"normalize", o.normalize}};
  ingest::write_meta_line(sink.get(), make_meta(g, "validate", cfg));
  std::size_t problems = 0;
  std::size_t items = 0;
  if (!o.in.empty()) {
    auto in = open_in(o.in);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (text::normalize_space(line).empty()) continue;
      ++items;
      Json row{{"line", lineno}};
      try {
        const auto j = Json::parse(line);
        const auto r = validator::validate_output(j.at("generated").get<std::string>(),
                                                  j.at("original").get<std::string>(), o.threshold, o.normalize);
        row["precision"] = r.precision;
        row["recall"] = r.recall;
        row["accepted"] = r.accepted;
        row["threshold"] = r.threshold;
        if (!r.accepted) ++problems;
      } catch (const std::exception& e) {
        row["error"] = e.what();
        ++problems;
      }
      sink.get() << row.dump() << '\n';
    }
  } else {
    auto in = open_in(o.samples);
    auto samples = ingest::read_samples(in);
    report_skips("validate", samples.skipped);
    problems += samples.skipped.size();
    for (const auto& s : samples.items) {
      ++items;
      const auto violations = validator::check_sample(s);
      problems += violations.empty() ? 0 : 1;
      sink.get() << Json{{"video_ref", video_ref(s)}, {"violations", violations}}.dump() << '\n';
    }
  }
  sink.finish();
  err << fmt::format("validate: {} items, {} rejected or in violation\n", items, problems);
  return o.strict && problems > 0 ? 2 : 0;
}

// --- pretrain-sim ----------------------------------------------------------

struct PretrainOpts {
  std::string in;
  std::string out;
  int k = pretrain::kDefaultStackSize;
  std::string negatives = "reorder,partial";
  int drop_count = 1;
};

int pretrain_sim(const Globals& g, PretrainOpts& o, std::ostream& out, std::ostream& err) {
  pretrain::PretrainOptions opts;
  opts.k = o.k;
  opts.drop_count = o.drop_count;
  opts.seed = g.seed;
  opts.reorder = opts.partial = false;
  std::stringstream ss(o.negatives);
  for (std::string part; std::getline(ss, part, ',');) {
    part = text::normalize_space(part);
    if (part == "reorder") opts.reorder = true;
    else if (part == "partial") opts.partial = true;
    else throw input_error(fmt::format("unknown stack negative '{}'", part));
  }
  auto in = open_in(o.in);
  const auto pairs = ingest::read_short_pairs(in);
  report_skips("pretrain-sim", pairs.skipped);
  const auto samples = pretrain::build_pretrain_samples(pairs.items, opts);

  const Json cfg{{"in", o.in}, {"k", o.k}, {"negatives", o.negatives}, {"drop_count", o.drop_count}};
  Sink sink(o.out, out);
  ingest::write_meta_line(sink.get(), make_meta(g, "pretrain-sim", cfg));
  ingest::write_samples(samples, sink.get());
  sink.finish();
  err << fmt::format("pretrain-sim: {} short pairs, {} stacks written\n", pairs.items.size(), samples.size());
  return 0;
}

// --- train-toy -------------------------------------------------------------

struct TrainToyOpts {
  loss::TrainOptions train;
  std::string dims = "8,8,16";
  int train_samples = 2048;
  int heldout_samples = 1024;
  bool fixed_temperature = false;
  std::string report = "-";
};

Json metrics_json(const loss::OrderingMetrics& m) {
  return Json{{"full_chain_accuracy", m.full_chain_accuracy}, {"adjacent_accuracy", m.adjacent_accuracy}};
}

int train_toy_cmd(const Globals& g, TrainToyOpts& o, std::ostream& out, std::ostream& err) {
  std::vector<int> dims;
  std::stringstream ss(o.dims);
  for (std::string part; std::getline(ss, part, ',');) {
    try {
      dims.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw input_error(fmt::format("--dims: '{}' is not an integer", part));
    }
  }
  if (dims.size() != 3 || std::any_of(dims.begin(), dims.end(), [](int d) { return d < 1; })) {
    throw input_error("--dims expects three positive integers: content,cue,embed");
  }
  loss::SyntheticSpec spec;
  spec.content_dim = dims[0];
  spec.cue_dim = dims[1];
  spec.train_samples = o.train_samples;
  spec.heldout_samples = o.heldout_samples;
  spec.seed = g.seed;
  o.train.seed = g.seed;
  o.train.learn_temperature = !o.fixed_temperature;

  const auto data = loss::make_synthetic(spec);
  const auto init = loss::init_params(spec.input_dim(), dims[2], g.seed);
  const auto result = loss::train_toy(data.train, init, o.train);

  const Json cfg{{"lambda", o.train.lambda}, {"lr", o.train.lr},       {"steps", o.train.steps},
                 {"batch", o.train.batch},   {"dims", o.dims},         {"train_samples", o.train_samples},
                 {"heldout_samples", o.heldout_samples}, {"learn_temperature", o.train.learn_temperature}};
  Json report{{"meta", make_meta(g, "train-toy", cfg)},
              {"final_loss", result.final_loss},
              {"temperature", result.params.temperature()},
              {"heldout", metrics_json(loss::ordering_metrics(result.params, data.heldout))},
              {"train", metrics_json(loss::ordering_metrics(result.params, data.train))}};
  Sink sink(o.report, out);
  sink.get() << report.dump(2) << '\n';
  sink.finish();
  err << fmt::format("train-toy: held-out full-chain accuracy {}\n",
                     report["heldout"]["full_chain_accuracy"].get<double>());
  return 0;
}

// --- eval ------------------------------------------------------------------

struct EvalOpts {
  std::string samples;
  std::string video_embs;
  std::string text_embs;
  std::string choice_endpoint;
  bool random_baseline = false;
  std::size_t max_in_flight = 1;
  double subsample = 1.0;
  bool no_recall = false;
  std::string out = "-";
};

int eval_cmd(const Globals& g, EvalOpts& o, std::ostream& out, std::ostream& err) {
  const bool embeddings = !o.video_embs.empty() || !o.text_embs.empty();
  const int chosen = int{embeddings} + int{!o.choice_endpoint.empty()} + int{o.random_baseline};
  if (chosen != 1) {
    throw input_error("eval needs exactly one scorer: --video-embs/--text-embs, --choice-endpoint or --random-baseline");
  }
  if (embeddings && (o.video_embs.empty() || o.text_embs.empty())) {
    throw input_error("--video-embs and --text-embs go together");
  }
  auto in = open_in(o.samples);
  auto read = ingest::read_samples(in);
  report_skips("eval", read.skipped);
  std::vector<CompSample> samples;
  for (auto& s : read.items) {
    if (keep_subsampled(g.seed, video_ref(s), o.subsample)) samples.push_back(std::move(s));
  }

  eval::EvalReport report;
  if (!o.choice_endpoint.empty()) {
    eval::HttpChoiceScorer scorer(o.choice_endpoint);
    report = eval::make_report(eval::binary_choice_eval(samples, scorer, g.seed, o.max_in_flight));
  } else {
    std::unique_ptr<eval::SimilarityScorer> scorer;
    if (o.random_baseline) {
      scorer = std::make_unique<eval::RandomScorer>(g.seed);
    } else {
      auto vin = open_in(o.video_embs);
      auto tin = open_in(o.text_embs);
      auto videos = ingest::read_embeddings(vin);
      auto texts = ingest::read_embeddings(tin);
      scorer = std::make_unique<eval::EmbeddingScorer>(std::move(videos), std::move(texts));
    }
    const auto table = eval::binary_accuracy(samples, *scorer);
    std::optional<eval::Recall> recall;
    if (!o.no_recall) {
      const auto sim = eval::retrieval_matrix(samples, *scorer);
      if (sim.rows() > 0) recall = eval::recall_at_k(sim, 1);
    }
    report = eval::make_report(table, recall);
  }

  const Json cfg{{"samples", o.samples},
                 {"scorer", !o.choice_endpoint.empty() ? "choice" : o.random_baseline ? "random" : "embedding"},
                 {"subsample", o.subsample}};
  Json doc{{"meta", make_meta(g, "eval", cfg)}};
  const Json body = eval::report_to_json(report);
  for (const auto& [k, v] : body.items()) doc[k] = v;
  Sink sink(o.out, out);
  sink.get() << doc.dump(2) << '\n';
  sink.finish();
  if (report.comprehensive) {
    err << fmt::format("eval: {} samples, comprehensive {}%\n", samples.size(),
                       eval::format_percent(*report.comprehensive));
  }
  return 0;
}

// --- gradcheck -------------------------------------------------------------

struct GradcheckOpts {
  loss::GradcheckOptions check;
  double tolerance = 1e-6;
};

int gradcheck_cmd(const Globals& g, GradcheckOpts& o, std::ostream& out, std::ostream&) {
  o.check.seed = g.seed;
  const auto r = loss::run_gradcheck(o.check);
  const Json doc{{"batches", r.batches},
                 {"infonce_max_rel_error", r.infonce_error},
                 {"preference_max_rel_error", r.preference_error},
                 {"total_max_rel_error", r.total_error},
                 {"temperature_max_rel_error", r.temperature_error},
                 {"tolerance", o.tolerance},
                 {"pass", r.worst() < o.tolerance}};
  out << doc.dump(2) << '\n';
  return r.worst() < o.tolerance ? 0 : 2;
}

// --- export-refs -----------------------------------------------------------

int export_refs(const Globals& g, const std::string& samples_path, const std::string& out_path,
                std::ostream& out) {
  auto in = open_in(samples_path);
  const auto samples = ingest::read_samples(in);
  report_skips("export-refs", samples.skipped);
  Sink sink(out_path, out);
  ingest::write_meta_line(sink.get(), make_meta(g, "export-refs", Json{{"samples", samples_path}}));
  std::set<std::string> seen;
  auto emit = [&](Json row) {
    const auto id = row["id"].get<std::string>();
    if (seen.insert(id).second) sink.get() << row.dump() << '\n';
  };
  for (const auto& s : samples.items) {
    emit(Json{{"id", video_ref(s)},
              {"kind", "video"},
              {"video_id", s.video_id},
              {"interval", {s.video_interval.start(), s.video_interval.end()}}});
    emit(Json{{"id", text_ref(s.positive_text)}, {"kind", "text"}, {"text", s.positive_text}});
    for (const auto& n : s.negatives) emit(Json{{"id", text_ref(n.text)}, {"kind", "text"}, {"text", n.text}});
  }
  sink.finish();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Video-text compositionality benchmark toolkit", kToolName};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every randomized step")->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for per-video stages")->check(CLI::PositiveNumber);
  app.add_flag("--no-timestamp", g.no_timestamp, "Omit the creation time from output metadata");

  BuildPositivesOpts bp;
  auto* bp_cmd = app.add_subcommand("build-positives", "Dense captions -> temporally ordered positive paragraphs");
  bp_cmd->add_option("--in", bp.in, "Dense caption JSON")->required();
  bp_cmd->add_option("--format", bp.format, "activitynet|youcook2")
      ->required()
      ->check(CLI::IsMember({"activitynet", "youcook2"}));
  bp_cmd->add_option("--out", bp.out, "Positives JSONL ('-' for stdout)")->required();
  bp_cmd->add_option("--iou-threshold", bp.config.iou_threshold)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  bp_cmd->add_option("--cover-frac", bp.config.cover_frac)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  bp_cmd->add_option("--max-events", bp.config.max_events)->capture_default_str()->check(CLI::PositiveNumber);
  bp_cmd->add_option("--structurer", bp.structurer, "none|rule|llm")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "rule", "llm"}));
  bp.llm.add_to(bp_cmd);

  GenNegativesOpts gn;
  auto* gn_cmd = app.add_subcommand("gen-negatives", "Positives -> benchmark samples with disrupted negatives");
  gn_cmd->add_option("--in", gn.in, "Positives JSONL")->required();
  gn_cmd->add_option("--out", gn.out, "Samples JSONL ('-' for stdout)")->required();
  gn_cmd->add_option("--split", gn.split)->capture_default_str()->check(CLI::IsMember({"train", "val"}));
  gn_cmd->add_option("--lexicon", gn.lexicon, "Extra action lexicon TSV");
  gn_cmd->add_flag("--lexicon-replace", gn.lexicon_replace, "Use only --lexicon, not the built-in table");
  gn_cmd->add_option("--multi-recipe", gn.multi_recipe)->capture_default_str();
  gn_cmd->add_option("--multi", gn.multi, "auto (train only)|on|off")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "on", "off"}));
  gn_cmd->add_option("--subsample", gn.subsample, "Fraction of videos kept")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  gn_cmd->add_option("--threshold", gn.threshold, "Overlap gate for LLM rewrites")->capture_default_str();
  gn.llm.add_to(gn_cmd);

  ValidateOpts va;
  auto* va_cmd = app.add_subcommand("validate", "Word-overlap gate for rewrites, or sample sanity checks");
  va_cmd->add_option("--in", va.in, "JSONL of {generated, original}");
  va_cmd->add_option("--samples", va.samples, "Samples JSONL to check");
  va_cmd->add_option("--out", va.out)->capture_default_str();
  va_cmd->add_option("--threshold", va.threshold)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  va_cmd->add_flag("--normalize", va.normalize, "Lowercase and strip punctuation before comparing");
  va_cmd->add_flag("--strict", va.strict, "Exit 2 when anything is rejected");

  PretrainOpts pt;
  auto* pt_cmd = app.add_subcommand("pretrain-sim", "Stack short clip captions into long-form samples");
  pt_cmd->add_option("--in", pt.in, "ShortPair JSONL")->required();
  pt_cmd->add_option("--out", pt.out)->required();
  pt_cmd->add_option("--k", pt.k, "Stack size")
      ->capture_default_str()
      ->check(CLI::Range(pretrain::kMinStackSize, pretrain::kMaxStackSize));
  pt_cmd->add_option("--negatives", pt.negatives, "reorder,partial")->capture_default_str();
  pt_cmd->add_option("--drop-count", pt.drop_count, "Segments removed by partial negatives")->capture_default_str();

  TrainToyOpts tt;
  auto* tt_cmd = app.add_subcommand("train-toy", "Train the linear dual encoder on synthetic ordered negatives");
  tt_cmd->add_option("--lambda", tt.train.lambda)->capture_default_str()->check(CLI::NonNegativeNumber);
  tt_cmd->add_option("--lr", tt.train.lr)->capture_default_str()->check(CLI::PositiveNumber);
  tt_cmd->add_option("--steps", tt.train.steps)->capture_default_str()->check(CLI::NonNegativeNumber);
  tt_cmd->add_option("--batch", tt.train.batch)->capture_default_str()->check(CLI::PositiveNumber);
  tt_cmd->add_option("--dims", tt.dims, "content,cue,embed")->capture_default_str();
  tt_cmd->add_option("--train-samples", tt.train_samples)->capture_default_str()->check(CLI::PositiveNumber);
  tt_cmd->add_option("--heldout-samples", tt.heldout_samples)->capture_default_str()->check(CLI::PositiveNumber);
  tt_cmd->add_flag("--fixed-temperature", tt.fixed_temperature);
  tt_cmd->add_option("--report", tt.report, "Metrics JSON ('-' for stdout)")->capture_default_str();

  EvalOpts ev;
  auto* ev_cmd = app.add_subcommand("eval", "Binary accuracy, comprehensive score and Recall@1");
  ev_cmd->add_option("--samples", ev.samples)->required();
  ev_cmd->add_option("--video-embs", ev.video_embs);
  ev_cmd->add_option("--text-embs", ev.text_embs);
  ev_cmd->add_option("--choice-endpoint", ev.choice_endpoint, "Binary-choice scorer URL");
  ev_cmd->add_flag("--random-baseline", ev.random_baseline, "Score with seeded uniform noise");
  ev_cmd->add_option("--max-in-flight", ev.max_in_flight)->capture_default_str()->check(CLI::PositiveNumber);
  ev_cmd->add_option("--subsample", ev.subsample)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  ev_cmd->add_flag("--no-recall", ev.no_recall, "Skip retrieval metrics");
  ev_cmd->add_option("--out", ev.out)->capture_default_str();

  GradcheckOpts gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the loss gradients");
  gc_cmd->add_option("--batches", gc.check.batches)->capture_default_str()->check(CLI::PositiveNumber);
  gc_cmd->add_option("--max-b", gc.check.max_batch)->capture_default_str()->check(CLI::PositiveNumber);
  gc_cmd->add_option("--max-d", gc.check.max_dim)->capture_default_str()->check(CLI::Range(2, 1024));
  gc_cmd->add_option("--max-n", gc.check.max_negatives)->capture_default_str()->check(CLI::NonNegativeNumber);
  gc_cmd->add_option("--step", gc.check.h, "Finite-difference step")->capture_default_str()->check(CLI::PositiveNumber);
  gc_cmd->add_option("--tol", gc.tolerance)->capture_default_str()->check(CLI::PositiveNumber);

  std::string er_samples;
  std::string er_out = "-";
  auto* er_cmd = app.add_subcommand("export-refs", "List the video/text ids an embedding model must cover");
  er_cmd->add_option("--samples", er_samples)->required();
  er_cmd->add_option("--out", er_out)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  setup_logging(g.log_level, err);
  try {
    if (bp_cmd->parsed()) return build_positives(g, bp, out, err);
    if (gn_cmd->parsed()) return gen_negatives(g, gn, out, err);
    if (va_cmd->parsed()) return validate_cmd(g, va, out, err);
    if (pt_cmd->parsed()) return pretrain_sim(g, pt, out, err);
    if (tt_cmd->parsed()) return train_toy_cmd(g, tt, out, err);
    if (ev_cmd->parsed()) return eval_cmd(g, ev, out, err);
    if (gc_cmd->parsed()) return gradcheck_cmd(g, gc, out, err);
    if (er_cmd->parsed()) return export_refs(g, er_samples, er_out, out);
  } catch (const Error& e) {
    err << fmt::format("error ({}): {}\n", to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::Input ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace vidcomp::cli
