#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fado/checkpoint.hpp"
#include "fado/config.hpp"
#include "fado/corpus.hpp"
#include "fado/emotion.hpp"
#include "fado/eval.hpp"
#include "fado/metrics.hpp"
#include "fado/pipeline.hpp"
#include "fado/stratdict.hpp"
#include "fado/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fado;

namespace {

// invalid configuration (exit 2) as opposed to runtime failure (exit 1)
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
auto config_phase(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string resolve_path(const std::string& flag_value, const char* env_name) {
  return flag_value.empty() ? env_or(env_name, "") : flag_value;
}

void require_input(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " path is required");
  if (!fs::exists(path)) throw ConfigError(std::string(what) + " does not exist: " + path);
}

void atomic_write(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Flags shared by every subcommand plus the merged key-value view.
struct CommandContext {
  std::string name;
  KvConfig kv;
  uint64_t seed = 1;
  std::string out_dir;
  std::map<std::string, std::string> paths;

  // Timestamps live here and nowhere else, so reruns stay byte-comparable.
  void write_manifest(const json& extra) const {
    json j{{"command", name},
           {"code_version", kFadoVersion},
           {"seed", seed},
           {"generated_at", utc_timestamp()}};
    json cfg = json::object();
    for (const auto& [k, v] : kv.values()) cfg[k] = v;
    j["config"] = cfg;
    json p = json::object();
    for (const auto& [k, v] : paths) p[k] = v;
    j["paths"] = p;
    for (const auto& [k, v] : extra.items()) j[k] = v;
    atomic_write(fs::path(out_dir) / "manifest.json", j.dump(2) + "\n");
  }
};

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> sets;
  long long seed = -1;
  std::string out_dir;

  void attach(CLI::App* cmd, bool out_required = true) {
    cmd->add_option("--config", config_path, "flat key = value config file");
    cmd->add_option("--set", sets, "override one config key (key=value), repeatable");
    cmd->add_option("--seed", seed, "RNG seed; beats the config 'seed' key");
    auto* out = cmd->add_option("--out", out_dir, "output directory");
    if (out_required) out->required();
  }
};

// every command touches every documented namespace so a typo anywhere in a
// shared sweep config fails fast
void touch_known_namespaces(const KvConfig& kv) {
  (void)train_config_from_kv(kv);
  consume_model_keys(kv);
  (void)decoding_config_from_kv(kv);
  (void)example_options_from_kv(kv);
  (void)ablation_from_kv(kv);
  (void)kv.get_double("split.train", 0.8);
  (void)kv.get_double("split.dev", 0.1);
  (void)kv.get_double("split.test", 0.1);
  (void)kv.get_int("corpus.vocab_cap", 8000);
  (void)kv.get_int("seed", 1);
}

CommandContext make_context(const std::string& name, const CommonFlags& flags) {
  return config_phase([&] {
    CommandContext ctx;
    ctx.name = name;
    std::string cfg_path = resolve_path(flags.config_path, "FADO_CONFIG");
    if (!cfg_path.empty()) {
      if (!fs::exists(cfg_path)) throw ConfigError("config file does not exist: " + cfg_path);
      ctx.kv = KvConfig::from_file(cfg_path);
      ctx.paths["config"] = cfg_path;
    }
    for (const auto& s : flags.sets) {
      size_t eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got: " + s);
      ctx.kv.set(detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)));
    }
    touch_known_namespaces(ctx.kv);
    auto unknown = ctx.kv.unconsumed();
    if (!unknown.empty()) {
      std::string msg = "unknown config keys:";
      for (const auto& k : unknown) msg += " " + k;
      throw ConfigError(msg);
    }
    ctx.seed = flags.seed >= 0 ? static_cast<uint64_t>(flags.seed)
                               : static_cast<uint64_t>(ctx.kv.get_int("seed", 1));
    ctx.out_dir = resolve_path(flags.out_dir, "FADO_OUT");
    if (ctx.out_dir.empty()) throw ConfigError("--out directory is required");
    ctx.paths["out"] = ctx.out_dir;
    return ctx;
  });
}

std::vector<Conversation> read_canonical(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read corpus: " + path);
  json arr;
  in >> arr;
  auto convs = corpus_from_canonical(arr);
  if (convs.empty()) throw std::runtime_error("empty corpus: " + path);
  return convs;
}

SurveyMeans means_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read means file: " + path);
  json j;
  in >> j;
  SurveyMeans m;
  m.stress_pre = j.at("stress_pre").get<double>();
  m.stress_post = j.at("stress_post").get<double>();
  m.relevance = j.at("relevance").get<double>();
  m.empathy = j.at("empathy").get<double>();
  return m;
}

json means_to_json(const SurveyMeans& m) {
  return {{"stress_pre", m.stress_pre},
          {"stress_post", m.stress_post},
          {"relevance", m.relevance},
          {"empathy", m.empathy}};
}

json stats_to_json(const CorpusStats& s) {
  json hist = json::object();
  for (const auto& [change, count] : s.stress_change_histogram)
    hist[std::to_string(change)] = count;
  return {{"dialogues", s.dialogues},
          {"utterances", s.utterances},
          {"supporter_utterances", s.supporter_utterances},
          {"seeker_utterances", s.seeker_utterances},
          {"avg_dialogue_length", s.avg_dialogue_length},
          {"avg_supporter_per_dialogue", s.avg_supporter_per_dialogue},
          {"avg_seeker_per_dialogue", s.avg_seeker_per_dialogue},
          {"avg_utterance_tokens", s.avg_utterance_tokens},
          {"avg_supporter_tokens", s.avg_supporter_tokens},
          {"avg_seeker_tokens", s.avg_seeker_tokens},
          {"stress_change_histogram", hist},
          {"conversations_with_stress", s.conversations_with_stress},
          {"negative_stress_fraction", s.negative_stress_fraction}};
}

std::vector<std::string> corpus_texts(const std::vector<Conversation>& convs) {
  std::vector<std::string> texts;
  for (const auto& c : convs)
    for (const auto& u : c.utterances) texts.push_back(u.text);
  return texts;
}

StrategyDictionary dictionary_from(const std::string& path) {
  if (path.empty()) return StrategyDictionary{};
  return StrategyDictionary::from_file(path);
}

std::vector<Prediction> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read predictions: " + path);
  std::vector<Prediction> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty()) continue;
    try {
      out.push_back(prediction_from_json(json::parse(t)));
    } catch (const std::exception& e) {
      throw std::runtime_error("predictions line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

json step_log_to_json(const StepLog& s) {
  return {{"step", s.step},
          {"epoch", s.epoch},
          {"l1", s.l1},
          {"l2", s.l2},
          {"l2_per_token", s.l2_per_token},
          {"lr", s.lr},
          {"grad_norm", s.grad_norm},
          {"positive_feedback", s.positive_feedback},
          {"negative_feedback", s.negative_feedback}};
}

// ---- subcommands ----

struct IngestFlags {
  CommonFlags common;
  std::string corpus, schema;
  bool fail_fast = false;
  bool allow_missing_strategy = false;
};

void cmd_ingest(const IngestFlags& f) {
  CommandContext ctx = make_context("ingest", f.common);
  std::string corpus_path = resolve_path(f.corpus, "FADO_CORPUS");
  std::string schema_path = resolve_path(f.schema, "FADO_SCHEMA");
  config_phase([&] {
    require_input(corpus_path, "--corpus");
    if (!schema_path.empty()) require_input(schema_path, "--schema");
  });
  ctx.paths["corpus"] = corpus_path;
  if (!schema_path.empty()) ctx.paths["schema"] = schema_path;

  LoadOptions opt;
  if (!schema_path.empty()) opt.schema = SchemaConfig::from_file(schema_path);
  opt.fail_fast = f.fail_fast;
  opt.missing_strategy =
      f.allow_missing_strategy ? MissingStrategyPolicy::flag : MissingStrategyPolicy::reject;

  LoadResult res = load_corpus(corpus_path, opt);
  CorpusStats stats = corpus_stats(res.conversations);

  fs::path out(ctx.out_dir);
  atomic_write(out / "corpus.json", to_canonical_json(res.conversations).dump(2) + "\n");
  atomic_write(out / "stats.json", stats_to_json(stats).dump(2) + "\n");
  json rejections = json::array();
  for (const auto& r : res.rejected) rejections.push_back(r.to_json());
  atomic_write(out / "rejections.json", rejections.dump(2) + "\n");
  ctx.write_manifest({{"conversations", res.conversations.size()},
                      {"rejected", res.rejected.size()}});

  std::cout << "ingested " << res.conversations.size() << " conversations ("
            << stats.utterances << " utterances, " << res.rejected.size()
            << " rejected) -> " << ctx.out_dir << "\n";
}

struct SplitFlags {
  CommonFlags common;
  std::string corpus, official;
};

void cmd_split(const SplitFlags& f) {
  CommandContext ctx = make_context("split", f.common);
  std::string corpus_path = resolve_path(f.corpus, "FADO_CORPUS");
  std::string official_path = resolve_path(f.official, "FADO_OFFICIAL");
  config_phase([&] {
    require_input(corpus_path, "--corpus");
    if (!official_path.empty()) require_input(official_path, "--official");
  });
  ctx.paths["corpus"] = corpus_path;
  if (!official_path.empty()) ctx.paths["official"] = official_path;

  auto convs = read_canonical(corpus_path);
  CorpusSplit sp;
  if (official_path.empty()) {
    std::array<double, 3> ratios{ctx.kv.get_double("split.train", 0.8),
                                 ctx.kv.get_double("split.dev", 0.1),
                                 ctx.kv.get_double("split.test", 0.1)};
    sp = config_phase([&] { return split_corpus(convs, ratios, ctx.seed); });
  } else {
    std::ifstream in(official_path);
    if (!in) throw std::runtime_error("cannot read official split: " + official_path);
    json ids;
    in >> ids;
    sp = split_corpus_official(convs, ids);
  }

  SurveyMeans means = compute_survey_means(sp.train);
  fs::path out(ctx.out_dir);
  atomic_write(out / "train.json", to_canonical_json(sp.train).dump(2) + "\n");
  atomic_write(out / "dev.json", to_canonical_json(sp.dev).dump(2) + "\n");
  atomic_write(out / "test.json", to_canonical_json(sp.test).dump(2) + "\n");
  atomic_write(out / "means.json", means_to_json(means).dump(2) + "\n");
  ctx.write_manifest({{"train", sp.train.size()}, {"dev", sp.dev.size()},
                      {"test", sp.test.size()}});

  std::cout << "split " << convs.size() << " conversations into " << sp.train.size() << "/"
            << sp.dev.size() << "/" << sp.test.size() << " -> " << ctx.out_dir << "\n";
}

struct DataFlags {
  CommonFlags common;
  std::string corpus, dictionary, means;
};

struct LoadedData {
  std::vector<Conversation> convs;
  SurveyMeans means;
  StrategyDictionary dict;
};

LoadedData load_data(CommandContext& ctx, const DataFlags& f, const char* means_note) {
  std::string corpus_path = resolve_path(f.corpus, "FADO_CORPUS");
  std::string dict_path = resolve_path(f.dictionary, "FADO_DICTIONARY");
  std::string means_path = resolve_path(f.means, "FADO_MEANS");
  config_phase([&] {
    require_input(corpus_path, "--corpus");
    if (!dict_path.empty()) require_input(dict_path, "--dictionary");
    if (!means_path.empty()) require_input(means_path, "--means");
  });
  ctx.paths["corpus"] = corpus_path;
  if (!dict_path.empty()) ctx.paths["dictionary"] = dict_path;
  if (!means_path.empty()) ctx.paths["means"] = means_path;

  LoadedData d;
  d.convs = read_canonical(corpus_path);
  d.means = means_path.empty() ? compute_survey_means(d.convs) : means_from_file(means_path);
  if (means_path.empty() && means_note) std::cerr << means_note << "\n";
  d.dict = dictionary_from(dict_path);
  return d;
}

constexpr const char* kMeansNote =
    "note: no --means given; survey means computed from this corpus instead of the training split";

void cmd_train(const DataFlags& f) {
  CommandContext ctx = make_context("train", f.common);
  LoadedData data = load_data(ctx, f, nullptr);

  TrainConfig tcfg = config_phase([&] {
    TrainConfig c = train_config_from_kv(ctx.kv);
    c.seed = ctx.seed;
    c.validate();
    return c;
  });
  int vocab_cap = static_cast<int>(ctx.kv.get_int("corpus.vocab_cap", 8000));
  Vocab vocab = Vocab::build(corpus_texts(data.convs), vocab_cap);
  ModelConfig mcfg = config_phase([&] { return model_config_from_kv(ctx.kv, vocab.size()); });
  LexiconEmotionScorer scorer(vocab, mcfg.enc.emotion_dim, mcfg.enc.seed);
  auto examples =
      extract_examples(data.convs, scorer, data.means, example_options_from_kv(ctx.kv));
  if (examples.empty()) throw std::runtime_error("corpus yields no training examples");

  ModelState model(mcfg);
  fs::path out(ctx.out_dir);
  fs::create_directories(out);
  std::ostringstream log;
  TrainHooks hooks;
  hooks.on_step = [&](const StepLog& s) { log << step_log_to_json(s).dump() << "\n"; };
  hooks.on_epoch_end = [&](int epoch, ModelState& m) {
    save_checkpoint((out / ("checkpoint-epoch-" + std::to_string(epoch) + ".bin")).string(), m,
                    vocab);
  };

  TrainResult res = train(model, data.dict, vocab, scorer, examples, tcfg, hooks);

  save_checkpoint((out / "checkpoint-final.bin").string(), model, vocab);
  atomic_write(out / "log.jsonl", log.str());
  atomic_write(out / "dictionary.json", data.dict.to_json().dump(2) + "\n");
  atomic_write(out / "means.json", means_to_json(data.means).dump(2) + "\n");
  ctx.write_manifest({{"steps", res.steps.size()},
                      {"epochs_completed", res.epochs_completed},
                      {"examples", examples.size()},
                      {"vocab_size", vocab.size()}});

  double last_l1 = res.steps.empty() ? 0.0 : res.steps.back().l1;
  double last_l2 = res.steps.empty() ? 0.0 : res.steps.back().l2_per_token;
  std::cout << "trained " << res.steps.size() << " steps over " << res.epochs_completed
            << " epochs on " << examples.size() << " examples (final L1 " << last_l1
            << ", L2/token " << last_l2 << ") -> " << ctx.out_dir << "\n";
}

struct ModelDataFlags {
  DataFlags data;
  std::string checkpoint;
  std::string predictions;  // evaluate only
};

struct LoadedModel {
  Checkpoint ckpt;
  LoadedData data;
  std::vector<TrainingExample> examples;
  std::unique_ptr<LexiconEmotionScorer> scorer;
};

LoadedModel load_model_and_examples(CommandContext& ctx, const ModelDataFlags& f) {
  std::string ckpt_path = resolve_path(f.checkpoint, "FADO_CHECKPOINT");
  config_phase([&] { require_input(ckpt_path, "--checkpoint"); });
  ctx.paths["checkpoint"] = ckpt_path;

  LoadedModel m;
  m.ckpt = load_checkpoint(ckpt_path);
  m.data = load_data(ctx, f.data, kMeansNote);
  const auto& enc = m.ckpt.model.cfg.enc;
  m.scorer = std::make_unique<LexiconEmotionScorer>(m.ckpt.vocab, enc.emotion_dim, enc.seed);
  m.examples = extract_examples(m.data.convs, *m.scorer, m.data.means,
                                example_options_from_kv(ctx.kv));
  if (m.examples.empty()) throw std::runtime_error("corpus yields no examples");
  return m;
}

void cmd_generate(const ModelDataFlags& f) {
  CommandContext ctx = make_context("generate", f.data.common);
  LoadedModel m = load_model_and_examples(ctx, f);

  DecodingConfig dcfg = config_phase([&] { return decoding_config_from_kv(ctx.kv); });
  dcfg.seed = ctx.seed;
  AblationConfig ab = ablation_from_kv(ctx.kv);

  auto preds =
      predict_examples(m.ckpt.model, m.data.dict, m.ckpt.vocab, *m.scorer, m.examples, dcfg, ab);
  std::ostringstream body;
  for (const auto& p : preds) body << prediction_to_json(p).dump() << "\n";
  atomic_write(fs::path(ctx.out_dir) / "predictions.jsonl", body.str());
  ctx.write_manifest({{"predictions", preds.size()}});

  std::cout << "generated " << preds.size() << " predictions -> "
            << (fs::path(ctx.out_dir) / "predictions.jsonl").string() << "\n";
}

void cmd_evaluate(const ModelDataFlags& f) {
  CommandContext ctx = make_context("evaluate", f.data.common);
  std::string preds_path = resolve_path(f.predictions, "FADO_PREDICTIONS");
  config_phase([&] { require_input(preds_path, "--predictions"); });
  ctx.paths["predictions"] = preds_path;

  LoadedModel m = load_model_and_examples(ctx, f);
  auto preds = read_predictions(preds_path);

  ForwardOptions opt;
  opt.ablation = ablation_from_kv(ctx.kv);
  opt.loss_eps = ctx.kv.get_double("train.loss_eps", opt.loss_eps);
  opt.mu = ctx.kv.get_double("train.mu", 0.5);

  EvalReport rep = evaluate_split(m.ckpt.model, m.data.dict, m.ckpt.vocab, *m.scorer,
                                  m.data.convs, m.examples, preds, opt);

  fs::path out(ctx.out_dir);
  atomic_write(out / "report.json", rep.to_json().dump(2) + "\n");
  atomic_write(out / "distribution.csv", distribution_csv(rep.distribution));
  ctx.write_manifest({{"examples", m.examples.size()}});

  std::cout << "acc " << rep.acc << "  ppl " << rep.ppl << "  b-2 " << rep.bleu.at(2)
            << "  b-3 " << rep.bleu.at(3) << "  b-4 " << rep.bleu.at(4) << "  d-1 "
            << rep.distinct.at(1) << "  d-2 " << rep.distinct.at(2) << "  r-l " << rep.rouge_l
            << "\n";
  std::cout << "report -> " << (out / "report.json").string() << "\n";
}

void cmd_analyze_feedback(const DataFlags& f) {
  CommandContext ctx = make_context("analyze-feedback", f.common);
  LoadedData data = load_data(ctx, f, kMeansNote);

  int vocab_cap = static_cast<int>(ctx.kv.get_int("corpus.vocab_cap", 8000));
  int emotion_dim = static_cast<int>(ctx.kv.get_int("model.emotion_dim", 8));
  uint64_t scorer_seed = static_cast<uint64_t>(ctx.kv.get_int("model.seed", 1));
  Vocab vocab = Vocab::build(corpus_texts(data.convs), vocab_cap);
  LexiconEmotionScorer scorer(vocab, emotion_dim, scorer_seed);
  auto examples =
      extract_examples(data.convs, scorer, data.means, example_options_from_kv(ctx.kv));
  if (examples.empty()) throw std::runtime_error("corpus yields no examples");

  std::ostringstream csv;
  csv << "conversation,example_index,delta_e,delta_r,delta_c,delta_s\n";
  size_t negative = 0;
  double sum_e = 0, sum_r = 0, sum_c = 0, sum_s = 0;
  for (const auto& ex : examples) {
    const auto& fb = ex.feedback;
    csv << ex.conv_id << "," << ex.target.index << "," << fb.delta_e << "," << fb.delta_r << ","
        << fb.delta_c << "," << fb.delta_s << "\n";
    negative += fb.delta_s < 0;
    sum_e += fb.delta_e;
    sum_r += fb.delta_r;
    sum_c += fb.delta_c;
    sum_s += fb.delta_s;
  }

  // fixed-width bins so histograms from different corpora align
  constexpr double kBinWidth = 0.25, kLo = -4.0, kHi = 4.0;
  constexpr int kBins = static_cast<int>((kHi - kLo) / kBinWidth);
  auto bin_of = [&](double v) {
    int b = static_cast<int>(std::floor((v - kLo) / kBinWidth));
    return std::min(std::max(b, 0), kBins - 1);
  };
  std::map<std::string, std::vector<long long>> hist;
  for (const char* name : {"delta_e", "delta_r", "delta_c", "delta_s"})
    hist[name] = std::vector<long long>(kBins, 0);
  for (const auto& ex : examples) {
    ++hist["delta_e"][bin_of(ex.feedback.delta_e)];
    ++hist["delta_r"][bin_of(ex.feedback.delta_r)];
    ++hist["delta_c"][bin_of(ex.feedback.delta_c)];
    ++hist["delta_s"][bin_of(ex.feedback.delta_s)];
  }
  std::ostringstream hist_csv;
  hist_csv << "signal,bin_lo,bin_hi,count\n";
  for (const auto& [name, bins] : hist)
    for (int b = 0; b < kBins; ++b)
      hist_csv << name << "," << (kLo + b * kBinWidth) << "," << (kLo + (b + 1) * kBinWidth)
               << "," << bins[b] << "\n";

  CorpusStats stats = corpus_stats(data.convs);
  double n = static_cast<double>(examples.size());
  json summary{{"examples", examples.size()},
               {"delta_s_negative_fraction", negative / n},
               {"delta_s_positive_fraction", (examples.size() - negative) / n},
               {"mean_delta_e", sum_e / n},
               {"mean_delta_r", sum_r / n},
               {"mean_delta_c", sum_c / n},
               {"mean_delta_s", sum_s / n},
               {"conversations_with_stress", stats.conversations_with_stress},
               {"negative_stress_fraction", stats.negative_stress_fraction}};

  fs::path out(ctx.out_dir);
  atomic_write(out / "feedback.csv", csv.str());
  atomic_write(out / "histograms.csv", hist_csv.str());
  atomic_write(out / "summary.json", summary.dump(2) + "\n");
  ctx.write_manifest({{"examples", examples.size()}});

  std::cout << "analyzed " << examples.size() << " examples; negative-stress fraction "
            << stats.negative_stress_fraction << " -> " << ctx.out_dir << "\n";
}

struct CorpusOnlyFlags {
  CommonFlags common;
  std::string corpus;
};

void cmd_analyze_distribution(const CorpusOnlyFlags& f) {
  CommandContext ctx = make_context("analyze-distribution", f.common);
  std::string corpus_path = resolve_path(f.corpus, "FADO_CORPUS");
  config_phase([&] { require_input(corpus_path, "--corpus"); });
  ctx.paths["corpus"] = corpus_path;

  auto convs = read_canonical(corpus_path);
  auto points = strategy_progress_points(convs);
  if (points.empty())
    throw std::runtime_error("no strategy-annotated supporter utterances to analyze");
  Mat dist = strategy_distribution(points);

  json rows = json::array();
  for (int b = 0; b < dist.rows; ++b) {
    json row = json::array();
    for (int s = 0; s < dist.cols; ++s) row.push_back(dist(b, s));
    rows.push_back(row);
  }
  fs::path out(ctx.out_dir);
  atomic_write(out / "distribution.csv", distribution_csv(dist));
  atomic_write(out / "distribution.json",
               json{{"points", points.size()}, {"distribution", rows}}.dump(2) + "\n");
  ctx.write_manifest({{"points", points.size()}});

  std::cout << "bucketed " << points.size() << " strategy placements -> " << ctx.out_dir
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feedback-aware emotional-support dialog toolkit"};
  app.require_subcommand(1);

  IngestFlags ingest;
  auto* c_ingest = app.add_subcommand("ingest", "load a raw corpus into the canonical schema");
  ingest.common.attach(c_ingest);
  c_ingest->add_option("--corpus", ingest.corpus, "raw corpus JSON (env FADO_CORPUS)");
  c_ingest->add_option("--schema", ingest.schema, "field-name mapping JSON (env FADO_SCHEMA)");
  c_ingest->add_flag("--fail-fast", ingest.fail_fast, "stop at the first malformed record");
  c_ingest->add_flag("--allow-missing-strategy", ingest.allow_missing_strategy,
                     "keep supporter utterances without a strategy annotation");

  SplitFlags split;
  auto* c_split = app.add_subcommand("split", "partition a canonical corpus by conversation");
  split.common.attach(c_split);
  c_split->add_option("--corpus", split.corpus, "canonical corpus JSON (env FADO_CORPUS)");
  c_split->add_option("--official", split.official,
                      "JSON with train/dev/test conversation id lists (env FADO_OFFICIAL)");

  DataFlags train_flags;
  auto* c_train = app.add_subcommand("train", "train a model on a canonical split");
  train_flags.common.attach(c_train);
  c_train->add_option("--corpus", train_flags.corpus, "training split JSON (env FADO_CORPUS)");
  c_train->add_option("--dictionary", train_flags.dictionary,
                      "strategy description JSON (env FADO_DICTIONARY)");
  c_train->add_option("--means", train_flags.means,
                      "survey means JSON from split (env FADO_MEANS)");

  ModelDataFlags gen_flags;
  auto* c_gen = app.add_subcommand("generate", "write predictions for a split as JSON lines");
  gen_flags.data.common.attach(c_gen);
  c_gen->add_option("--checkpoint", gen_flags.checkpoint, "model checkpoint (env FADO_CHECKPOINT)");
  c_gen->add_option("--corpus", gen_flags.data.corpus, "split JSON (env FADO_CORPUS)");
  c_gen->add_option("--dictionary", gen_flags.data.dictionary,
                    "strategy description JSON (env FADO_DICTIONARY)");
  c_gen->add_option("--means", gen_flags.data.means, "survey means JSON (env FADO_MEANS)");

  ModelDataFlags eval_flags;
  auto* c_eval = app.add_subcommand("evaluate", "score a predictions file against its gold split");
  eval_flags.data.common.attach(c_eval);
  c_eval->add_option("--checkpoint", eval_flags.checkpoint,
                     "model checkpoint (env FADO_CHECKPOINT)");
  c_eval->add_option("--corpus", eval_flags.data.corpus, "gold split JSON (env FADO_CORPUS)");
  c_eval->add_option("--predictions", eval_flags.predictions,
                     "predictions JSON lines (env FADO_PREDICTIONS)");
  c_eval->add_option("--dictionary", eval_flags.data.dictionary,
                     "strategy description JSON (env FADO_DICTIONARY)");
  c_eval->add_option("--means", eval_flags.data.means, "survey means JSON (env FADO_MEANS)");

  DataFlags afb_flags;
  auto* c_afb = app.add_subcommand("analyze-feedback", "dump per-example feedback signals");
  afb_flags.common.attach(c_afb);
  c_afb->add_option("--corpus", afb_flags.corpus, "canonical corpus JSON (env FADO_CORPUS)");
  c_afb->add_option("--means", afb_flags.means, "survey means JSON (env FADO_MEANS)");
  c_afb->add_option("--dictionary", afb_flags.dictionary,
                    "strategy description JSON (env FADO_DICTIONARY)");

  CorpusOnlyFlags adist_flags;
  auto* c_adist =
      app.add_subcommand("analyze-distribution", "strategy usage over conversation progress");
  adist_flags.common.attach(c_adist);
  c_adist->add_option("--corpus", adist_flags.corpus, "canonical corpus JSON (env FADO_CORPUS)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(c_ingest)) cmd_ingest(ingest);
    else if (app.got_subcommand(c_split)) cmd_split(split);
    else if (app.got_subcommand(c_train)) cmd_train(train_flags);
    else if (app.got_subcommand(c_gen)) cmd_generate(gen_flags);
    else if (app.got_subcommand(c_eval)) cmd_evaluate(eval_flags);
    else if (app.got_subcommand(c_afb)) cmd_analyze_feedback(afb_flags);
    else if (app.got_subcommand(c_adist)) cmd_analyze_distribution(adist_flags);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
