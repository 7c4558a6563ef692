#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fado/rng.hpp"
#include "fado/strategies.hpp"
#include "fado/tokenizer.hpp"

namespace fado {

using json = nlohmann::json;

enum class Speaker { seeker, supporter };

inline const char* speaker_name(Speaker s) { return s == Speaker::seeker ? "seeker" : "supporter"; }

struct Utterance {
  Speaker speaker = Speaker::seeker;
  std::string text;
  std::optional<Strategy> strategy;  // supporter only
  std::optional<int> rating;         // seeker 5-star feedback
  int index = 0;
};

// Post-conversation survey; -1 encodes a missing field.
struct SurveyScores {
  int stress_pre = -1;
  int stress_post = -1;
  int relevance = -1;
  int empathy = -1;

  bool complete() const {
    return stress_pre != -1 && stress_post != -1 && relevance != -1 && empathy != -1;
  }
};

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;
  SurveyScores survey;
};

// ---------------------------------------------------------------------------
// ingestion

// Field-name mapping so other exports of the same data can be ingested.
struct SchemaConfig {
  std::string dialog = "dialog";
  std::string speaker = "speaker";
  std::string content = "content";
  std::string annotation = "annotation";
  std::string strategy = "strategy";
  std::string feedback = "feedback";
  std::string survey = "survey_score";
  std::string survey_seeker = "seeker";
  std::string stress_pre = "initial_emotion_intensity";
  std::string stress_post = "final_emotion_intensity";
  std::string relevance = "relevance";
  std::string empathy = "empathy";
  std::string seeker_label = "seeker";
  std::string supporter_label = "supporter";
  std::string conversation_id = "id";

  static SchemaConfig from_json(const json& j) {
    SchemaConfig c;
    auto get = [&](const char* key, std::string& field) {
      if (j.contains(key)) field = j.at(key).get<std::string>();
    };
    get("dialog", c.dialog);
    get("speaker", c.speaker);
    get("content", c.content);
    get("annotation", c.annotation);
    get("strategy", c.strategy);
    get("feedback", c.feedback);
    get("survey", c.survey);
    get("survey_seeker", c.survey_seeker);
    get("stress_pre", c.stress_pre);
    get("stress_post", c.stress_post);
    get("relevance", c.relevance);
    get("empathy", c.empathy);
    get("seeker_label", c.seeker_label);
    get("supporter_label", c.supporter_label);
    get("conversation_id", c.conversation_id);
    return c;
  }

  static SchemaConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read schema config: " + path);
    json j;
    in >> j;
    return from_json(j);
  }
};

enum class MissingStrategyPolicy { reject, flag };

struct LoadOptions {
  SchemaConfig schema;
  bool fail_fast = false;
  MissingStrategyPolicy missing_strategy = MissingStrategyPolicy::reject;
};

struct RejectedRecord {
  size_t record_index = 0;
  std::string id;
  std::string error;

  json to_json() const { return json{{"record_index", record_index}, {"id", id}, {"error", error}}; }
};

struct LoadResult {
  std::vector<Conversation> conversations;
  std::vector<RejectedRecord> rejected;
};

namespace detail {

// survey values arrive as "4", 4, or 4.0 depending on the export; -1/absent
// means the survey was not completed
inline int parse_survey_value(const json& j) {
  int v;
  if (j.is_string()) {
    const std::string& s = j.get_ref<const std::string&>();
    try {
      size_t pos = 0;
      v = std::stoi(s, &pos);
      if (pos != s.size()) return -1;
    } catch (...) {
      return -1;
    }
  } else if (j.is_number_integer()) {
    v = j.get<int>();
  } else if (j.is_number_float()) {
    double d = j.get<double>();
    v = static_cast<int>(std::llround(d));
    if (std::abs(d - v) > 1e-9) throw std::runtime_error("survey value not integral");
  } else {
    return -1;
  }
  if (v == -1) return -1;
  if (v < 1 || v > 5) throw std::runtime_error("survey value outside 1..5");
  return v;
}

inline std::optional<int> parse_rating(const json& j) {
  int v;
  if (j.is_string()) {
    const std::string& s = j.get_ref<const std::string&>();
    size_t pos = 0;
    v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::runtime_error("rating not an integer: " + s);
  } else if (j.is_number_integer()) {
    v = j.get<int>();
  } else {
    throw std::runtime_error("rating has unsupported type");
  }
  if (v < 1 || v > 5) throw std::runtime_error("rating outside 1..5");
  return v;
}

inline Conversation parse_conversation(const json& rec, size_t record_index,
                                       const LoadOptions& opt,
                                       std::vector<RejectedRecord>* flags) {
  const SchemaConfig& s = opt.schema;
  Conversation conv;
  conv.id = rec.contains(s.conversation_id) && rec.at(s.conversation_id).is_string()
                ? rec.at(s.conversation_id).get<std::string>()
                : "conv_" + std::to_string(record_index);

  if (!rec.contains(s.dialog) || !rec.at(s.dialog).is_array())
    throw std::runtime_error("missing dialog array");
  const json& dialog = rec.at(s.dialog);
  if (dialog.empty()) throw std::runtime_error("empty dialog");

  int index = 0;
  for (const json& turn : dialog) {
    Utterance u;
    u.index = index;
    if (!turn.contains(s.speaker)) throw std::runtime_error("utterance missing speaker");
    std::string sp = turn.at(s.speaker).get<std::string>();
    if (sp == s.seeker_label)
      u.speaker = Speaker::seeker;
    else if (sp == s.supporter_label)
      u.speaker = Speaker::supporter;
    else
      throw std::runtime_error("unknown speaker label: " + sp);
    if (!turn.contains(s.content) || !turn.at(s.content).is_string())
      throw std::runtime_error("utterance missing text content");
    u.text = turn.at(s.content).get<std::string>();

    if (turn.contains(s.annotation) && turn.at(s.annotation).is_object()) {
      const json& ann = turn.at(s.annotation);
      if (ann.contains(s.strategy)) {
        if (u.speaker != Speaker::supporter)
          throw std::runtime_error("strategy annotation on a seeker utterance");
        std::string name = ann.at(s.strategy).get<std::string>();
        auto st = strategy_from_name(name);
        if (!st) throw std::runtime_error("unknown strategy name: " + name);
        u.strategy = *st;
      }
      if (ann.contains(s.feedback)) {
        if (u.speaker != Speaker::seeker)
          throw std::runtime_error("feedback rating on a supporter utterance");
        u.rating = parse_rating(ann.at(s.feedback));
      }
    }
    if (u.speaker == Speaker::supporter && !u.strategy) {
      if (opt.missing_strategy == MissingStrategyPolicy::reject)
        throw std::runtime_error("supporter utterance without strategy annotation");
      if (flags)
        flags->push_back({record_index, conv.id,
                          "flagged: supporter utterance " + std::to_string(index) +
                              " lacks a strategy annotation"});
    }
    conv.utterances.push_back(std::move(u));
    ++index;
  }

  if (rec.contains(s.survey) && rec.at(s.survey).is_object()) {
    const json& sv = rec.at(s.survey);
    const json* seeker_side = &sv;
    if (sv.contains(s.survey_seeker) && sv.at(s.survey_seeker).is_object())
      seeker_side = &sv.at(s.survey_seeker);
    auto field = [&](const std::string& key) {
      return seeker_side->contains(key) ? parse_survey_value(seeker_side->at(key)) : -1;
    };
    conv.survey.stress_pre = field(s.stress_pre);
    conv.survey.stress_post = field(s.stress_post);
    conv.survey.relevance = field(s.relevance);
    conv.survey.empathy = field(s.empathy);
  }
  return conv;
}

}  // namespace detail

inline LoadResult load_corpus_json(const json& root, const LoadOptions& opt = {}) {
  if (!root.is_array()) throw std::runtime_error("corpus root must be a JSON array");
  if (root.empty()) throw std::runtime_error("empty corpus");
  LoadResult result;
  for (size_t i = 0; i < root.size(); ++i) {
    try {
      result.conversations.push_back(detail::parse_conversation(root[i], i, opt, &result.rejected));
    } catch (const std::exception& e) {
      if (opt.fail_fast)
        throw std::runtime_error("record " + std::to_string(i) + ": " + e.what());
      std::string id = root[i].is_object() && root[i].contains(opt.schema.conversation_id) &&
                               root[i][opt.schema.conversation_id].is_string()
                           ? root[i][opt.schema.conversation_id].get<std::string>()
                           : "conv_" + std::to_string(i);
      result.rejected.push_back({i, id, e.what()});
    }
  }
  if (result.conversations.empty()) throw std::runtime_error("empty corpus");
  return result;
}

inline LoadResult load_corpus(const std::string& path, const LoadOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read corpus file: " + path);
  json root;
  try {
    in >> root;
  } catch (const std::exception& e) {
    throw std::runtime_error("corpus is not valid JSON: " + std::string(e.what()));
  }
  return load_corpus_json(root, opt);
}

// ---------------------------------------------------------------------------
// canonical internal schema

inline json to_canonical_json(const Conversation& conv) {
  json utts = json::array();
  for (const auto& u : conv.utterances) {
    json ju{{"index", u.index}, {"speaker", speaker_name(u.speaker)}, {"text", u.text}};
    if (u.strategy) ju["strategy"] = strategy_name(*u.strategy);
    if (u.rating) ju["rating"] = *u.rating;
    utts.push_back(std::move(ju));
  }
  return json{{"id", conv.id},
              {"utterances", std::move(utts)},
              {"survey",
               {{"stress_pre", conv.survey.stress_pre},
                {"stress_post", conv.survey.stress_post},
                {"relevance", conv.survey.relevance},
                {"empathy", conv.survey.empathy}}}};
}

inline json to_canonical_json(const std::vector<Conversation>& convs) {
  json arr = json::array();
  for (const auto& c : convs) arr.push_back(to_canonical_json(c));
  return arr;
}

inline Conversation conversation_from_canonical(const json& j) {
  Conversation conv;
  conv.id = j.at("id").get<std::string>();
  for (const json& ju : j.at("utterances")) {
    Utterance u;
    u.index = ju.at("index").get<int>();
    std::string sp = ju.at("speaker").get<std::string>();
    u.speaker = sp == "supporter" ? Speaker::supporter : Speaker::seeker;
    u.text = ju.at("text").get<std::string>();
    if (ju.contains("strategy")) u.strategy = *strategy_from_name(ju.at("strategy").get<std::string>());
    if (ju.contains("rating")) u.rating = ju.at("rating").get<int>();
    conv.utterances.push_back(std::move(u));
  }
  const json& sv = j.at("survey");
  conv.survey.stress_pre = sv.at("stress_pre").get<int>();
  conv.survey.stress_post = sv.at("stress_post").get<int>();
  conv.survey.relevance = sv.at("relevance").get<int>();
  conv.survey.empathy = sv.at("empathy").get<int>();
  return conv;
}

inline std::vector<Conversation> corpus_from_canonical(const json& arr) {
  std::vector<Conversation> out;
  for (const json& j : arr) out.push_back(conversation_from_canonical(j));
  return out;
}

// ---------------------------------------------------------------------------
// splits

struct CorpusSplit {
  std::vector<Conversation> train;
  std::vector<Conversation> dev;
  std::vector<Conversation> test;
};

// Partition by whole conversation: floor sizes for dev/test, remainder to
// train. Deterministic for a fixed seed.
inline CorpusSplit split_corpus(const std::vector<Conversation>& convs,
                                std::array<double, 3> ratios, uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
  for (double r : ratios)
    if (r < 0.0) throw std::invalid_argument("split ratios must be non-negative");
  size_t n = convs.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  deterministic_shuffle(order, seed);
  size_t n_dev = static_cast<size_t>(ratios[1] * n);
  size_t n_test = static_cast<size_t>(ratios[2] * n);
  size_t n_train = n - n_dev - n_test;
  CorpusSplit split;
  for (size_t i = 0; i < n; ++i) {
    const Conversation& c = convs[order[i]];
    if (i < n_train)
      split.train.push_back(c);
    else if (i < n_train + n_dev)
      split.dev.push_back(c);
    else
      split.test.push_back(c);
  }
  return split;
}

// Official split files override ratio-based splitting: a JSON object with
// "train"/"dev"/"test" arrays of conversation ids ("valid" accepted for dev).
inline CorpusSplit split_corpus_official(const std::vector<Conversation>& convs,
                                         const json& split_ids) {
  auto ids_of = [&](const char* primary, const char* alias) {
    std::vector<std::string> ids;
    const char* key = split_ids.contains(primary) ? primary : alias;
    if (!split_ids.contains(key)) throw std::runtime_error("split file missing list: " + std::string(primary));
    for (const json& j : split_ids.at(key)) ids.push_back(j.get<std::string>());
    return ids;
  };
  std::map<std::string, const Conversation*> by_id;
  for (const auto& c : convs) by_id[c.id] = &c;
  auto collect = [&](const std::vector<std::string>& ids) {
    std::vector<Conversation> out;
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw std::runtime_error("split file lists unknown conversation id: " + id);
      out.push_back(*it->second);
    }
    return out;
  };
  CorpusSplit split;
  split.train = collect(ids_of("train", "train"));
  split.dev = collect(ids_of("dev", "valid"));
  split.test = collect(ids_of("test", "test"));
  return split;
}

// ---------------------------------------------------------------------------
// statistics

struct CorpusStats {
  size_t dialogues = 0;
  size_t utterances = 0;
  size_t supporter_utterances = 0;
  size_t seeker_utterances = 0;
  double avg_dialogue_length = 0.0;       // utterances per conversation
  double avg_supporter_per_dialogue = 0.0;
  double avg_seeker_per_dialogue = 0.0;
  double avg_utterance_tokens = 0.0;
  double avg_supporter_tokens = 0.0;
  double avg_seeker_tokens = 0.0;
  // stress_post - stress_pre over conversations with both fields present
  std::map<int, size_t> stress_change_histogram;
  size_t conversations_with_stress = 0;
  double negative_stress_fraction = 0.0;

  json to_json() const {
    json h = json::object();
    for (auto [k, v] : stress_change_histogram) h[std::to_string(k)] = v;
    return json{{"dialogues", dialogues},
                {"utterances", utterances},
                {"supporter_utterances", supporter_utterances},
                {"seeker_utterances", seeker_utterances},
                {"avg_dialogue_length", avg_dialogue_length},
                {"avg_supporter_per_dialogue", avg_supporter_per_dialogue},
                {"avg_seeker_per_dialogue", avg_seeker_per_dialogue},
                {"avg_utterance_tokens", avg_utterance_tokens},
                {"avg_supporter_tokens", avg_supporter_tokens},
                {"avg_seeker_tokens", avg_seeker_tokens},
                {"stress_change_histogram", std::move(h)},
                {"conversations_with_stress", conversations_with_stress},
                {"negative_stress_fraction", negative_stress_fraction}};
  }
};

inline CorpusStats corpus_stats(const std::vector<Conversation>& convs) {
  if (convs.empty()) throw std::invalid_argument("corpus_stats: empty input");
  CorpusStats st;
  st.dialogues = convs.size();
  size_t tokens_total = 0, tokens_sup = 0, tokens_seek = 0;
  size_t negative = 0;
  for (const auto& c : convs) {
    for (const auto& u : c.utterances) {
      ++st.utterances;
      size_t ntok = word_tokenize(u.text).size();
      tokens_total += ntok;
      if (u.speaker == Speaker::supporter) {
        ++st.supporter_utterances;
        tokens_sup += ntok;
      } else {
        ++st.seeker_utterances;
        tokens_seek += ntok;
      }
    }
    if (c.survey.stress_pre != -1 && c.survey.stress_post != -1) {
      int change = c.survey.stress_post - c.survey.stress_pre;
      ++st.conversations_with_stress;
      ++st.stress_change_histogram[change];
      if (change < 0) ++negative;
    }
  }
  st.avg_dialogue_length = static_cast<double>(st.utterances) / st.dialogues;
  st.avg_supporter_per_dialogue = static_cast<double>(st.supporter_utterances) / st.dialogues;
  st.avg_seeker_per_dialogue = static_cast<double>(st.seeker_utterances) / st.dialogues;
  st.avg_utterance_tokens = st.utterances ? static_cast<double>(tokens_total) / st.utterances : 0.0;
  st.avg_supporter_tokens =
      st.supporter_utterances ? static_cast<double>(tokens_sup) / st.supporter_utterances : 0.0;
  st.avg_seeker_tokens =
      st.seeker_utterances ? static_cast<double>(tokens_seek) / st.seeker_utterances : 0.0;
  st.negative_stress_fraction =
      st.conversations_with_stress
          ? static_cast<double>(negative) / st.conversations_with_stress
          : 0.0;
  return st;
}

}  // namespace fado
