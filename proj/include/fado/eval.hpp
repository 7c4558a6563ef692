#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fado/metrics.hpp"
#include "fado/pipeline.hpp"

namespace fado {

// One generated response keyed to its gold example.
struct Prediction {
  std::string id;  // conversation id '#' target utterance index
  int strategy = 0;
  std::string text;
};

inline std::string example_key(const TrainingExample& ex) {
  return ex.conv_id + "#" + std::to_string(ex.target.index);
}

inline nlohmann::json prediction_to_json(const Prediction& p) {
  if (p.strategy < 0 || p.strategy >= kNumStrategies)
    throw std::invalid_argument("prediction_to_json: bad strategy id");
  return {{"id", p.id},
          {"strategy", p.strategy},
          {"strategy_name", strategy_names()[p.strategy]},
          {"text", p.text}};
}

inline Prediction prediction_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("id") || !j.contains("strategy") || !j.contains("text"))
    throw std::invalid_argument("prediction: need id, strategy, text");
  Prediction p;
  p.id = j.at("id").get<std::string>();
  p.strategy = j.at("strategy").get<int>();
  p.text = j.at("text").get<std::string>();
  if (p.strategy < 0 || p.strategy >= kNumStrategies)
    throw std::invalid_argument("prediction: strategy id outside 0.." +
                                std::to_string(kNumStrategies - 1));
  return p;
}

// Each example samples from its own deterministic stream so corpus order,
// not shared RNG state, fixes every response.
inline std::vector<Prediction> predict_examples(ModelState& m, const StrategyDictionary& dict,
                                                const Vocab& vocab, const EmotionScorer& scorer,
                                                const std::vector<TrainingExample>& examples,
                                                const DecodingConfig& dcfg,
                                                const AblationConfig& ab = {}) {
  dcfg.validate();
  std::vector<Prediction> out;
  out.reserve(examples.size());
  for (size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    DecodingConfig d = dcfg;
    d.seed = dcfg.seed + i;
    InferenceResult res =
        run_inference(m, dict, vocab, scorer, ex.history, ex.strategy_history, d, ab);
    out.push_back({example_key(ex), res.strategy_id, res.text});
  }
  return out;
}

// Scores a predictions file against its gold split: ACC and the progress
// distribution from the predicted strategies, PPL from teacher-forced
// reference likelihood, BLEU/Distinct/ROUGE-L from the generated texts.
// A prediction with no tokens scores as a reserved placeholder token so
// pair metrics stay defined.
inline EvalReport evaluate_split(ModelState& m, const StrategyDictionary& dict,
                                 const Vocab& vocab, const EmotionScorer& scorer,
                                 const std::vector<Conversation>& convs,
                                 const std::vector<TrainingExample>& examples,
                                 const std::vector<Prediction>& predictions,
                                 const ForwardOptions& opt = {}) {
  if (examples.empty()) throw std::invalid_argument("evaluate_split: no examples");
  std::map<std::string, const Prediction*> by_key;
  for (const auto& p : predictions)
    if (!by_key.emplace(p.id, &p).second)
      throw std::invalid_argument("evaluate_split: duplicate prediction id " + p.id);
  std::map<std::string, size_t> conv_len;
  for (const auto& c : convs) conv_len[c.id] = c.utterances.size();

  std::vector<int> pred_ids, gold_ids;
  std::vector<TokenSeq> hyps, refs;
  std::vector<ProgressPoint> points;
  for (const auto& ex : examples) {
    auto it = by_key.find(example_key(ex));
    if (it == by_key.end())
      throw std::invalid_argument("evaluate_split: missing prediction for " + example_key(ex));
    const Prediction& p = *it->second;
    pred_ids.push_back(p.strategy);
    gold_ids.push_back(static_cast<int>(*ex.target.strategy));

    TokenSeq hyp = word_tokenize(p.text);
    if (hyp.empty()) hyp.push_back("<empty>");
    hyps.push_back(std::move(hyp));
    TokenSeq ref = word_tokenize(ex.target.text);
    if (ref.empty())
      throw std::invalid_argument("evaluate_split: empty reference text in " + example_key(ex));
    refs.push_back(std::move(ref));

    auto lit = conv_len.find(ex.conv_id);
    if (lit == conv_len.end())
      throw std::invalid_argument("evaluate_split: unknown conversation " + ex.conv_id);
    points.push_back({static_cast<double>(ex.target.index) /
                          static_cast<double>(lit->second - 1),
                      p.strategy});
  }

  EvalReport rep;
  rep.acc = strategy_accuracy(pred_ids, gold_ids);
  BatchEval teacher_forced = evaluate_examples(m, dict, vocab, scorer, examples, opt);
  rep.ppl = teacher_forced.perplexity();
  for (int n = 2; n <= 4; ++n) rep.bleu[n] = bleu_n(hyps, refs, n);
  for (int n = 1; n <= 2; ++n) rep.distinct[n] = distinct_n(hyps, n);
  rep.rouge_l = rouge_l(hyps, refs);
  rep.distribution = strategy_distribution(points);
  return rep;
}

}  // namespace fado
