#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fado/examples.hpp"
#include "fado/generator.hpp"
#include "fado/losses.hpp"
#include "fado/stratdict.hpp"

namespace fado {

// Table-4 style switches. The feedback ones rescope delta_s without touching
// extracted examples; the flow ones zero one control direction; the
// dictionary one replaces descriptions with bare strategy marker tokens.
struct AblationConfig {
  bool no_strategy_history = false;
  bool no_emotion = false;
  bool no_turn_feedback = false;
  bool no_conv_feedback = false;
  bool no_s2c = false;
  bool no_c2s = false;
  bool no_dictionary = false;
};

inline double effective_delta_s(const FeedbackSignals& f, const AblationConfig& ab, double mu) {
  double turn = ab.no_turn_feedback ? 0.0 : f.delta_e + f.delta_r;
  double conv = ab.no_conv_feedback ? 0.0 : mu * f.delta_c;
  return turn + conv;
}

inline double effective_delta_s(const FeedbackSignals& f, const AblationConfig& ab) {
  return effective_delta_s(f, ab, f.mu);
}

struct ForwardOptions {
  AblationConfig ablation;
  bool teacher_force_strategy = true;  // gold strategy picks the description rows
  double loss_eps = 1e-8;
  std::optional<double> mu;  // overrides the mu captured at extraction time
};

// Whole-utterance truncation, oldest dropped first; a lone overflowing
// utterance keeps its most recent tokens.
inline std::vector<std::vector<int>> fit_history_tokens(std::vector<std::vector<int>> utts,
                                                        int max_positions) {
  if (utts.empty()) throw std::invalid_argument("fit_history_tokens: no utterances");
  auto layout_cost = [&] {
    size_t cost = utts.size();  // CLS plus one SEP per later utterance
    for (const auto& u : utts) cost += u.size();
    return cost;
  };
  while (utts.size() > 1 && layout_cost() > static_cast<size_t>(max_positions))
    utts.erase(utts.begin());
  if (utts.size() == 1 && layout_cost() > static_cast<size_t>(max_positions)) {
    auto& u = utts.front();
    u.erase(u.begin(), u.end() - (max_positions - 1));
  }
  return utts;
}

struct ExampleEncoding {
  ContextLayout layout;
  std::vector<int> decoder_inputs;   // BOS then gold tokens
  std::vector<int> decoder_targets;  // gold tokens then EOS
};

inline ExampleEncoding encode_example(const TrainingExample& ex, const Vocab& vocab,
                                      int max_positions) {
  ExampleEncoding enc;
  std::vector<std::vector<int>> utts;
  for (const auto& u : ex.history) utts.push_back(vocab.encode(u.text));
  enc.layout = build_context_layout(fit_history_tokens(std::move(utts), max_positions));

  std::vector<int> target_ids = vocab.encode(ex.target.text);
  if (static_cast<int>(target_ids.size()) > max_positions - 1)
    target_ids.resize(max_positions - 1);
  enc.decoder_inputs.push_back(Vocab::kBos);
  enc.decoder_inputs.insert(enc.decoder_inputs.end(), target_ids.begin(), target_ids.end());
  enc.decoder_targets = target_ids;
  enc.decoder_targets.push_back(Vocab::kEos);
  return enc;
}

// Shared representation path: context states through the selector and both
// control gates.
struct RepresentationForward {
  ad::Var h;        // T x d context states
  ad::Var s, c, r;  // strategy history, context, emotion summaries
  ad::Var o;        // raw strategy logits
  ad::Var o_prime;  // gated logits
  ad::Var h_prime;  // gated context states
  StrategyProbs probs;
  int predicted = 0;
};

inline RepresentationForward representation_forward(ad::Tape& t, nn::ParamBinder& bind,
                                                    ModelState& m, const EmotionScorer& scorer,
                                                    const ContextLayout& layout,
                                                    const std::vector<Strategy>& strategy_history,
                                                    const AblationConfig& ab = {}) {
  const int d = m.cfg.enc.d;
  RepresentationForward out;
  out.h = encode_context(t, bind, m, layout);
  out.c = pool_mean(t, out.h);
  out.s = ab.no_strategy_history ? t.constant(Mat(1, d))
                                 : encode_strategy_history(t, bind, m, strategy_history);
  out.r = ab.no_emotion ? t.constant(Mat(1, d))
                        : project_emotion(t, bind, m, scorer.encode_layout(layout));
  out.o = select_strategy(t, bind, m.dfs, out.s, out.c, out.r);
  GateVars gates = control_gates(t, bind, m.dcr, out.c, out.o);
  FlowConfig flow = m.cfg.flow;
  if (ab.no_s2c) flow.alpha = 0.0;
  if (ab.no_c2s) flow.beta = 0.0;
  FlowVars flows = apply_flows(t, out.o, out.h, gates, flow);
  out.o_prime = flows.o_prime;
  out.h_prime = flows.h_prime;
  out.probs = strategy_probs(t.val(out.o_prime));
  out.predicted = static_cast<int>(out.probs.argmax);
  return out;
}

// Full teacher-forced decoder pass: one logit row per input position.
inline ad::Var decoder_logits(ad::Tape& t, nn::ParamBinder& bind, ModelState& m, ad::Var memory,
                              const std::vector<int>& inputs) {
  ad::Var x = nn::embed_sequence(t, bind, m.tok_emb, m.decoder.pos_emb, inputs);
  Mat mask = nn::causal_mask(static_cast<int>(inputs.size()));
  ad::Var states = nn::decoder_forward(t, bind, m.decoder, x, memory, m.cfg.enc.heads, mask);
  return ad::affine(t, states, bind(m.decoder.out_proj), bind(m.decoder.out_bias));
}

struct ExampleForward {
  RepresentationForward rep;
  ad::Var v;       // description rows
  ad::Var l1;      // feedback-aware strategy loss
  ad::Var l2;      // generation cross entropy, summed over target tokens
  int gold = 0;
  int target_tokens = 0;
  double delta_s = 0.0;
};

inline ExampleForward example_forward(ad::Tape& t, nn::ParamBinder& bind, ModelState& m,
                                      const StrategyDictionary& dict, const Vocab& vocab,
                                      const EmotionScorer& scorer, const TrainingExample& ex,
                                      const ForwardOptions& opt = {}) {
  if (!ex.target.strategy) throw std::invalid_argument("example_forward: target lacks a strategy");
  ExampleEncoding enc = encode_example(ex, vocab, m.cfg.enc.max_positions);

  ExampleForward out;
  out.rep = representation_forward(t, bind, m, scorer, enc.layout, ex.strategy_history,
                                   opt.ablation);
  out.gold = static_cast<int>(*ex.target.strategy);
  out.delta_s = effective_delta_s(ex.feedback, opt.ablation,
                                  opt.mu.value_or(ex.feedback.mu));
  out.l1 = strategy_loss(t, out.rep.o_prime, out.gold, out.delta_s, opt.loss_eps);

  Strategy conditioning = opt.teacher_force_strategy
                              ? *ex.target.strategy
                              : static_cast<Strategy>(out.rep.predicted);
  DictMode mode = opt.ablation.no_dictionary ? DictMode::token : m.cfg.dict_mode;
  out.v = encode_description(t, bind, m, dict, vocab, conditioning, mode);

  ad::Var memory = build_memory(t, out.rep.h_prime, out.v);
  ad::Var logits = decoder_logits(t, bind, m, memory, enc.decoder_inputs);
  out.l2 = generation_loss(t, logits, enc.decoder_targets);
  out.target_tokens = static_cast<int>(enc.decoder_targets.size());
  return out;
}

// Teacher-forced sweep over a set of examples: strategy predictions plus the
// pooled generation NLL that perplexity is derived from.
struct BatchEval {
  std::vector<int> predicted;
  std::vector<int> gold;
  double l2_sum = 0.0;
  long long target_tokens = 0;

  double strategy_accuracy() const {
    if (predicted.empty()) throw std::logic_error("BatchEval: empty");
    size_t hits = 0;
    for (size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == gold[i];
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
  }

  double l2_per_token() const {
    if (target_tokens == 0) throw std::logic_error("BatchEval: no tokens");
    return l2_sum / static_cast<double>(target_tokens);
  }

  double perplexity() const { return std::exp(l2_per_token()); }
};

inline BatchEval evaluate_examples(ModelState& m, const StrategyDictionary& dict,
                                   const Vocab& vocab, const EmotionScorer& scorer,
                                   const std::vector<TrainingExample>& examples,
                                   const ForwardOptions& opt = {}) {
  BatchEval out;
  for (const auto& ex : examples) {
    ad::Tape t;
    nn::ParamBinder bind(t);
    ExampleForward f = example_forward(t, bind, m, dict, vocab, scorer, ex, opt);
    out.predicted.push_back(f.rep.predicted);
    out.gold.push_back(f.gold);
    out.l2_sum += t.val(f.l2)(0, 0);
    out.target_tokens += f.target_tokens;
  }
  return out;
}

struct InferenceResult {
  int strategy_id = 0;
  StrategyProbs probs;
  GenerationResult generation;
  std::string text;
};

// Prediction path: argmax strategy under the gated logits, then nucleus
// decoding against [H'; V].
inline InferenceResult run_inference(ModelState& m, const StrategyDictionary& dict,
                                     const Vocab& vocab, const EmotionScorer& scorer,
                                     const std::vector<Utterance>& history,
                                     const std::vector<Strategy>& strategy_history,
                                     const DecodingConfig& dcfg, const AblationConfig& ab = {}) {
  std::vector<std::vector<int>> utts;
  for (const auto& u : history) utts.push_back(vocab.encode(u.text));
  ContextLayout layout =
      build_context_layout(fit_history_tokens(std::move(utts), m.cfg.enc.max_positions));

  ad::Tape t;
  nn::ParamBinder bind(t);
  RepresentationForward rep =
      representation_forward(t, bind, m, scorer, layout, strategy_history, ab);
  DictMode mode = ab.no_dictionary ? DictMode::token : m.cfg.dict_mode;
  ad::Var v = encode_description(t, bind, m, dict, vocab,
                                 static_cast<Strategy>(rep.predicted), mode);

  InferenceResult out;
  out.strategy_id = rep.predicted;
  out.probs = rep.probs;
  out.generation = generate(m, t.val(rep.h_prime), t.val(v), dcfg);
  out.text = vocab.decode(out.generation.token_ids);
  return out;
}

}  // namespace fado
