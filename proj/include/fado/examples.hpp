#pragma once

#include "fado/corpus.hpp"
#include "fado/feedback.hpp"

namespace fado {

struct TrainingExample {
  std::vector<Utterance> history;  // strictly before target, oldest first
  Utterance target;                // supporter, strategy present
  std::vector<Strategy> strategy_history;
  FeedbackSignals feedback;
  std::string conv_id;
};

struct ExampleBuildOptions {
  int max_history_tokens = 256;
  FeedbackConfig feedback;
};

// One example per strategy-annotated supporter utterance with index >= 1.
// History keeps whole utterances, dropping the oldest until the token budget
// holds; the most recent utterance is always kept even when it alone exceeds
// the budget.
inline std::vector<TrainingExample> extract_examples(const Conversation& conv,
                                                     const EmotionScorer& scorer,
                                                     const SurveyMeans& means,
                                                     const ExampleBuildOptions& opt = {}) {
  if (opt.max_history_tokens < 1)
    throw std::invalid_argument("extract_examples: max_history_tokens must be >= 1");
  std::vector<size_t> token_counts(conv.utterances.size());
  for (size_t i = 0; i < conv.utterances.size(); ++i)
    token_counts[i] = word_tokenize(conv.utterances[i].text).size();

  std::vector<TrainingExample> out;
  for (size_t t = 1; t < conv.utterances.size(); ++t) {
    const Utterance& target = conv.utterances[t];
    if (target.speaker != Speaker::supporter || !target.strategy) continue;

    size_t start = t;
    size_t budget = static_cast<size_t>(opt.max_history_tokens);
    size_t used = 0;
    while (start > 0) {
      size_t next = token_counts[start - 1];
      if (start != t && used + next > budget) break;
      used += next;
      --start;
    }

    TrainingExample ex;
    ex.conv_id = conv.id;
    ex.target = target;
    for (size_t i = start; i < t; ++i) {
      const Utterance& u = conv.utterances[i];
      ex.history.push_back(u);
      if (u.speaker == Speaker::supporter)
        ex.strategy_history.push_back(u.strategy.value_or(Strategy::others));
    }
    ex.feedback = compute_feedback(conv, static_cast<int>(t), scorer, means, opt.feedback);
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::vector<TrainingExample> extract_examples(const std::vector<Conversation>& convs,
                                                     const EmotionScorer& scorer,
                                                     const SurveyMeans& means,
                                                     const ExampleBuildOptions& opt = {}) {
  std::vector<TrainingExample> out;
  for (const auto& conv : convs) {
    auto part = extract_examples(conv, scorer, means, opt);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace fado
