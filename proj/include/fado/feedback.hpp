#pragma once

#include <cmath>
#include <stdexcept>

#include "fado/corpus.hpp"
#include "fado/emotion.hpp"

namespace fado {

// Dual-level feedback components and the combined score selecting the
// encourage/penalize loss branch.
struct FeedbackSignals {
  double delta_e = 0.0;
  double delta_r = 0.0;
  double delta_c = 0.0;
  double delta_s = 0.0;
  double mu = 0.5;
};

// Per-field means over the training split, substituted for missing (-1)
// survey entries. Fields absent from the whole split fall back to the
// neutral midpoint 3.
struct SurveyMeans {
  double stress_pre = 3.0;
  double stress_post = 3.0;
  double relevance = 3.0;
  double empathy = 3.0;
};

inline SurveyMeans compute_survey_means(const std::vector<Conversation>& train_split) {
  double sums[4] = {0, 0, 0, 0};
  size_t counts[4] = {0, 0, 0, 0};
  for (const auto& c : train_split) {
    const int vals[4] = {c.survey.stress_pre, c.survey.stress_post, c.survey.relevance,
                         c.survey.empathy};
    for (int i = 0; i < 4; ++i)
      if (vals[i] != -1) {
        sums[i] += vals[i];
        ++counts[i];
      }
  }
  SurveyMeans m;
  if (counts[0]) m.stress_pre = sums[0] / counts[0];
  if (counts[1]) m.stress_post = sums[1] / counts[1];
  if (counts[2]) m.relevance = sums[2] / counts[2];
  if (counts[3]) m.empathy = sums[3] / counts[3];
  return m;
}

namespace detail {

inline void require_supporter_target(const Conversation& conv, int target_index) {
  if (target_index < 0 || target_index >= static_cast<int>(conv.utterances.size()))
    throw std::out_of_range("feedback: target index out of range");
  if (conv.utterances[target_index].speaker != Speaker::supporter)
    throw std::invalid_argument("feedback: target is not a supporter utterance");
}

}  // namespace detail

// Difference of positive-polarity scores of the two most recent seeker
// utterances before the target; 0 with fewer than two.
inline double turn_emotion_delta(const Conversation& conv, int target_index,
                                 const EmotionScorer& scorer) {
  detail::require_supporter_target(conv, target_index);
  const Utterance* last = nullptr;
  const Utterance* prev = nullptr;
  for (int i = target_index - 1; i >= 0; --i) {
    if (conv.utterances[i].speaker != Speaker::seeker) continue;
    if (!last) {
      last = &conv.utterances[i];
    } else {
      prev = &conv.utterances[i];
      break;
    }
  }
  if (!last || !prev) return 0.0;
  return scorer.positive_score(last->text) - scorer.positive_score(prev->text);
}

// Difference of the two most recent 5-star ratings before the target, each
// normalized to [0,1] via (r-1)/4; 0 with fewer than two.
inline double turn_rating_delta(const Conversation& conv, int target_index) {
  detail::require_supporter_target(conv, target_index);
  int last = 0, prev = 0;
  int found = 0;
  for (int i = target_index - 1; i >= 0 && found < 2; --i) {
    if (!conv.utterances[i].rating) continue;
    int r = *conv.utterances[i].rating;
    if (r < 1 || r > 5) throw std::logic_error("feedback: rating outside 1..5 survived ingestion");
    if (found == 0)
      last = r;
    else
      prev = r;
    ++found;
  }
  if (found < 2) return 0.0;
  return (last - 1) / 4.0 - (prev - 1) / 4.0;
}

enum class ConvDeltaMode {
  centered,    // each term centered to [-1,1]; stress reduction positive
  literal_sum  // plain sum of the three post-conversation scores
};

inline double conversation_delta(const SurveyScores& survey, const SurveyMeans& means,
                                 ConvDeltaMode mode = ConvDeltaMode::centered) {
  double pre = survey.stress_pre != -1 ? survey.stress_pre : means.stress_pre;
  double post = survey.stress_post != -1 ? survey.stress_post : means.stress_post;
  double rel = survey.relevance != -1 ? survey.relevance : means.relevance;
  double emp = survey.empathy != -1 ? survey.empathy : means.empathy;
  if (mode == ConvDeltaMode::literal_sum) return post + rel + emp;
  return -(post - pre) / 4.0 + (rel - 3.0) / 2.0 + (emp - 3.0) / 2.0;
}

inline double feedback_score(double delta_e, double delta_r, double delta_c, double mu) {
  if (!std::isfinite(delta_e) || !std::isfinite(delta_r) || !std::isfinite(delta_c) ||
      !std::isfinite(mu))
    throw std::invalid_argument("feedback_score: non-finite input");
  return delta_e + delta_r + mu * delta_c;
}

struct FeedbackConfig {
  double mu = 0.5;
  ConvDeltaMode mode = ConvDeltaMode::centered;
};

inline FeedbackSignals compute_feedback(const Conversation& conv, int target_index,
                                        const EmotionScorer& scorer, const SurveyMeans& means,
                                        const FeedbackConfig& cfg = {}) {
  FeedbackSignals f;
  f.mu = cfg.mu;
  f.delta_e = turn_emotion_delta(conv, target_index, scorer);
  f.delta_r = turn_rating_delta(conv, target_index);
  f.delta_c = conversation_delta(conv.survey, means, cfg.mode);
  f.delta_s = feedback_score(f.delta_e, f.delta_r, f.delta_c, f.mu);
  return f;
}

}  // namespace fado
