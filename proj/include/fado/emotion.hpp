#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "fado/mat.hpp"
#include "fado/rng.hpp"
#include "fado/tokenizer.hpp"

namespace fado {

// Pluggable emotion backbone: per-token emotion representations for the
// context layout plus a per-utterance positive-polarity score in [0,1].
class EmotionScorer {
 public:
  virtual ~EmotionScorer() = default;
  virtual int dim() const = 0;
  virtual Mat encode_layout(const ContextLayout& layout) const = 0;  // T x dim()
  virtual double positive_score(const std::string& text) const = 0;
  virtual std::string name() const = 0;
};

namespace detail {

inline const std::vector<std::string>& positive_lexicon() {
  static const std::vector<std::string> words = {
      "good",      "great",      "better",     "best",        "happy",
      "glad",      "hope",       "hopeful",    "thanks",      "thank",
      "helpful",   "helps",      "love",       "loved",       "calm",
      "relieved",  "relief",     "nice",       "wonderful",   "amazing",
      "positive",  "excited",    "confident",  "proud",       "comfort",
      "comfortable", "support",  "supported",  "encourage",   "encouraged",
      "improve",   "improved",   "progress",   "fine",        "okay",
      "awesome",   "appreciate", "appreciated", "enjoy",      "enjoyed",
      "peaceful",  "strong",     "stronger",   "motivated",   "optimistic",
      "safe",      "secure",     "smile",      "happier",     "grateful"};
  return words;
}

inline const std::vector<std::string>& negative_lexicon() {
  static const std::vector<std::string> words = {
      "bad",        "worse",      "worst",      "sad",         "unhappy",
      "angry",      "anxious",    "anxiety",    "afraid",      "scared",
      "fear",       "worried",    "worry",      "stress",      "stressed",
      "depressed",  "depression", "lonely",     "alone",       "cry",
      "crying",     "hurt",       "pain",       "painful",     "terrible",
      "awful",      "horrible",   "hate",       "hated",       "tired",
      "exhausted",  "hopeless",   "helpless",   "upset",       "frustrated",
      "frustrating", "overwhelmed", "panic",    "nervous",     "guilty",
      "ashamed",    "mad",        "miserable",  "fail",        "failed",
      "failure",    "lose",       "losing",     "struggle",    "struggling"};
  return words;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

// Tiny seeded classifier: per-token polarity weights fitted by a fixed-step
// logistic regression on a built-in lexicon restricted to the corpus
// vocabulary. Scores are sigmoid(bias + mean token weight); the per-token
// representation is a seeded embedding whose first column carries the
// learned weight.
class LexiconEmotionScorer : public EmotionScorer {
 public:
  LexiconEmotionScorer(const Vocab& vocab, int dim = 16, uint64_t seed = 7)
      : vocab_(vocab), dim_(dim), emb_(vocab.size(), dim), weights_(vocab.size(), 0.0) {
    if (dim < 1) throw std::invalid_argument("LexiconEmotionScorer: dim must be positive");
    Rng rng(seed);
    fill_uniform(emb_, rng, -1.0 / std::sqrt(static_cast<double>(dim)),
                 1.0 / std::sqrt(static_cast<double>(dim)));
    fit();
    for (int t = 0; t < vocab_.size(); ++t) emb_(t, 0) = weights_[t];
  }

  int dim() const override { return dim_; }
  std::string name() const override { return "lexicon"; }

  Mat encode_layout(const ContextLayout& layout) const override {
    Mat e(layout.length(), dim_);
    for (int t = 0; t < layout.length(); ++t) {
      int tid = layout.ids[t];
      if (tid < 0 || tid >= vocab_.size()) throw std::out_of_range("emotion: token id out of range");
      for (int j = 0; j < dim_; ++j) e(t, j) = emb_(tid, j);
    }
    return e;
  }

  double positive_score(const std::string& text) const override {
    std::vector<int> ids = vocab_.encode(text);
    double sum = 0.0;
    int n = 0;
    for (int tid : ids) {
      if (vocab_.is_special(tid)) continue;
      sum += weights_[tid];
      ++n;
    }
    double logit = bias_ + (n ? sum / n : 0.0);
    return detail::sigmoid(logit);
  }

  double token_weight(int tid) const { return weights_.at(tid); }

 private:
  void fit() {
    struct Example {
      int tid;
      double y;
    };
    std::vector<Example> data;
    for (const auto& w : detail::positive_lexicon()) {
      int tid = vocab_.id(w);
      if (tid != Vocab::kUnk) data.push_back({tid, 1.0});
    }
    for (const auto& w : detail::negative_lexicon()) {
      int tid = vocab_.id(w);
      if (tid != Vocab::kUnk) data.push_back({tid, 0.0});
    }
    if (data.empty()) return;
    const double lr = 0.8;
    const int iters = 300;
    for (int it = 0; it < iters; ++it) {
      double bias_grad = 0.0;
      std::vector<double> wgrad(weights_.size(), 0.0);
      for (const auto& ex : data) {
        double p = detail::sigmoid(bias_ + weights_[ex.tid]);
        double g = p - ex.y;
        wgrad[ex.tid] += g;
        bias_grad += g;
      }
      for (size_t t = 0; t < weights_.size(); ++t)
        if (wgrad[t] != 0.0) weights_[t] -= lr * wgrad[t];
      bias_ -= lr * bias_grad / data.size();
    }
  }

  Vocab vocab_;
  int dim_;
  Mat emb_;
  std::vector<double> weights_;
  double bias_ = 0.0;
};

// Neutral stub: zero representations and a flat score. Used by the
// no-emotion ablation and as a deterministic placeholder.
class ConstantEmotionScorer : public EmotionScorer {
 public:
  explicit ConstantEmotionScorer(int dim = 16, double score = 0.5) : dim_(dim), score_(score) {
    if (score < 0.0 || score > 1.0) throw std::invalid_argument("constant score outside [0,1]");
  }
  int dim() const override { return dim_; }
  std::string name() const override { return "constant"; }
  Mat encode_layout(const ContextLayout& layout) const override {
    return Mat(layout.length(), dim_);
  }
  double positive_score(const std::string&) const override { return score_; }

 private:
  int dim_;
  double score_;
};

inline std::unique_ptr<EmotionScorer> make_emotion_scorer(const std::string& name,
                                                          const Vocab& vocab, int dim,
                                                          uint64_t seed) {
  if (name == "lexicon") return std::make_unique<LexiconEmotionScorer>(vocab, dim, seed);
  if (name == "constant") return std::make_unique<ConstantEmotionScorer>(dim);
  throw std::invalid_argument("unknown emotion scorer: " + name);
}

}  // namespace fado
