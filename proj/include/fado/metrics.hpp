#pragma once

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fado/corpus.hpp"
#include "fado/mat.hpp"

namespace fado {

using TokenSeq = std::vector<std::string>;

inline double strategy_accuracy(const std::vector<int>& predictions,
                                const std::vector<int>& gold) {
  if (predictions.empty()) throw std::invalid_argument("strategy_accuracy: empty");
  if (predictions.size() != gold.size())
    throw std::invalid_argument("strategy_accuracy: length mismatch");
  size_t hits = 0;
  for (size_t i = 0; i < predictions.size(); ++i) hits += predictions[i] == gold[i];
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

// exp of the mean per-token negative log-probability over the whole set.
inline double perplexity(const std::vector<double>& token_log_probs) {
  if (token_log_probs.empty()) throw std::invalid_argument("perplexity: no tokens");
  double nll = 0.0;
  for (double lp : token_log_probs) {
    if (!std::isfinite(lp)) throw std::invalid_argument("perplexity: non-finite log-probability");
    nll -= lp;
  }
  return std::exp(nll / static_cast<double>(token_log_probs.size()));
}

namespace detail {

inline std::map<TokenSeq, long long> ngram_counts(const TokenSeq& seq, int n) {
  std::map<TokenSeq, long long> out;
  if (static_cast<int>(seq.size()) < n) return out;
  for (size_t i = 0; i + n <= seq.size(); ++i)
    ++out[TokenSeq(seq.begin() + i, seq.begin() + i + n)];
  return out;
}

inline size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::vector<size_t>> dp(a.size() + 1, std::vector<size_t>(b.size() + 1, 0));
  for (size_t i = 1; i <= a.size(); ++i)
    for (size_t j = 1; j <= b.size(); ++j)
      dp[i][j] = a[i - 1] == b[j - 1] ? dp[i - 1][j - 1] + 1
                                      : std::max(dp[i - 1][j], dp[i][j - 1]);
  return dp[a.size()][b.size()];
}

}  // namespace detail

// Corpus-level cumulative BLEU: clipped modified k-gram precisions pooled
// over all pairs for k = 1..n, uniform geometric mean, brevity penalty when
// the pooled hypothesis length falls short. No smoothing: a zero pooled
// precision at any order zeroes the score.
inline double bleu_n(const std::vector<TokenSeq>& hypotheses,
                     const std::vector<TokenSeq>& references, int n) {
  if (n < 2 || n > 4) throw std::invalid_argument("bleu_n: n must lie in {2,3,4}");
  if (hypotheses.empty()) throw std::invalid_argument("bleu_n: empty pair list");
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("bleu_n: length mismatch");

  long long hyp_len = 0, ref_len = 0;
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_len += static_cast<long long>(hypotheses[i].size());
    ref_len += static_cast<long long>(references[i].size());
  }

  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    long long clipped = 0, total = 0;
    for (size_t i = 0; i < hypotheses.size(); ++i) {
      auto hyp_counts = detail::ngram_counts(hypotheses[i], k);
      auto ref_counts = detail::ngram_counts(references[i], k);
      for (const auto& [gram, count] : hyp_counts) {
        auto it = ref_counts.find(gram);
        clipped += std::min(count, it == ref_counts.end() ? 0LL : it->second);
        total += count;
      }
    }
    if (total == 0 || clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total)) / n;
  }
  double bp = hyp_len < ref_len
                  ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len))
                  : 1.0;
  return bp * std::exp(log_sum);
}

// Corpus-level proportion of unique n-grams across all hypotheses.
inline double distinct_n(const std::vector<TokenSeq>& hypotheses, int n) {
  if (n < 1 || n > 2) throw std::invalid_argument("distinct_n: n must lie in {1,2}");
  if (hypotheses.empty()) throw std::invalid_argument("distinct_n: empty hypothesis list");
  std::set<TokenSeq> unique;
  long long total = 0;
  for (const auto& hyp : hypotheses)
    for (auto& [gram, count] : detail::ngram_counts(hyp, n)) {
      unique.insert(gram);
      total += count;
    }
  if (total == 0) throw std::invalid_argument("distinct_n: no n-grams to count");
  return static_cast<double>(unique.size()) / static_cast<double>(total);
}

// LCS F1 for one pair; zero when nothing aligns.
inline double rouge_l_pair(const TokenSeq& hypothesis, const TokenSeq& reference) {
  if (hypothesis.empty() || reference.empty())
    throw std::invalid_argument("rouge_l: empty sequence");
  size_t lcs = detail::lcs_length(hypothesis, reference);
  if (lcs == 0) return 0.0;
  double p = static_cast<double>(lcs) / static_cast<double>(hypothesis.size());
  double r = static_cast<double>(lcs) / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

inline double rouge_l(const std::vector<TokenSeq>& hypotheses,
                      const std::vector<TokenSeq>& references) {
  if (hypotheses.empty()) throw std::invalid_argument("rouge_l: empty pair list");
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("rouge_l: length mismatch");
  double sum = 0.0;
  for (size_t i = 0; i < hypotheses.size(); ++i)
    sum += rouge_l_pair(hypotheses[i], references[i]);
  return sum / static_cast<double>(hypotheses.size());
}

// One supporter strategy tagged with its conversation-progress fraction.
struct ProgressPoint {
  double progress = 0.0;  // utterance index / (conversation length - 1)
  int strategy = 0;
};

inline std::vector<ProgressPoint> strategy_progress_points(
    const std::vector<Conversation>& convs) {
  std::vector<ProgressPoint> out;
  for (const auto& conv : convs) {
    size_t n = conv.utterances.size();
    if (n < 2) continue;
    for (const auto& u : conv.utterances) {
      if (u.speaker != Speaker::supporter || !u.strategy) continue;
      out.push_back({static_cast<double>(u.index) / static_cast<double>(n - 1),
                     static_cast<int>(*u.strategy)});
    }
  }
  return out;
}

inline constexpr int kProgressIntervals = 6;

// Six equal-width progress intervals (last one right-closed); each non-empty
// row holds per-strategy proportions and sums to 1.
inline Mat strategy_distribution(const std::vector<ProgressPoint>& points,
                                 int num_strategies = kNumStrategies) {
  if (num_strategies < 1) throw std::invalid_argument("strategy_distribution: bad width");
  Mat out(kProgressIntervals, num_strategies);
  std::vector<long long> row_total(kProgressIntervals, 0);
  for (const auto& p : points) {
    if (!(p.progress >= 0.0 && p.progress <= 1.0))
      throw std::invalid_argument("strategy_distribution: progress outside [0,1]");
    if (p.strategy < 0 || p.strategy >= num_strategies)
      throw std::out_of_range("strategy_distribution: bad strategy id");
    int bucket = std::min(kProgressIntervals - 1,
                          static_cast<int>(p.progress * kProgressIntervals));
    out(bucket, p.strategy) += 1.0;
    ++row_total[bucket];
  }
  for (int b = 0; b < kProgressIntervals; ++b)
    if (row_total[b] > 0)
      for (int j = 0; j < num_strategies; ++j) out(b, j) /= static_cast<double>(row_total[b]);
  return out;
}

struct EvalReport {
  double acc = 0.0;
  double ppl = 0.0;
  std::map<int, double> bleu;      // n in {2,3,4}
  std::map<int, double> distinct;  // n in {1,2}
  double rouge_l = 0.0;
  Mat distribution;  // kProgressIntervals x num_strategies

  nlohmann::json to_json() const {
    nlohmann::json j{{"acc", acc}, {"ppl", ppl}, {"rouge_l", rouge_l}};
    for (const auto& [n, v] : bleu) j["bleu"]["b-" + std::to_string(n)] = v;
    for (const auto& [n, v] : distinct) j["distinct"]["d-" + std::to_string(n)] = v;
    nlohmann::json rows = nlohmann::json::array();
    for (int b = 0; b < distribution.rows; ++b) {
      nlohmann::json row = nlohmann::json::array();
      for (int s = 0; s < distribution.cols; ++s) row.push_back(distribution(b, s));
      rows.push_back(row);
    }
    j["distribution"] = rows;
    return j;
  }
};

// Fig.-4-shaped export: one row per progress interval, one column per
// strategy name.
inline std::string distribution_csv(const Mat& distribution) {
  if (distribution.cols > kNumStrategies)
    throw std::invalid_argument("distribution_csv: too many columns");
  std::ostringstream out;
  out << "interval";
  for (int s = 0; s < distribution.cols; ++s) out << ",\"" << strategy_names()[s] << "\"";
  out << "\n";
  for (int b = 0; b < distribution.rows; ++b) {
    double lo = static_cast<double>(b) / distribution.rows;
    double hi = static_cast<double>(b + 1) / distribution.rows;
    out << "[" << lo << "," << hi << (b + 1 == distribution.rows ? "]" : ")");
    for (int s = 0; s < distribution.cols; ++s) out << "," << distribution(b, s);
    out << "\n";
  }
  return out.str();
}

}  // namespace fado
