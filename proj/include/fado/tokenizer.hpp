#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fado/strategies.hpp"

namespace fado {

// Whitespace + punctuation word tokenizer with ASCII lowercasing. Runs of
// alphanumerics form one token; any other printable character is its own
// token.
inline std::vector<std::string> word_tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
      if (!std::isspace(c) && std::isprint(c)) out.push_back(std::string(1, static_cast<char>(c)));
    }
  }
  flush();
  return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

// Token id table. Ids 0..12 are reserved; word types follow by training-split
// frequency (ties broken lexicographically). CLS/SEP and the strategy marker
// tokens never appear in plain text, so metric n-gram space stays clean.
class Vocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kCls = 1;
  static constexpr int kSep = 2;
  static constexpr int kBos = 3;
  static constexpr int kEos = 4;
  static constexpr int kStrategyBase = 5;  // 8 marker tokens, one per strategy
  static constexpr int kNumReserved = kStrategyBase + kNumStrategies;

  Vocab() { init_reserved(); }

  // Build from training-split texts, capped at `max_types` total entries.
  static Vocab build(const std::vector<std::string>& texts, int max_types = 8000) {
    if (max_types <= kNumReserved) throw std::invalid_argument("Vocab::build: cap too small");
    std::unordered_map<std::string, long long> counts;
    for (const auto& t : texts)
      for (auto& w : word_tokenize(t)) ++counts[w];
    // highest count first, then lexicographic, for a deterministic table
    std::vector<std::pair<std::string, long long>> order(counts.begin(), counts.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    Vocab v;
    for (const auto& [word, n] : order) {
      if (static_cast<int>(v.tokens_.size()) >= max_types) break;
      v.add(word);
    }
    return v;
  }

  static Vocab from_tokens(const std::vector<std::string>& tokens) {
    Vocab v;
    if (tokens.size() < kNumReserved) throw std::invalid_argument("Vocab: token list too short");
    for (int i = 0; i < kNumReserved; ++i)
      if (tokens[i] != v.tokens_[i]) throw std::invalid_argument("Vocab: reserved entries differ");
    for (size_t i = kNumReserved; i < tokens.size(); ++i) v.add(tokens[i]);
    return v;
  }

  int id(const std::string& w) const {
    auto it = index_.find(w);
    return it == index_.end() ? kUnk : it->second;
  }

  std::vector<int> encode(const std::string& text) const {
    std::vector<int> out;
    for (auto& w : word_tokenize(text)) out.push_back(id(w));
    return out;
  }

  const std::string& token(int tid) const {
    if (tid < 0 || tid >= size()) throw std::out_of_range("Vocab::token: bad id");
    return tokens_[tid];
  }

  std::string decode(const std::vector<int>& ids) const {
    std::string out;
    for (int tid : ids) {
      if (is_special(tid)) continue;
      if (!out.empty()) out.push_back(' ');
      out += token(tid);
    }
    return out;
  }

  int size() const { return static_cast<int>(tokens_.size()); }
  bool is_special(int tid) const { return tid >= 0 && tid < kNumReserved; }
  static int strategy_token(Strategy s) { return kStrategyBase + static_cast<int>(s); }

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  void init_reserved() {
    tokens_ = {"[UNK]", "[CLS]", "[SEP]", "[BOS]", "[EOS]"};
    for (int i = 0; i < kNumStrategies; ++i) tokens_.push_back("[STRATEGY_" + std::to_string(i) + "]");
    for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) index_[tokens_[i]] = i;
  }

  void add(const std::string& w) {
    if (index_.count(w)) return;
    index_[w] = static_cast<int>(tokens_.size());
    tokens_.push_back(w);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Flattened [CLS] u1 [SEP] u2 ... uM layout. segment[t] is the utterance
// index owning position t, or -1 for CLS/SEP.
struct ContextLayout {
  std::vector<int> ids;
  std::vector<int> segment;

  int length() const { return static_cast<int>(ids.size()); }
};

inline ContextLayout build_context_layout(const std::vector<std::vector<int>>& utterances) {
  if (utterances.empty()) throw std::invalid_argument("build_context_layout: no utterances");
  ContextLayout layout;
  layout.ids.push_back(Vocab::kCls);
  layout.segment.push_back(-1);
  for (size_t i = 0; i < utterances.size(); ++i) {
    if (i) {
      layout.ids.push_back(Vocab::kSep);
      layout.segment.push_back(-1);
    }
    for (int tid : utterances[i]) {
      layout.ids.push_back(tid);
      layout.segment.push_back(static_cast<int>(i));
    }
  }
  return layout;
}

}  // namespace fado
