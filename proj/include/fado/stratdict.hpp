#pragma once

#include <array>
#include <fstream>
#include <string>

#include <json.hpp>

#include "fado/model.hpp"
#include "fado/tokenizer.hpp"

namespace fado {

using json = nlohmann::json;

// Total map from strategy to its natural-language description.
class StrategyDictionary {
 public:
  StrategyDictionary() : entries_(default_texts()) {}

  const std::string& lookup(Strategy s) const { return entries_[static_cast<size_t>(s)]; }

  void set(Strategy s, std::string text) {
    if (text.empty()) throw std::invalid_argument("strategy description must be non-empty");
    entries_[static_cast<size_t>(s)] = std::move(text);
  }

  json to_json() const {
    json j = json::object();
    for (int i = 0; i < kNumStrategies; ++i) j[strategy_names()[i]] = entries_[i];
    return j;
  }

  static StrategyDictionary from_json(const json& j) {
    StrategyDictionary dict;
    for (int i = 0; i < kNumStrategies; ++i) {
      const std::string& name = strategy_names()[i];
      if (!j.contains(name))
        throw std::invalid_argument("strategy dictionary missing entry: " + name);
      dict.set(strategy_from_id(i), j.at(name).get<std::string>());
    }
    return dict;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write strategy dictionary: " + path);
    out << to_json().dump(2) << "\n";
  }

  static StrategyDictionary from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read strategy dictionary: " + path);
    json j;
    in >> j;
    return from_json(j);
  }

  bool operator==(const StrategyDictionary& o) const { return entries_ == o.entries_; }

 private:
  static std::array<std::string, kNumStrategies> default_texts() {
    return {
        "Asking for information related to the problem to help the help-seeker articulate the "
        "issues that they face. Open-ended questions are best, and closed questions can be used "
        "to get specific information.",
        "A simple, more concise rephrasing of the help-seeker's statements that could help them "
        "see their situation more clearly.",
        "Articulate and describe the help-seeker's feelings.",
        "Divulge similar experiences that you have had or emotions that you share with the "
        "help-seeker to express your empathy.",
        "Affirm the help-seeker's strengths, motivation, and capabilities and provide "
        "reassurance and encouragement.",
        "Provide suggestions about how to change the situation, but be careful to not overstep "
        "and tell them what to do.",
        "Provide useful information to the help-seeker, for example with data, facts, opinions, "
        "resources, or by answering questions.",
        "Exchange pleasantries and use other support strategies that do not fall into the above "
        "categories."};
  }

  std::array<std::string, kNumStrategies> entries_;
};

// V: the generator's strategy conditioning rows. Description mode encodes
// [CLS] + description tokens with the shared context encoder; token mode
// encodes [CLS] + the strategy's marker token instead.
inline ad::Var encode_description(ad::Tape& t, nn::ParamBinder& bind, ModelState& m,
                                  const StrategyDictionary& dict, const Vocab& vocab,
                                  Strategy strategy, DictMode mode) {
  std::vector<int> ids{Vocab::kCls};
  if (mode == DictMode::description) {
    for (int tid : vocab.encode(dict.lookup(strategy))) ids.push_back(tid);
  } else {
    ids.push_back(Vocab::strategy_token(strategy));
  }
  ad::Var x = nn::embed_sequence(t, bind, m.tok_emb, m.ctx_enc.pos_emb, ids);
  return nn::encoder_forward(t, bind, m.ctx_enc, x, m.cfg.enc.heads);
}

inline ad::Var encode_description(ad::Tape& t, nn::ParamBinder& bind, ModelState& m,
                                  const StrategyDictionary& dict, const Vocab& vocab,
                                  Strategy strategy) {
  return encode_description(t, bind, m, dict, vocab, strategy, m.cfg.dict_mode);
}

}  // namespace fado
