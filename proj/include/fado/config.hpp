#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fado/examples.hpp"
#include "fado/generator.hpp"
#include "fado/model.hpp"
#include "fado/training.hpp"

namespace fado {

inline constexpr const char* kFadoVersion = "0.1.0";

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return true;
}

}  // namespace detail

// Flat "key = value" configuration with dotted namespaces. '#' starts a
// full-line comment; duplicate keys in one file are rejected so a sweep
// config cannot silently shadow itself.
class KvConfig {
 public:
  static KvConfig parse_text(const std::string& text) {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = detail::trim(line);
      if (t.empty() || t[0] == '#') continue;
      size_t eq = t.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
      std::string key = detail::trim(t.substr(0, eq));
      std::string value = detail::trim(t.substr(eq + 1));
      if (!detail::valid_key(key))
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad key '" + key + "'");
      if (!cfg.values_.emplace(key, value).second)
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return cfg;
  }

  static KvConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
  }

  // programmatic override (CLI flags beat file values)
  void set(const std::string& key, const std::string& value) {
    if (!detail::valid_key(key)) throw std::invalid_argument("bad config key '" + key + "'");
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& def) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
  }

  double get_double(const std::string& key, double def) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    size_t pos = 0;
    double v;
    try {
      v = std::stod(it->second, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("config key '" + key + "': not a number: " + it->second);
    }
    if (pos != it->second.size())
      throw std::invalid_argument("config key '" + key + "': not a number: " + it->second);
    return v;
  }

  long long get_int(const std::string& key, long long def) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    size_t pos = 0;
    long long v;
    try {
      v = std::stoll(it->second, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("config key '" + key + "': not an integer: " + it->second);
    }
    if (pos != it->second.size())
      throw std::invalid_argument("config key '" + key + "': not an integer: " + it->second);
    return v;
  }

  bool get_bool(const std::string& key, bool def) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::invalid_argument("config key '" + key + "': expected true/false/1/0, got " + it->second);
  }

  // keys present in the source that no getter ever touched
  std::vector<std::string> unconsumed() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!consumed_.count(k)) out.push_back(k);
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

inline AblationConfig ablation_from_kv(const KvConfig& kv) {
  AblationConfig ab;
  ab.no_strategy_history = kv.get_bool("ablation.no_strategy_history", false);
  ab.no_emotion = kv.get_bool("ablation.no_emotion", false);
  ab.no_turn_feedback = kv.get_bool("ablation.no_turn_feedback", false);
  ab.no_conv_feedback = kv.get_bool("ablation.no_conv_feedback", false);
  ab.no_s2c = kv.get_bool("ablation.no_s2c", false);
  ab.no_c2s = kv.get_bool("ablation.no_c2s", false);
  ab.no_dictionary = kv.get_bool("ablation.no_dictionary", false);
  return ab;
}

inline ModelConfig model_config_from_kv(const KvConfig& kv, int vocab_size) {
  ModelConfig cfg;
  cfg.enc.d = static_cast<int>(kv.get_int("model.d", 32));
  cfg.enc.layers = static_cast<int>(kv.get_int("model.layers", 2));
  cfg.enc.heads = static_cast<int>(kv.get_int("model.heads", 2));
  cfg.enc.vocab_size = vocab_size;
  cfg.enc.max_positions = static_cast<int>(kv.get_int("model.max_positions", 256));
  cfg.enc.emotion_dim = static_cast<int>(kv.get_int("model.emotion_dim", 8));
  cfg.enc.seed = static_cast<uint64_t>(kv.get_int("model.seed", 1));
  cfg.dfs_hidden_layers = static_cast<int>(kv.get_int("model.dfs_hidden_layers", 0));
  cfg.flow.alpha = kv.get_double("dcr.alpha", cfg.flow.alpha);
  cfg.flow.beta = kv.get_double("dcr.beta", cfg.flow.beta);
  std::string mode = kv.get_string("model.dict_mode", "description");
  if (mode == "description")
    cfg.dict_mode = DictMode::description;
  else if (mode == "token")
    cfg.dict_mode = DictMode::token;
  else
    throw std::invalid_argument("model.dict_mode must be 'description' or 'token'");
  cfg.validate();
  return cfg;
}

// marks the model.* keys consumed without validating, for commands that take
// their model configuration from a checkpoint
inline void consume_model_keys(const KvConfig& kv) {
  (void)kv.get_int("model.d", 0);
  (void)kv.get_int("model.layers", 0);
  (void)kv.get_int("model.heads", 0);
  (void)kv.get_int("model.max_positions", 0);
  (void)kv.get_int("model.emotion_dim", 0);
  (void)kv.get_int("model.seed", 0);
  (void)kv.get_int("model.dfs_hidden_layers", 0);
  (void)kv.get_double("dcr.alpha", 0.0);
  (void)kv.get_double("dcr.beta", 0.0);
  (void)kv.get_string("model.dict_mode", "");
}

inline TrainConfig train_config_from_kv(const KvConfig& kv) {
  TrainConfig cfg;
  cfg.learning_rate = kv.get_double("train.lr", cfg.learning_rate);
  cfg.warmup_steps = static_cast<int>(kv.get_int("train.warmup_steps", cfg.warmup_steps));
  cfg.epochs = static_cast<int>(kv.get_int("train.epochs", cfg.epochs));
  cfg.batch_size = static_cast<int>(kv.get_int("train.batch_size", cfg.batch_size));
  cfg.adam_beta1 = kv.get_double("train.adam_beta1", cfg.adam_beta1);
  cfg.adam_beta2 = kv.get_double("train.adam_beta2", cfg.adam_beta2);
  cfg.adam_eps = kv.get_double("train.adam_eps", cfg.adam_eps);
  cfg.weight_decay = kv.get_double("train.weight_decay", cfg.weight_decay);
  cfg.grad_clip = kv.get_double("train.grad_clip", cfg.grad_clip);
  cfg.mu = kv.get_double("train.mu", cfg.mu);
  cfg.alpha = kv.get_double("dcr.alpha", cfg.alpha);
  cfg.beta = kv.get_double("dcr.beta", cfg.beta);
  cfg.loss_eps = kv.get_double("train.loss_eps", cfg.loss_eps);
  cfg.max_steps = static_cast<int>(kv.get_int("train.max_steps", cfg.max_steps));
  cfg.ablation = ablation_from_kv(kv);
  return cfg;
}

inline DecodingConfig decoding_config_from_kv(const KvConfig& kv) {
  DecodingConfig cfg;
  cfg.top_p = kv.get_double("decode.top_p", cfg.top_p);
  cfg.temperature = kv.get_double("decode.temperature", cfg.temperature);
  cfg.repetition_penalty = kv.get_double("decode.repetition_penalty", cfg.repetition_penalty);
  cfg.max_new_tokens = static_cast<int>(kv.get_int("decode.max_new_tokens", cfg.max_new_tokens));
  cfg.validate();
  return cfg;
}

inline ExampleBuildOptions example_options_from_kv(const KvConfig& kv) {
  ExampleBuildOptions opt;
  opt.max_history_tokens =
      static_cast<int>(kv.get_int("corpus.max_history_tokens", opt.max_history_tokens));
  opt.feedback.mu = kv.get_double("train.mu", opt.feedback.mu);
  std::string mode = kv.get_string("feedback.conv_delta_mode", "centered");
  if (mode == "centered")
    opt.feedback.mode = ConvDeltaMode::centered;
  else if (mode == "literal_sum")
    opt.feedback.mode = ConvDeltaMode::literal_sum;
  else
    throw std::invalid_argument("feedback.conv_delta_mode must be 'centered' or 'literal_sum'");
  return opt;
}

}  // namespace fado
