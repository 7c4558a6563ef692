#pragma once

#include <string>
#include <vector>

#include "fado/dcr.hpp"
#include "fado/dfs.hpp"
#include "fado/encoder.hpp"
#include "fado/strategies.hpp"

namespace fado {

enum class DictMode { description, token };

inline const char* dict_mode_name(DictMode m) {
  return m == DictMode::description ? "description" : "token";
}

inline DictMode dict_mode_from_name(const std::string& name) {
  if (name == "description") return DictMode::description;
  if (name == "token") return DictMode::token;
  throw std::invalid_argument("unknown dictionary mode: " + name);
}

struct ModelConfig {
  EncoderConfig enc;
  int num_strategies = kNumStrategies;
  int dfs_hidden_layers = 0;
  FlowConfig flow;
  DictMode dict_mode = DictMode::description;

  void validate() const {
    enc.validate();
    if (num_strategies < 1) throw std::invalid_argument("ModelConfig: need at least one strategy");
    if (dfs_hidden_layers < 0) throw std::invalid_argument("ModelConfig: negative MLP depth");
    flow.validate();
  }
};

// All learned tensors. Token embeddings are shared by the context encoder,
// the description encoder, and the decoder input; the strategy-history
// encoder has its own embedding table and stack.
struct ModelState {
  ModelConfig cfg;
  Mat tok_emb;    // vocab x d
  nn::TransformerParams ctx_enc;
  Mat stra_emb;   // num_strategies x d
  nn::TransformerParams stra_enc;
  Mat stra_null;  // 1 x d, encodes the empty strategy history
  Mat emo_proj;   // emotion_dim x d, bias-free
  DfsParams dfs;
  DcrParams dcr;
  nn::DecoderParams decoder;

  ModelState() = default;

  explicit ModelState(const ModelConfig& config) : cfg(config) {
    cfg.validate();
    Rng rng(cfg.enc.seed);
    const int d = cfg.enc.d;
    tok_emb = nn::init_weight(rng, cfg.enc.vocab_size, d);
    ctx_enc = nn::TransformerParams(rng, d, cfg.enc.layers, cfg.enc.max_positions);
    stra_emb = nn::init_weight(rng, cfg.num_strategies, d);
    stra_enc = nn::TransformerParams(rng, d, cfg.enc.layers, cfg.enc.max_positions);
    stra_null = nn::init_weight(rng, 1, d);
    emo_proj = nn::init_weight(rng, cfg.enc.emotion_dim, d);
    dfs = DfsParams(rng, d, cfg.num_strategies, cfg.dfs_hidden_layers);
    dcr = DcrParams(rng, d, cfg.num_strategies);
    decoder = nn::DecoderParams(rng, d, cfg.enc.layers, cfg.enc.max_positions,
                                cfg.enc.vocab_size);
  }

  void visit_params(const ParamVisitor& fn) {
    fn("tok_emb", tok_emb);
    ctx_enc.visit("ctx_enc", fn);
    fn("stra_emb", stra_emb);
    stra_enc.visit("stra_enc", fn);
    fn("stra_null", stra_null);
    fn("emo_proj", emo_proj);
    dfs.visit("dfs", fn);
    dcr.visit("dcr", fn);
    decoder.visit("decoder", fn);
  }

  size_t num_parameters() {
    size_t n = 0;
    visit_params([&](const std::string&, Mat& m) { n += m.a.size(); });
    return n;
  }
};

// H = context encoder over the [CLS] u1 [SEP] u2 ... layout.
inline ad::Var encode_context(ad::Tape& t, nn::ParamBinder& bind, ModelState& m,
                              const ContextLayout& layout) {
  ad::Var x = nn::embed_sequence(t, bind, m.tok_emb, m.ctx_enc.pos_emb, layout.ids);
  return nn::encoder_forward(t, bind, m.ctx_enc, x, m.cfg.enc.heads);
}

// s = mean-pooled strategy-history encoding; empty history yields the
// learned null vector.
inline ad::Var encode_strategy_history(ad::Tape& t, nn::ParamBinder& bind, ModelState& m,
                                       const std::vector<Strategy>& history) {
  if (history.empty()) return bind(m.stra_null);
  std::vector<int> ids;
  for (Strategy s : history) {
    int id = static_cast<int>(s);
    if (id < 0 || id >= m.cfg.num_strategies)
      throw std::out_of_range("encode_strategy_history: unknown strategy id");
    ids.push_back(id);
  }
  ad::Var x = nn::embed_sequence(t, bind, m.stra_emb, m.stra_enc.pos_emb, ids);
  ad::Var enc = nn::encoder_forward(t, bind, m.stra_enc, x, m.cfg.enc.heads);
  return t.mean_rows(enc);
}

// r = mean-pooled emotion rows projected from emotion_dim to d.
inline ad::Var project_emotion(ad::Tape& t, nn::ParamBinder& bind, ModelState& m,
                               const Mat& emotion_rows) {
  if (emotion_rows.cols != m.cfg.enc.emotion_dim)
    throw std::invalid_argument("project_emotion: emotion width mismatch");
  ad::Var e = t.constant(emotion_rows);
  return t.matmul(t.mean_rows(e), bind(m.emo_proj));
}

}  // namespace fado
