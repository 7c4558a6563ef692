#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fado/autodiff.hpp"
#include "fado/mat.hpp"
#include "fado/rng.hpp"
#include "fado/tokenizer.hpp"

namespace fado {

using ParamVisitor = std::function<void(const std::string&, Mat&)>;

struct EncoderConfig {
  int d = 64;
  int layers = 2;
  int heads = 2;
  int vocab_size = 0;
  int max_positions = 512;
  int emotion_dim = 16;
  uint64_t seed = 1;

  void validate() const {
    if (d <= 0 || layers <= 0 || heads <= 0 || vocab_size <= 0 || max_positions <= 0 ||
        emotion_dim <= 0)
      throw std::invalid_argument("EncoderConfig: all dimensions must be positive");
    if (d % heads != 0) throw std::invalid_argument("EncoderConfig: d must be divisible by heads");
  }
};

namespace nn {

inline Mat init_weight(Rng& rng, int in, int out) {
  Mat w(in, out);
  double bound = 1.0 / std::sqrt(static_cast<double>(in));
  fill_uniform(w, rng, -bound, bound);
  return w;
}

struct LayerNormParams {
  Mat gain, bias;

  LayerNormParams() = default;
  explicit LayerNormParams(int d) : gain(Mat::full(1, d, 1.0)), bias(1, d) {}

  void visit(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".gain", gain);
    fn(prefix + ".bias", bias);
  }
};

struct AttentionParams {
  Mat wq, bq, wk, bk, wv, bv, wo, bo;

  AttentionParams() = default;
  AttentionParams(Rng& rng, int d)
      : wq(init_weight(rng, d, d)), bq(1, d),
        wk(init_weight(rng, d, d)), bk(1, d),
        wv(init_weight(rng, d, d)), bv(1, d),
        wo(init_weight(rng, d, d)), bo(1, d) {}

  void visit(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".wq", wq);
    fn(prefix + ".bq", bq);
    fn(prefix + ".wk", wk);
    fn(prefix + ".bk", bk);
    fn(prefix + ".wv", wv);
    fn(prefix + ".bv", bv);
    fn(prefix + ".wo", wo);
    fn(prefix + ".bo", bo);
  }
};

struct FfnParams {
  Mat w1, b1, w2, b2;

  FfnParams() = default;
  FfnParams(Rng& rng, int d)
      : w1(init_weight(rng, d, 4 * d)), b1(1, 4 * d),
        w2(init_weight(rng, 4 * d, d)), b2(1, d) {}

  void visit(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".w1", w1);
    fn(prefix + ".b1", b1);
    fn(prefix + ".w2", w2);
    fn(prefix + ".b2", b2);
  }
};

struct EncoderLayerParams {
  LayerNormParams ln1, ln2;
  AttentionParams attn;
  FfnParams ffn;

  EncoderLayerParams() = default;
  EncoderLayerParams(Rng& rng, int d) : ln1(d), ln2(d), attn(rng, d), ffn(rng, d) {}

  void visit(const std::string& prefix, const ParamVisitor& fn) {
    ln1.visit(prefix + ".ln1", fn);
    attn.visit(prefix + ".attn", fn);
    ln2.visit(prefix + ".ln2", fn);
    ffn.visit(prefix + ".ffn", fn);
  }
};

struct DecoderLayerParams {
  LayerNormParams ln1, ln2, ln3;
  AttentionParams self_attn, cross_attn;
  FfnParams ffn;

  DecoderLayerParams() = default;
  DecoderLayerParams(Rng& rng, int d)
      : ln1(d), ln2(d), ln3(d), self_attn(rng, d), cross_attn(rng, d), ffn(rng, d) {}

  void visit(const std::string& prefix, const ParamVisitor& fn) {
    ln1.visit(prefix + ".ln1", fn);
    self_attn.visit(prefix + ".self_attn", fn);
    ln2.visit(prefix + ".ln2", fn);
    cross_attn.visit(prefix + ".cross_attn", fn);
    ln3.visit(prefix + ".ln3", fn);
    ffn.visit(prefix + ".ffn", fn);
  }
};

struct TransformerParams {
  std::vector<EncoderLayerParams> layers;
  LayerNormParams final_ln;
  Mat pos_emb;

  TransformerParams() = default;
  TransformerParams(Rng& rng, int d, int n_layers, int max_positions) : final_ln(d) {
    for (int i = 0; i < n_layers; ++i) layers.emplace_back(rng, d);
    pos_emb = init_weight(rng, max_positions, d);
  }

  void visit(const std::string& prefix, const ParamVisitor& fn) {
    for (size_t i = 0; i < layers.size(); ++i)
      layers[i].visit(prefix + ".layer" + std::to_string(i), fn);
    final_ln.visit(prefix + ".final_ln", fn);
    fn(prefix + ".pos_emb", pos_emb);
  }
};

struct DecoderParams {
  std::vector<DecoderLayerParams> layers;
  LayerNormParams final_ln;
  Mat pos_emb;
  Mat out_proj, out_bias;

  DecoderParams() = default;
  DecoderParams(Rng& rng, int d, int n_layers, int max_positions, int vocab_size) : final_ln(d) {
    for (int i = 0; i < n_layers; ++i) layers.emplace_back(rng, d);
    pos_emb = init_weight(rng, max_positions, d);
    out_proj = init_weight(rng, d, vocab_size);
    out_bias = Mat(1, vocab_size);
  }

  void visit(const std::string& prefix, const ParamVisitor& fn) {
    for (size_t i = 0; i < layers.size(); ++i)
      layers[i].visit(prefix + ".layer" + std::to_string(i), fn);
    final_ln.visit(prefix + ".final_ln", fn);
    fn(prefix + ".pos_emb", pos_emb);
    fn(prefix + ".out_proj", out_proj);
    fn(prefix + ".out_bias", out_bias);
  }
};

// Lazily binds parameter matrices to tape leaves, one Var per Mat per tape.
class ParamBinder {
 public:
  explicit ParamBinder(ad::Tape& tape) : tape_(&tape) {}

  ad::Var operator()(Mat& m) {
    auto it = bound_.find(&m);
    if (it != bound_.end()) return it->second;
    ad::Var v = tape_->leaf(m);
    bound_.emplace(&m, v);
    return v;
  }

  // Pre-register an existing tape var for a parameter; later binds of the
  // same Mat reuse it.
  void alias(Mat& m, ad::Var v) { bound_[&m] = v; }

  const std::unordered_map<Mat*, ad::Var>& bound() const { return bound_; }
  ad::Tape& tape() { return *tape_; }

 private:
  ad::Tape* tape_;
  std::unordered_map<Mat*, ad::Var> bound_;
};

inline ad::Var attention(ad::Tape& t, ParamBinder& bind, AttentionParams& p, ad::Var x,
                         ad::Var mem, int heads, const Mat* mask) {
  int d = t.val(x).cols;
  int dh = d / heads;
  ad::Var q = ad::affine(t, x, bind(p.wq), bind(p.bq));
  ad::Var k = ad::affine(t, mem, bind(p.wk), bind(p.bk));
  ad::Var v = ad::affine(t, mem, bind(p.wv), bind(p.bv));
  double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<ad::Var> head_ctx;
  for (int h = 0; h < heads; ++h) {
    ad::Var qh = t.slice_cols(q, h * dh, (h + 1) * dh);
    ad::Var kh = t.slice_cols(k, h * dh, (h + 1) * dh);
    ad::Var vh = t.slice_cols(v, h * dh, (h + 1) * dh);
    ad::Var scores = t.scale(t.matmul(qh, t.transpose_(kh)), scale);
    ad::Var att = t.softmax_rows(scores, mask);
    head_ctx.push_back(t.matmul(att, vh));
  }
  ad::Var ctx = head_ctx[0];
  for (size_t h = 1; h < head_ctx.size(); ++h) ctx = t.concat_cols(ctx, head_ctx[h]);
  return ad::affine(t, ctx, bind(p.wo), bind(p.bo));
}

inline ad::Var ffn(ad::Tape& t, ParamBinder& bind, FfnParams& p, ad::Var x) {
  ad::Var h = t.gelu_(ad::affine(t, x, bind(p.w1), bind(p.b1)));
  return ad::affine(t, h, bind(p.w2), bind(p.b2));
}

// Pre-LN encoder stack over already-embedded inputs.
inline ad::Var encoder_forward(ad::Tape& t, ParamBinder& bind, TransformerParams& p, ad::Var x,
                               int heads) {
  for (auto& layer : p.layers) {
    ad::Var n1 = t.layer_norm_rows(x, bind(layer.ln1.gain), bind(layer.ln1.bias));
    x = t.add(x, attention(t, bind, layer.attn, n1, n1, heads, nullptr));
    ad::Var n2 = t.layer_norm_rows(x, bind(layer.ln2.gain), bind(layer.ln2.bias));
    x = t.add(x, ffn(t, bind, layer.ffn, n2));
  }
  return t.layer_norm_rows(x, bind(p.final_ln.gain), bind(p.final_ln.bias));
}

inline Mat causal_mask(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m(i, j) = -1e30;
  return m;
}

// Pre-LN decoder stack: causal self-attention, then cross-attention over
// `memory`, then the feed-forward block. Returns final-normed states T x d.
inline ad::Var decoder_forward(ad::Tape& t, ParamBinder& bind, DecoderParams& p, ad::Var x,
                               ad::Var memory, int heads, const Mat& self_mask) {
  for (auto& layer : p.layers) {
    ad::Var n1 = t.layer_norm_rows(x, bind(layer.ln1.gain), bind(layer.ln1.bias));
    x = t.add(x, attention(t, bind, layer.self_attn, n1, n1, heads, &self_mask));
    ad::Var n2 = t.layer_norm_rows(x, bind(layer.ln2.gain), bind(layer.ln2.bias));
    x = t.add(x, attention(t, bind, layer.cross_attn, n2, memory, heads, nullptr));
    ad::Var n3 = t.layer_norm_rows(x, bind(layer.ln3.gain), bind(layer.ln3.bias));
    x = t.add(x, ffn(t, bind, layer.ffn, n3));
  }
  return t.layer_norm_rows(x, bind(p.final_ln.gain), bind(p.final_ln.bias));
}

// token embedding + learned positions for a given id sequence
inline ad::Var embed_sequence(ad::Tape& t, ParamBinder& bind, Mat& tok_emb, Mat& pos_emb,
                              const std::vector<int>& ids) {
  if (ids.empty()) throw std::invalid_argument("embed_sequence: empty input");
  if (static_cast<int>(ids.size()) > pos_emb.rows)
    throw std::length_error("embed_sequence: sequence exceeds max_positions");
  std::vector<int> positions(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
  ad::Var tok = t.rows_gather(bind(tok_emb), ids);
  ad::Var pos = t.rows_gather(bind(pos_emb), positions);
  return t.add(tok, pos);
}

}  // namespace nn

inline ad::Var pool_mean(ad::Tape& t, ad::Var rows) {
  if (t.val(rows).rows < 1) throw std::invalid_argument("pool_mean: empty input");
  return t.mean_rows(rows);
}

inline Mat pool_mean(const Mat& rows) {
  if (rows.rows < 1) throw std::invalid_argument("pool_mean: empty input");
  Mat out(1, rows.cols);
  for (int j = 0; j < rows.cols; ++j) {
    double s = 0;
    for (int i = 0; i < rows.rows; ++i) s += rows(i, j);
    out(0, j) = s / rows.rows;
  }
  return out;
}

}  // namespace fado
