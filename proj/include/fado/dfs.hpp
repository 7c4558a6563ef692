#pragma once

#include <cmath>
#include <vector>

#include "fado/encoder.hpp"
#include "fado/strategies.hpp"

namespace fado {

// Strategy selector head: [s;c;r] -> affine 3d->d -> tanh -> MLP -> l logits.
struct DfsParams {
  Mat w_o, b_o;  // 3d -> d
  std::vector<Mat> hidden_w, hidden_b;
  Mat w_out, b_out;  // d -> l

  DfsParams() = default;
  DfsParams(Rng& rng, int d, int l, int hidden_layers = 0)
      : w_o(nn::init_weight(rng, 3 * d, d)), b_o(1, d),
        w_out(), b_out(1, l) {
    for (int i = 0; i < hidden_layers; ++i) {
      hidden_w.push_back(nn::init_weight(rng, d, d));
      hidden_b.push_back(Mat(1, d));
    }
    w_out = nn::init_weight(rng, d, l);
  }

  void visit(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".w_o", w_o);
    fn(prefix + ".b_o", b_o);
    for (size_t i = 0; i < hidden_w.size(); ++i) {
      fn(prefix + ".hidden" + std::to_string(i) + ".w", hidden_w[i]);
      fn(prefix + ".hidden" + std::to_string(i) + ".b", hidden_b[i]);
    }
    fn(prefix + ".w_out", w_out);
    fn(prefix + ".b_out", b_out);
  }
};

inline ad::Var select_strategy(ad::Tape& t, nn::ParamBinder& bind, DfsParams& p, ad::Var s,
                               ad::Var c, ad::Var r) {
  int d = p.w_o.rows / 3;
  for (ad::Var v : {s, c, r}) {
    const Mat& m = t.val(v);
    if (m.rows != 1 || m.cols != d)
      throw std::invalid_argument("select_strategy: inputs must be 1 x d vectors");
  }
  ad::Var x = t.concat_cols(t.concat_cols(s, c), r);
  ad::Var h = t.tanh_(ad::affine(t, x, bind(p.w_o), bind(p.b_o)));
  for (size_t i = 0; i < p.hidden_w.size(); ++i)
    h = t.tanh_(ad::affine(t, h, bind(p.hidden_w[i]), bind(p.hidden_b[i])));
  return ad::affine(t, h, bind(p.w_out), bind(p.b_out));
}

struct StrategyProbs {
  std::vector<double> probs;  // length l, sums to 1
  Strategy argmax = Strategy::question;
};

// Stable softmax over a 1 x l logit row; ties broken by lowest id.
inline StrategyProbs strategy_probs(const Mat& logits) {
  if (logits.rows != 1 || logits.cols < 1)
    throw std::invalid_argument("strategy_probs: expected a single logit row");
  if (!all_finite(logits)) throw std::invalid_argument("strategy_probs: non-finite logits");
  double mx = logits(0, 0);
  for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, logits(0, j));
  StrategyProbs out;
  out.probs.resize(logits.cols);
  double z = 0.0;
  for (int j = 0; j < logits.cols; ++j) {
    out.probs[j] = std::exp(logits(0, j) - mx);
    z += out.probs[j];
  }
  int best = 0;
  for (int j = 0; j < logits.cols; ++j) {
    out.probs[j] /= z;
    if (out.probs[j] > out.probs[best]) best = j;
  }
  out.argmax = strategy_from_id(best);
  return out;
}

}  // namespace fado
