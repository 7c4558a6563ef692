#pragma once

#include "fado/encoder.hpp"

namespace fado {

struct FlowConfig {
  double alpha = 0.2;
  double beta = 0.2;

  void validate() const {
    if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0)
      throw std::invalid_argument("FlowConfig: alpha and beta must lie in [0,1]");
  }
};

// Double control reader gates: g_c = sigmoid(c W_c + b_c) over strategy
// slots, g_o = sigmoid(o W_g + b_g) over hidden dimensions. Gate input is
// the raw pre-softmax logit vector o.
struct DcrParams {
  Mat w_c, b_c;  // d -> l
  Mat w_g, b_g;  // l -> d

  DcrParams() = default;
  DcrParams(Rng& rng, int d, int l)
      : w_c(nn::init_weight(rng, d, l)), b_c(1, l),
        w_g(nn::init_weight(rng, l, d)), b_g(1, d) {}

  void visit(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".w_c", w_c);
    fn(prefix + ".b_c", b_c);
    fn(prefix + ".w_g", w_g);
    fn(prefix + ".b_g", b_g);
  }
};

struct GateVars {
  ad::Var g_c;  // 1 x l
  ad::Var g_o;  // 1 x d
};

inline GateVars control_gates(ad::Tape& t, nn::ParamBinder& bind, DcrParams& p, ad::Var c,
                              ad::Var o) {
  if (t.val(c).rows != 1 || t.val(c).cols != p.w_c.rows)
    throw std::invalid_argument("control_gates: c must be 1 x d");
  if (t.val(o).rows != 1 || t.val(o).cols != p.w_g.rows)
    throw std::invalid_argument("control_gates: o must be 1 x l");
  GateVars g;
  g.g_c = t.sigmoid_(ad::affine(t, c, bind(p.w_c), bind(p.b_c)));
  g.g_o = t.sigmoid_(ad::affine(t, o, bind(p.w_g), bind(p.b_g)));
  return g;
}

struct FlowVars {
  ad::Var o_prime;  // 1 x l
  ad::Var h_prime;  // T x d
};

// o'_k = (1-beta)o_k + beta g_c_k o_k; h'_{t,i} = (1-alpha)h_{t,i} + alpha
// g_o_i h_{t,i}, the same gate row broadcast over every token position.
inline FlowVars apply_flows(ad::Tape& t, ad::Var o, ad::Var h, const GateVars& gates,
                            const FlowConfig& cfg) {
  cfg.validate();
  if (!t.val(o).same_shape(t.val(gates.g_c)))
    throw std::invalid_argument("apply_flows: o and g_c shapes differ");
  if (t.val(h).cols != t.val(gates.g_o).cols)
    throw std::invalid_argument("apply_flows: h and g_o widths differ");
  FlowVars out;
  out.o_prime = t.axpby(1.0 - cfg.beta, o, cfg.beta, t.mul(gates.g_c, o));
  out.h_prime = t.axpby(1.0 - cfg.alpha, h, cfg.alpha, t.mul_rowvec(h, gates.g_o));
  return out;
}

}  // namespace fado
